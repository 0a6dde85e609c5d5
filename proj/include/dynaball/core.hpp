#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynaball/errors.hpp"

namespace dynaball {

using BinId = std::uint32_t;  // bins are 0-based everywhere, including files
using Round = std::uint32_t;  // rounds and ball indices are 1-based

// Canonical representation for both: sorted, distinct bin ids.
using Hyperedge = std::vector<BinId>;
using DChoice = std::vector<BinId>;

inline void sort_bins(std::vector<BinId>& bins) { std::sort(bins.begin(), bins.end()); }

// Canonical-form check used at module boundaries (model output, trace parse).
inline void validate_bins(const std::vector<BinId>& bins, std::uint32_t n, const char* what) {
  if (bins.empty()) throw ContractError(std::string(what) + ": empty bin set");
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (bins[i] >= n) throw ContractError(std::string(what) + ": bin id out of range");
    if (i > 0 && bins[i] <= bins[i - 1])
      throw ContractError(std::string(what) + ": bins not sorted/distinct");
  }
}

inline bool contains_bin(const std::vector<BinId>& sorted_bins, BinId b) {
  return std::binary_search(sorted_bins.begin(), sorted_bins.end(), b);
}

// Bin occupancy after some prefix of the process.
struct LoadState {
  std::vector<std::uint32_t> loads;
  std::uint64_t balls_placed = 0;

  LoadState() = default;
  explicit LoadState(std::uint32_t n) : loads(n, 0) {}
  std::uint32_t n() const { return static_cast<std::uint32_t>(loads.size()); }
};

// Places one ball, returns the height it lands at (the pre-increment load).
inline std::uint32_t apply_placement(LoadState& st, BinId bin) {
  if (bin >= st.loads.size()) throw ContractError("apply_placement: bin out of range");
  const std::uint32_t h = st.loads[bin];
  st.loads[bin] = h + 1;
  st.balls_placed += 1;
  return h;
}

inline std::uint32_t max_load(const LoadState& st) {
  std::uint32_t m = 0;
  for (auto v : st.loads) m = std::max(m, v);
  return m;
}

// load value -> number of bins with that load; all-zero state maps to {0: n}.
inline std::map<std::uint32_t, std::uint32_t> load_histogram(const LoadState& st) {
  std::map<std::uint32_t, std::uint32_t> h;
  for (auto v : st.loads) h[v] += 1;
  return h;
}

inline nlohmann::json summary_json(const LoadState& st) {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [load, count] : load_histogram(st)) hist[std::to_string(load)] = count;
  return nlohmann::json{{"n", st.n()},
                        {"balls_placed", st.balls_placed},
                        {"max_load", max_load(st)},
                        {"histogram", hist}};
}

// One placement event. ball == round: every round places exactly one ball.
struct BallRecord {
  Round ball = 0;
  Hyperedge edge;
  DChoice choice;
  BinId destination = 0;
  std::uint32_t height = 0;
};

struct AllocationTrace {
  std::uint32_t n = 0;
  std::uint32_t d = 0;
  std::string model_id;
  std::vector<BallRecord> records;

  // Re-executes the placements and checks internal consistency: sequential
  // 1-based ball indices, choice within edge, destination within choice, and
  // recorded height equal to the destination load at placement time.
  LoadState replay() const {
    LoadState st(n);
    Round expect = 1;
    for (const auto& r : records) {
      if (r.ball != expect)
        throw ContractError("trace replay: ball indices not sequential from 1");
      validate_bins(r.edge, n, "trace edge");
      validate_bins(r.choice, n, "trace choice");
      for (auto b : r.choice)
        if (!contains_bin(r.edge, b)) throw ContractError("trace replay: choice not within edge");
      if (!contains_bin(r.choice, r.destination))
        throw ContractError("trace replay: destination not within choice");
      if (apply_placement(st, r.destination) != r.height)
        throw ContractError("trace replay: height mismatch at ball " + std::to_string(r.ball));
      ++expect;
    }
    return st;
  }
};

namespace detail {

inline std::string join_bins(const std::vector<BinId>& bins) {
  std::string s;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (i > 0) s += ';';
    s += std::to_string(bins[i]);
  }
  return s;
}

inline std::vector<BinId> split_bins(const std::string& s) {
  std::vector<BinId> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t next = s.find(';', pos);
    if (next == std::string::npos) next = s.size();
    out.push_back(static_cast<BinId>(std::stoul(s.substr(pos, next - pos))));
    pos = next + 1;
  }
  return out;
}

}  // namespace detail

// Line format: ball,round,edge_bins(";"-joined),choice_bins(";"-joined),destination,height
// Header comments carry the metadata needed to reparse.
inline void dump_trace(const AllocationTrace& t, std::ostream& os) {
  os << "# dynaball trace\n";
  os << "# n=" << t.n << "\n";
  os << "# d=" << t.d << "\n";
  os << "# model=" << t.model_id << "\n";
  for (const auto& r : t.records) {
    os << r.ball << ',' << r.ball << ',' << detail::join_bins(r.edge) << ','
       << detail::join_bins(r.choice) << ',' << r.destination << ',' << r.height << "\n";
  }
}

inline std::string dump_trace(const AllocationTrace& t) {
  std::ostringstream os;
  dump_trace(t, os);
  return os.str();
}

inline AllocationTrace parse_trace(std::istream& is) {
  AllocationTrace t;
  bool have_n = false;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto grab = [&](const char* key) -> std::string {
        auto at = line.find(key);
        if (at == std::string::npos) return {};
        return line.substr(at + std::string(key).size());
      };
      if (auto v = grab("# n="); !v.empty()) t.n = std::stoul(v), have_n = true;
      if (auto v = grab("# d="); !v.empty()) t.d = std::stoul(v);
      if (auto v = grab("# model="); !v.empty()) t.model_id = v;
      continue;
    }
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (fields.size() < 6) {
      std::size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      fields.push_back(line.substr(pos, next - pos));
      pos = next + 1;
      if (pos > line.size()) break;
    }
    if (fields.size() != 6) throw ConfigError("trace parse: expected 6 fields, got line: " + line);
    BallRecord r;
    r.ball = static_cast<Round>(std::stoul(fields[0]));
    if (std::stoul(fields[1]) != r.ball)
      throw ConfigError("trace parse: ball/round mismatch at line: " + line);
    r.edge = detail::split_bins(fields[2]);
    r.choice = detail::split_bins(fields[3]);
    r.destination = static_cast<BinId>(std::stoul(fields[4]));
    r.height = static_cast<std::uint32_t>(std::stoul(fields[5]));
    t.records.push_back(std::move(r));
  }
  if (!have_n) throw ConfigError("trace parse: missing '# n=' header");
  return t;
}

inline AllocationTrace parse_trace(const std::string& text) {
  std::istringstream is(text);
  return parse_trace(is);
}

}  // namespace dynaball
