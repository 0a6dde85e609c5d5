#pragma once

// Hand-driven trace construction for diagnostics tests: place balls into
// chosen bins with automatically consistent heights, plus recursive "tower"
// builders that produce traces whose witness trees have a known exact shape.

#include <algorithm>
#include <cstdint>
#include <vector>

#include <dynaball/core.hpp>
#include <dynaball/errors.hpp>

namespace synthetic {

struct TraceBuilder {
  dynaball::AllocationTrace trace;
  dynaball::LoadState loads;

  TraceBuilder(std::uint32_t n, std::uint32_t d) : loads(n) {
    trace.n = n;
    trace.d = d;
    trace.model_id = "synthetic";
  }

  // Drops one ball into `dest`; records choice = edge = the given bin set.
  std::uint32_t place(dynaball::BinId dest, dynaball::DChoice choice) {
    std::sort(choice.begin(), choice.end());
    if (choice.size() != trace.d) throw dynaball::ContractError("synthetic: wrong choice size");
    if (!dynaball::contains_bin(choice, dest))
      throw dynaball::ContractError("synthetic: dest not in choice");
    const auto ball = static_cast<std::uint32_t>(trace.records.size()) + 1;
    const auto height = dynaball::apply_placement(loads, dest);
    trace.records.push_back({ball, choice, choice, dest, height});
    return ball;
  }
};

// A trace whose d-choice witness tree from `root_ball` at threshold c is
// all-blue and duplicate-free: every non-root node lands in the single bin
// it shares with the story so far, and brings d-1 globally fresh bins.
struct HyperTower {
  dynaball::AllocationTrace trace;
  std::uint32_t root_ball = 0;
  std::uint32_t root_height = 0;
};

namespace detail {

struct HyperTowerBuilder {
  std::uint32_t d, c;
  std::uint32_t next_bin;
  std::vector<dynaball::BinId> dumps;  // d-1 bins used only to pad filler choices
  std::vector<dynaball::BallRecord> records;
  std::vector<std::uint32_t> bin_load;

  HyperTowerBuilder(std::uint32_t d_, std::uint32_t c_) : d(d_), c(c_), next_bin(0) {
    for (std::uint32_t i = 0; i + 1 < d; ++i) dumps.push_back(fresh_bin());
  }

  dynaball::BinId fresh_bin() {
    bin_load.push_back(0);
    return next_bin++;
  }

  std::uint32_t emit(dynaball::BinId dest, dynaball::DChoice choice) {
    std::sort(choice.begin(), choice.end());
    const auto ball = static_cast<std::uint32_t>(records.size()) + 1;
    records.push_back({ball, choice, choice, dest, bin_load[dest]});
    bin_load[dest] += 1;
    return ball;
  }

  // Fills bin b with fillers at heights 0..c-1 and witness balls at heights
  // c..top, each witness ball pointing at d-1 freshly built towers.
  void fill_bin(dynaball::BinId b, std::uint32_t top) {
    for (std::uint32_t h = 0; h < c && h <= top; ++h) {
      dynaball::DChoice filler{b};
      filler.insert(filler.end(), dumps.begin(), dumps.end());
      emit(b, filler);
    }
    for (std::uint32_t h = c; h <= top; ++h) {
      dynaball::DChoice choice{b};
      for (std::uint32_t i = 0; i + 1 < d; ++i) {
        const auto f = fresh_bin();
        choice.push_back(f);
        if (h >= c + 1) fill_bin(f, h - 1);
      }
      emit(b, choice);
    }
  }
};

}  // namespace detail

inline HyperTower build_hyper_tower(std::uint32_t d, std::uint32_t root_height, std::uint32_t c) {
  if (c < 1 || d < 2 || root_height < c)
    throw dynaball::ContractError("hyper tower: need c >= 1, d >= 2, root_height >= c");
  detail::HyperTowerBuilder b(d, c);
  dynaball::DChoice root_choice;
  for (std::uint32_t i = 0; i < d; ++i) root_choice.push_back(b.fresh_bin());
  for (auto bin : root_choice)
    if (root_height >= 1) b.fill_bin(bin, root_height - 1);
  HyperTower out;
  out.root_ball = b.emit(root_choice.front(), root_choice);
  out.root_height = root_height;
  out.trace.n = b.next_bin;
  out.trace.d = d;
  out.trace.model_id = "synthetic-hyper-tower";
  out.trace.records = std::move(b.records);
  return out;
}

// Expected node count of the all-blue duplicate-free d-choice witness tree:
// independent recurrence over entry heights.
inline std::uint64_t hyper_tower_expected_size(std::uint32_t d, std::uint32_t root_height,
                                               std::uint32_t c) {
  std::vector<std::uint64_t> t(root_height + 1, 1);  // t[h]: subtree of a blue node at height h
  for (std::uint32_t h = c; h <= root_height; ++h) {
    t[h] = 1;
    for (std::uint32_t j = c; j < h; ++j) t[h] += (d - 1) * t[j];
  }
  std::uint64_t size = 1;
  for (std::uint32_t j = c; j < root_height; ++j) size += d * t[j];
  return size;
}

// 2-choice trace whose bin witness tree from `root_bin` is duplicate-free:
// every alternative endpoint is a globally fresh bin.
struct GraphTower {
  dynaball::AllocationTrace trace;
  dynaball::BinId root_bin = 0;
  std::uint32_t root_load = 0;
};

namespace detail {

struct GraphTowerBuilder {
  std::uint32_t c;
  std::uint32_t next_bin = 0;
  dynaball::BinId dump;
  std::vector<dynaball::BallRecord> records;
  std::vector<std::uint32_t> bin_load;

  explicit GraphTowerBuilder(std::uint32_t c_) : c(c_) { dump = fresh_bin(); }

  dynaball::BinId fresh_bin() {
    bin_load.push_back(0);
    return next_bin++;
  }

  void emit(dynaball::BinId dest, dynaball::BinId other) {
    dynaball::DChoice choice{dest, other};
    std::sort(choice.begin(), choice.end());
    const auto ball = static_cast<std::uint32_t>(records.size()) + 1;
    records.push_back({ball, choice, choice, dest, bin_load[dest]});
    bin_load[dest] += 1;
  }

  // Fills bin b to load top+1: fillers below c, then one ball per height
  // c..top whose alternative endpoint is a fresh recursively filled bin.
  void fill_bin(dynaball::BinId b, std::uint32_t top) {
    for (std::uint32_t h = 0; h < c && h <= top; ++h) emit(b, dump);
    for (std::uint32_t h = c; h <= top; ++h) {
      const auto f = fresh_bin();
      if (h >= c + 1) fill_bin(f, h - 1);
      emit(b, f);
    }
  }
};

}  // namespace detail

inline GraphTower build_graph_tower(std::uint32_t root_load, std::uint32_t c) {
  if (c < 1 || root_load < c)
    throw dynaball::ContractError("graph tower: need c >= 1, root_load >= c");
  detail::GraphTowerBuilder b(c);
  const auto root = b.fresh_bin();
  b.fill_bin(root, root_load - 1);
  GraphTower out;
  out.root_bin = root;
  out.root_load = root_load;
  out.trace.n = b.next_bin;
  out.trace.d = 2;
  out.trace.model_id = "synthetic-graph-tower";
  out.trace.records = std::move(b.records);
  return out;
}

inline std::uint64_t graph_tower_expected_size(std::uint32_t root_load, std::uint32_t c) {
  std::vector<std::uint64_t> g(root_load + 1, 1);  // g[h]: subtree entered at height h
  for (std::uint32_t h = c; h <= root_load; ++h) {
    g[h] = 1;
    for (std::uint32_t j = c; j < h; ++j) g[h] += g[j];
  }
  return g[root_load];
}

}  // namespace synthetic
