#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dynaball/diagnostics.hpp"
#include "dynaball/engine.hpp"
#include "dynaball/models.hpp"

namespace dynaball {

// ---- model factory ----

// Everything needed to build a model from a config file or command line.
struct ModelSpec {
  std::string kind;          // complete | cycle | modular | mobile | petersen |
                             // heawood | pg | c4free_random | file
  std::uint32_t n = 0;
  std::uint32_t s = 0;       // modular edge size; pg uses s = q+1; c4free degree
  double p = 0.5;            // mobile laziness
  std::uint32_t dims = 2;    // mobile torus dimension
  std::uint32_t radius = 1;  // mobile communication radius
  std::uint64_t traj_seed = 1;
  std::uint64_t horizon = 0; // mobile: 0 means n rounds
  std::string path;          // file model source
};

inline std::unique_ptr<DynamicModel> make_model(const ModelSpec& spec) {
  if (spec.kind == "complete") return std::make_unique<CompleteBaseline>(spec.n);
  if (spec.kind == "cycle") return std::make_unique<DynamicCycle>(spec.n);
  if (spec.kind == "modular") return std::make_unique<ModularHypergraph>(spec.n, spec.s);
  if (spec.kind == "mobile")
    return std::make_unique<MobileNetwork>(spec.n, spec.dims, spec.p, spec.radius, spec.traj_seed,
                                           spec.horizon);
  if (spec.kind == "petersen")
    return std::make_unique<NeighborhoodHypergraph>(NeighborhoodHypergraph::petersen());
  if (spec.kind == "heawood")
    return std::make_unique<NeighborhoodHypergraph>(NeighborhoodHypergraph::heawood());
  if (spec.kind == "pg") {
    if (spec.s < 3) throw ConfigError("pg model: need s >= 3 (s = q + 1)");
    return std::make_unique<NeighborhoodHypergraph>(NeighborhoodHypergraph::pg(spec.s - 1));
  }
  if (spec.kind == "c4free_random")
    return std::make_unique<NeighborhoodHypergraph>(
        NeighborhoodHypergraph::brute(spec.n, spec.s, spec.traj_seed));
  if (spec.kind == "file") {
    std::ifstream in(spec.path);
    if (!in) throw ConfigError("file model: cannot open " + spec.path);
    return std::make_unique<FileModel>(FileModel::parse(in, spec.path));
  }
  throw ConfigError("unknown model kind: " + spec.kind);
}

// ---- report rows ----

// Reference growth value for the max-load column: log_d of log2(n) for
// d >= 2, ln(n)/ln(ln(n)) for the one-choice process. Informational only.
inline double theory_bound(std::uint32_t n, std::uint32_t d) {
  if (n < 3 || d < 1) return 0.0;
  double v = 0.0;
  if (d == 1) {
    const double ln_n = std::log(static_cast<double>(n));
    v = std::log(ln_n) > 0 ? ln_n / std::log(ln_n) : 0.0;
  } else {
    const double log2_n = std::log2(static_cast<double>(n));
    v = log2_n > 1 ? std::log(log2_n) / std::log(static_cast<double>(d)) : 0.0;
  }
  return std::round(v * 100.0) / 100.0;
}

struct ReportRow {
  std::string model_id;
  std::uint32_t n = 0;
  std::uint32_t s = 0;
  std::uint32_t d = 0;
  std::uint64_t m = 0;
  std::uint64_t seed = 0;
  long long max_load = -1;    // -1: not applicable / failed
  double theory_bound = 0.0;
  long long red_count = -1;   // -1: witness diagnostics off or unavailable
  long long cycle_edges = -1; // -1: component diagnostics off or no component
  double runtime_ms = 0.0;
  std::string status = "ok";
};

// Column order is part of the external contract.
inline std::string report_csv_header() {
  return "model_id,n,s,d,m,seed,max_load,theory_bound,red_count,cycle_edges,runtime_ms,status";
}

// Minimal CSV quoting: only fields containing a comma or quote get wrapped.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string quoted = "\"";
  for (const char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

inline std::string report_csv_row(const ReportRow& r) {
  char buf[192];
  std::snprintf(buf, sizeof buf, ",%u,%u,%u,%llu,%llu,%lld,%.2f,%lld,%lld,%.3f,", r.n, r.s, r.d,
                static_cast<unsigned long long>(r.m), static_cast<unsigned long long>(r.seed),
                r.max_load, r.theory_bound, r.red_count, r.cycle_edges, r.runtime_ms);
  return csv_field(r.model_id) + buf + csv_field(r.status);
}

inline std::string report_csv(const std::vector<ReportRow>& rows) {
  std::string out = report_csv_header() + "\n";
  for (const auto& r : rows) out += report_csv_row(r) + "\n";
  return out;
}

// ---- experiments ----

enum class Process { hyper_d_choice, graph_two_choice, empty_only, coupled, uniformity };

inline std::string process_name(Process p) {
  switch (p) {
    case Process::hyper_d_choice: return "hyper_d_choice";
    case Process::graph_two_choice: return "graph_two_choice";
    case Process::empty_only: return "empty_only";
    case Process::coupled: return "coupled";
    case Process::uniformity: return "uniformity";
  }
  return "?";
}

inline Process parse_process(const std::string& name) {
  for (auto p : {Process::hyper_d_choice, Process::graph_two_choice, Process::empty_only,
                 Process::coupled, Process::uniformity})
    if (process_name(p) == name) return p;
  throw ConfigError("unknown process: " + name);
}

struct ExperimentSpec {
  const DynamicModel* model = nullptr;
  Process process = Process::hyper_d_choice;
  std::uint32_t d = 2;
  std::uint64_t m = 0;
  std::vector<std::uint64_t> seeds;  // explicit list wins over base_seed/replications
  std::uint64_t base_seed = 1;
  std::uint32_t replications = 0;
  std::uint32_t ell_star = 0;                // coupled: head start of the dominating copy
  std::uint64_t trials = 0;                  // uniformity
  std::vector<std::uint64_t> checkpoints;    // uniformity: empty = {1, m/2, m}
  bool witness_red = false;      // fill red_count from the top ball's witness tree (c = 1)
  bool component_cycles = false; // fill cycle_edges from bin-mode c-loaded components
  std::uint32_t component_c = 1;
  std::uint32_t threads = 1;
};

inline std::vector<std::uint64_t> resolved_seeds(const ExperimentSpec& spec) {
  if (!spec.seeds.empty()) return spec.seeds;
  if (spec.replications < 1)
    throw ConfigError("experiment: need an explicit seed list or replications >= 1");
  std::vector<std::uint64_t> out;
  for (std::uint32_t i = 0; i < spec.replications; ++i) out.push_back(spec.base_seed + i);
  return out;
}

struct ExperimentReport {
  std::vector<ReportRow> rows;
  nlohmann::json summary;
};

namespace detail {

inline void validate_experiment(const ExperimentSpec& spec) {
  if (spec.model == nullptr) throw ContractError("experiment: null model");
  if (spec.threads < 1) throw ConfigError("experiment: threads must be >= 1");
  resolved_seeds(spec);  // throws when unusable
  switch (spec.process) {
    case Process::graph_two_choice:
      if (spec.model->edge_size() != 2)
        throw ConfigError("graph_two_choice needs a 2-uniform model");
      break;
    case Process::coupled:
      if (spec.d != 2) throw ConfigError("coupled process is defined for d = 2");
      break;
    case Process::uniformity:
      if (spec.trials < 1) throw ConfigError("uniformity: trials must be >= 1");
      break;
    default: break;
  }
  if (spec.process == Process::empty_only) {
    if (spec.m == 0 || spec.m > spec.model->horizon())
      throw ConfigError("empty_only: m outside 1..horizon");
  } else {
    RunConfig probe;
    probe.model = spec.model;
    probe.d = spec.d;
    probe.m = spec.m;
    probe.seed = 1;
    validate_run_config(probe);
  }
}

// The diagnostics columns measured from one finished traced run.
inline void fill_trace_diagnostics(const ExperimentSpec& spec, const AllocationTrace& trace,
                                   const LoadState& loads, ReportRow& row) {
  if (spec.witness_red) {
    std::uint32_t top_ball = 0, top_height = 0;
    for (const auto& r : trace.records)
      if (r.height > top_height) {
        top_height = r.height;
        top_ball = r.ball;
      }
    if (top_ball != 0) {
      const auto tree = witness_tree_hyper(trace, top_ball, 1);
      row.red_count = static_cast<long long>(tree.red_count);
    }
  }
  if (spec.component_cycles && trace.d == 2) {
    const auto cg = build_conflict_graph(trace, ConflictGraph::Mode::bin);
    const auto comps = c_loaded_components(cg, loads, spec.component_c);
    if (!comps.empty()) {
      std::uint64_t worst = 0;
      for (const auto& comp : comps)
        worst = std::max(worst, cycle_producing_edge_count(cg, comp));
      row.cycle_edges = static_cast<long long>(worst);
    }
  }
}

inline ReportRow run_one_seed(const ExperimentSpec& spec, std::uint64_t seed) {
  ReportRow row;
  row.model_id = spec.model->id();
  row.n = spec.model->n();
  row.s = spec.model->edge_size();
  row.d = spec.process == Process::empty_only ? 0 : spec.d;
  row.m = spec.m;
  row.seed = seed;
  row.theory_bound = theory_bound(row.n, spec.process == Process::empty_only ? 2 : spec.d);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    switch (spec.process) {
      case Process::hyper_d_choice:
      case Process::graph_two_choice: {
        RunConfig cfg;
        cfg.model = spec.model;
        cfg.d = spec.d;
        cfg.m = spec.m;
        cfg.seed = seed;
        cfg.record_trace = spec.witness_red || spec.component_cycles;
        const auto res = allocate_hypergraph(cfg);
        row.max_load = max_load(res.loads);
        if (res.status == RunStatus::degenerate) row.status = "degenerate";
        if (cfg.record_trace) fill_trace_diagnostics(spec, *res.trace, res.loads, row);
        break;
      }
      case Process::empty_only: {
        const auto res = allocate_empty_only(*spec.model, spec.m, seed);
        row.max_load = max_load(res.loads);
        if (res.failed) row.status = "empty_failure";
        break;
      }
      case Process::coupled: {
        const auto rep = coupled_allocate(*spec.model, spec.m, spec.ell_star, seed, spec.d);
        row.max_load = rep.max_load_x;
        if (!rep.domination_ok) row.status = "domination_violated";
        break;
      }
      case Process::uniformity: {
        // row-level estimate; the frequency itself goes into the summary
        row.max_load = -1;
        break;
      }
    }
  } catch (const ConfigError&) {
    row.max_load = -1;
    row.status = "error:config";
  } catch (const RoundError&) {
    row.max_load = -1;
    row.status = "error:round";
  } catch (const ContractError&) {
    row.max_load = -1;
    row.status = "error:contract";
  }
  const auto t1 = std::chrono::steady_clock::now();
  row.runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return row;
}

}  // namespace detail

// Runs every seed of the spec (parallel when spec.threads > 1, one worker
// owning each run end-to-end), in deterministic row order. Statistical
// aggregation lands in the summary; assertions belong to callers.
inline ExperimentReport run_experiment(const ExperimentSpec& spec) {
  detail::validate_experiment(spec);
  const auto seeds = resolved_seeds(spec);
  ExperimentReport report;
  report.rows.resize(seeds.size());

  if (spec.process == Process::uniformity) {
    // the estimator is internally parallel; seeds stay serial
    double worst = 0.0;
    nlohmann::json per_seed = nlohmann::json::array();
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      report.rows[i] = detail::run_one_seed(spec, seeds[i]);
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const double freq = uniformity_estimate(*spec.model, spec.d, spec.m, spec.trials,
                                                seeds[i], spec.checkpoints, spec.threads);
        worst = std::max(worst, freq);
        per_seed.push_back(freq);
      } catch (const ConfigError&) {
        report.rows[i].status = "error:config";
        per_seed.push_back(nullptr);
      }
      const auto t1 = std::chrono::steady_clock::now();
      report.rows[i].runtime_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
    report.summary["uniformity_max_frequency"] = worst;
    report.summary["uniformity_per_seed"] = per_seed;
  } else {
    const auto workers = std::min<std::size_t>(spec.threads, seeds.size());
    if (workers <= 1) {
      for (std::size_t i = 0; i < seeds.size(); ++i)
        report.rows[i] = detail::run_one_seed(spec, seeds[i]);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
          for (std::size_t i = w; i < seeds.size(); i += workers)
            report.rows[i] = detail::run_one_seed(spec, seeds[i]);
        });
      for (auto& t : pool) t.join();
    }
  }

  // single-threaded reduce
  std::uint64_t ok = 0, errors = 0;
  double mean = 0, m2 = 0;
  long long lo = -1, hi = -1;
  std::uint64_t counted = 0;
  for (const auto& row : report.rows) {
    if (row.status.rfind("error:", 0) == 0) ++errors; else ++ok;
    if (row.max_load >= 0) {
      ++counted;
      const double x = static_cast<double>(row.max_load);
      const double delta = x - mean;
      mean += delta / static_cast<double>(counted);
      m2 += delta * (x - mean);
      lo = lo < 0 ? row.max_load : std::min(lo, row.max_load);
      hi = std::max(hi, row.max_load);
    }
  }
  report.summary["process"] = process_name(spec.process);
  report.summary["model"] = spec.model->descriptor();
  report.summary["rows"] = report.rows.size();
  report.summary["ok_rows"] = ok;
  report.summary["error_rows"] = errors;
  if (counted > 0) {
    report.summary["max_load"] = {
        {"mean", mean},
        {"min", lo},
        {"max", hi},
        {"stddev", counted > 1 ? std::sqrt(m2 / static_cast<double>(counted - 1)) : 0.0}};
  }
  return report;
}

// ---- sweeps ----

struct SweepGrid {
  std::vector<ModelSpec> models;     // n/s fields may be overridden per cell
  std::vector<std::uint32_t> ns;     // 0 entries keep the model spec's own n
  std::vector<std::uint32_t> ds;
  Process process = Process::hyper_d_choice;
  std::uint64_t m = 0;               // 0: one ball per bin (m = n)
  std::vector<std::uint64_t> seeds;
  std::uint64_t base_seed = 1;
  std::uint32_t replications = 0;
  std::uint32_t threads = 1;
  bool witness_red = false;
  bool component_cycles = false;
  std::uint32_t component_c = 1;
};

// Cross-product of models x ns x ds; each cell delegates to run_experiment
// and failures stay inside their cell (rows with error markers).
inline ExperimentReport sweep(const SweepGrid& grid) {
  if (grid.models.empty() || grid.ns.empty() || grid.ds.empty())
    throw ConfigError("sweep: every grid dimension needs at least one entry");
  ExperimentReport out;
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& model_spec : grid.models) {
    for (const auto n : grid.ns) {
      for (const auto d : grid.ds) {
        ModelSpec cell_model = model_spec;
        if (n != 0) cell_model.n = n;
        nlohmann::json cell{{"kind", cell_model.kind}, {"n", cell_model.n}, {"d", d}};
        try {
          const auto model = make_model(cell_model);
          ExperimentSpec spec;
          spec.model = model.get();
          spec.process = grid.process;
          spec.d = d;
          spec.m = grid.m == 0 ? model->n() : grid.m;
          spec.seeds = grid.seeds;
          spec.base_seed = grid.base_seed;
          spec.replications = grid.replications;
          spec.threads = grid.threads;
          spec.witness_red = grid.witness_red;
          spec.component_cycles = grid.component_cycles;
          spec.component_c = grid.component_c;
          auto rep = run_experiment(spec);
          cell["summary"] = rep.summary;
          for (auto& row : rep.rows) out.rows.push_back(std::move(row));
        } catch (const std::exception& e) {
          cell["error"] = e.what();
          ExperimentSpec failed;
          failed.seeds = grid.seeds;
          failed.base_seed = grid.base_seed;
          failed.replications = grid.replications;
          for (const auto seed : resolved_seeds(failed)) {
            ReportRow row;
            row.model_id = cell_model.kind;
            row.n = cell_model.n;
            row.d = d;
            row.m = grid.m;
            row.seed = seed;
            row.status = "error:config";
            out.rows.push_back(std::move(row));
          }
        }
        cells.push_back(std::move(cell));
      }
    }
  }
  out.summary["cells"] = std::move(cells);
  out.summary["rows"] = out.rows.size();
  return out;
}

// ---- flat config files ----

// Flat key-value text with [section] headers; '#' starts a comment; values
// keep everything after '='. Keys are addressed as "section.key".
struct ConfigMap {
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) > 0; }

  std::string get(const std::string& key, const std::string& fallback = "") const {
    const auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
      std::size_t used = 0;
      const auto v = std::stoull(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("junk");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config: key '" + key + "' is not an integer: " + it->second);
    }
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
      std::size_t used = 0;
      const auto v = std::stod(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("junk");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config: key '" + key + "' is not a number: " + it->second);
    }
  }

  std::vector<std::uint64_t> get_u64_list(const std::string& key) const {
    std::vector<std::uint64_t> out;
    const auto it = values.find(key);
    if (it == values.end()) return out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto first = item.find_first_not_of(" \t");
      if (first == std::string::npos)
        throw ConfigError("config: empty element in list '" + key + "'");
      const auto last = item.find_last_not_of(" \t");
      item = item.substr(first, last - first + 1);
      try {
        std::size_t used = 0;
        out.push_back(std::stoull(item, &used));
        if (used != item.size()) throw std::invalid_argument("junk");
      } catch (const std::exception&) {
        throw ConfigError("config: list '" + key + "' has a non-integer element: " + item);
      }
    }
    if (out.empty()) throw ConfigError("config: list '" + key + "' is empty");
    return out;
  }
};

inline ConfigMap parse_config(std::istream& in) {
  ConfigMap cfg;
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw ConfigError("config line " + std::to_string(line_no) + ": malformed section header");
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    auto key = line.substr(0, eq);
    auto value = line.substr(eq + 1);
    const auto key_end = key.find_last_not_of(" \t");
    if (key_end == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    key = key.substr(0, key_end + 1);
    const auto value_start = value.find_first_not_of(" \t");
    value = value_start == std::string::npos ? "" : value.substr(value_start);
    cfg.values[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

inline ConfigMap parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

// ---- load histogram as a single-file SVG ----

inline std::string svg_histogram(const LoadState& loads, const std::string& title) {
  const auto hist = load_histogram(loads);
  const std::uint32_t max_level = hist.empty() ? 0 : hist.rbegin()->first;
  std::uint32_t tallest = 1;
  for (const auto& [load, count] : hist) tallest = std::max(tallest, count);
  const int bar_w = 40, gap = 10, plot_h = 220, base_y = 260, left = 50;
  const int width = left + (static_cast<int>(max_level) + 1) * (bar_w + gap) + 30;
  std::string svg;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"320\" "
                "viewBox=\"0 0 %d 320\">\n",
                width, width);
  svg += buf;
  svg += "<style>text{font-family:monospace;font-size:12px}</style>\n";
  std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"20\">%s</text>\n", left, title.c_str());
  svg += buf;
  for (std::uint32_t level = 0; level <= max_level; ++level) {
    const auto it = hist.find(level);
    const std::uint32_t count = it == hist.end() ? 0 : it->second;
    const int h = static_cast<int>(static_cast<double>(count) / tallest * plot_h);
    const int x = left + static_cast<int>(level) * (bar_w + gap);
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"#4477aa\"/>\n", x,
                  base_y - h, bar_w, h);
    svg += buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\">%u</text>\n", x + 4, base_y + 16,
                  level);
    svg += buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\">%u</text>\n", x + 4, base_y - h - 6,
                  count);
    svg += buf;
  }
  svg += "<text x=\"4\" y=\"290\">bins per final load level</text>\n</svg>\n";
  return svg;
}

}  // namespace dynaball
