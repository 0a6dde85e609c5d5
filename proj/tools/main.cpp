// Command-line front end: seeded experiment runs, parameter sweeps,
// visibility reports, witness-tree extraction, and trace dumps.
//
// Subcommands: run | sweep | visibility | witness | trace
// Values come from (highest priority first): command-line flags, the
// --config file ([model]/[run]/[sweep]/[diagnostics] sections), built-in
// defaults. Exit codes: 0 success, 2 configuration/usage, 3 runtime round
// failure, 4 contract violation, 5 internal.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <dynaball/harness.hpp>

namespace {

using namespace dynaball;

struct CommonOpts {
  std::string config_path;
  std::string model_kind;
  std::uint64_t n = 0;
  std::uint64_t s = 0;
  std::uint64_t d = 0;
  std::uint64_t m = 0;
  std::string seeds_csv;
  std::uint64_t reps = 0;
  std::string out_path;
  std::string format = "csv";
  std::uint64_t threads = 0;
  std::string model_file;

  CLI::App* sub = nullptr;
  ConfigMap cfg;

  bool given(const std::string& flag) const { return sub->count(flag) > 0; }

  std::uint64_t pick_u64(const std::string& flag, std::uint64_t flag_value,
                         const std::string& cfg_key, std::uint64_t fallback) const {
    if (given(flag)) return flag_value;
    return cfg.get_u64(cfg_key, fallback);
  }

  std::string pick_str(const std::string& flag, const std::string& flag_value,
                       const std::string& cfg_key, const std::string& fallback) const {
    if (given(flag)) return flag_value;
    return cfg.get(cfg_key, fallback);
  }
};

void add_common(CLI::App* sub, CommonOpts& o) {
  o.sub = sub;
  sub->add_option("--config", o.config_path, "flat key-value config file");
  sub->add_option("--model", o.model_kind,
                  "model kind: complete|cycle|modular|mobile|petersen|heawood|pg|c4free_random|file");
  sub->add_option("--n", o.n, "number of bins");
  sub->add_option("--s", o.s, "edge size (modular) / q+1 (pg) / degree (c4free_random)");
  sub->add_option("--d", o.d, "choices per ball");
  sub->add_option("--m", o.m, "balls to place (default: one per bin)");
  sub->add_option("--seeds", o.seeds_csv, "comma-separated explicit seed list");
  sub->add_option("--reps", o.reps, "replications expanding base seed 1,2,...");
  sub->add_option("--out", o.out_path, "output file (default: stdout)");
  sub->add_option("--format", o.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--threads", o.threads, "worker threads");
  sub->add_option("--model-file", o.model_file, "edge-list file for --model file");
}

void load_config(CommonOpts& o) {
  if (o.config_path.empty()) return;
  std::ifstream in(o.config_path);
  if (!in) throw ConfigError("cannot open config file: " + o.config_path);
  o.cfg = parse_config(in);
}

ModelSpec model_spec_from(const CommonOpts& o) {
  ModelSpec spec;
  spec.kind = o.pick_str("--model", o.model_kind, "model.kind", "");
  if (spec.kind.empty()) throw ConfigError("no model selected: pass --model or set model.kind");
  spec.n = static_cast<std::uint32_t>(o.pick_u64("--n", o.n, "model.n", 0));
  spec.s = static_cast<std::uint32_t>(o.pick_u64("--s", o.s, "model.s", 0));
  spec.p = o.cfg.get_double("model.p", 0.5);
  spec.dims = static_cast<std::uint32_t>(o.cfg.get_u64("model.dims", 2));
  spec.radius = static_cast<std::uint32_t>(o.cfg.get_u64("model.radius", 1));
  spec.traj_seed = o.cfg.get_u64("model.traj_seed", 1);
  spec.horizon = o.cfg.get_u64("model.horizon", 0);
  spec.path = o.pick_str("--model-file", o.model_file, "model.path", "");
  return spec;
}

std::vector<std::uint64_t> parse_u64_csv(const std::string& text, const std::string& what) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument("junk");
    } catch (const std::exception&) {
      throw ConfigError(what + ": non-integer element '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

void fill_seeds(const CommonOpts& o, ExperimentSpec& spec) {
  if (o.given("--seeds"))
    spec.seeds = parse_u64_csv(o.seeds_csv, "--seeds");
  else if (o.cfg.has("run.seeds"))
    spec.seeds = o.cfg.get_u64_list("run.seeds");
  spec.base_seed = o.cfg.get_u64("run.base_seed", 1);
  spec.replications = static_cast<std::uint32_t>(o.pick_u64("--reps", o.reps, "run.replications", 0));
  if (spec.seeds.empty() && spec.replications == 0) spec.replications = 1;
}

void write_output(const CommonOpts& o, const std::string& text) {
  if (o.out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(o.out_path);
  if (!out) throw ConfigError("cannot open output file: " + o.out_path);
  out << text;
}

nlohmann::json row_json(const ReportRow& r) {
  return {{"model_id", r.model_id}, {"n", r.n},
          {"s", r.s},               {"d", r.d},
          {"m", r.m},               {"seed", r.seed},
          {"max_load", r.max_load}, {"theory_bound", r.theory_bound},
          {"red_count", r.red_count}, {"cycle_edges", r.cycle_edges},
          {"runtime_ms", r.runtime_ms}, {"status", r.status}};
}

void emit_report(const CommonOpts& o, const ExperimentReport& report) {
  if (o.format == "json") {
    nlohmann::json doc{{"summary", report.summary}};
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : report.rows) rows.push_back(row_json(row));
    doc["rows"] = std::move(rows);
    write_output(o, doc.dump(2));
  } else {
    write_output(o, report_csv(report.rows));
  }
}

// ---- subcommand: run ----

struct RunOpts {
  CommonOpts common;
  std::string process = "hyper_d_choice";
  std::uint64_t ell_star = 0;
  std::uint64_t trials = 0;
  std::string svg_path;
};

int cmd_run(RunOpts& o) {
  load_config(o.common);
  const auto model_spec = model_spec_from(o.common);
  const auto model = make_model(model_spec);

  ExperimentSpec spec;
  spec.model = model.get();
  spec.process = parse_process(o.common.given("--process")
                                   ? o.process
                                   : o.common.cfg.get("run.process", o.process));
  spec.d = static_cast<std::uint32_t>(o.common.pick_u64("--d", o.common.d, "run.d", 2));
  spec.m = o.common.pick_u64("--m", o.common.m, "run.m", model->n());
  spec.ell_star = static_cast<std::uint32_t>(
      o.common.given("--ell-star") ? o.ell_star : o.common.cfg.get_u64("run.ell_star", 0));
  spec.trials = o.common.given("--trials") ? o.trials : o.common.cfg.get_u64("run.trials", 0);
  spec.threads =
      static_cast<std::uint32_t>(o.common.pick_u64("--threads", o.common.threads, "run.threads", 1));
  spec.witness_red = o.common.cfg.get_u64("diagnostics.witness", 0) != 0;
  spec.component_cycles = o.common.cfg.get_u64("diagnostics.components", 0) != 0;
  spec.component_c =
      static_cast<std::uint32_t>(o.common.cfg.get_u64("diagnostics.component_c", 1));
  fill_seeds(o.common, spec);

  const auto report = run_experiment(spec);
  emit_report(o.common, report);

  if (!o.svg_path.empty()) {
    // histogram of the first seed's final load distribution
    RunConfig cfg;
    cfg.model = model.get();
    cfg.d = spec.process == Process::empty_only ? std::min<std::uint32_t>(2, model->edge_size())
                                                : spec.d;
    cfg.m = spec.m;
    cfg.seed = resolved_seeds(spec).front();
    const auto res = spec.process == Process::empty_only
                         ? AllocationResult{allocate_empty_only(*model, spec.m, cfg.seed).loads,
                                            std::nullopt, RunStatus::ok, 0, 0}
                         : allocate_hypergraph(cfg);
    std::ofstream svg(o.svg_path);
    if (!svg) throw ConfigError("cannot open svg file: " + o.svg_path);
    svg << svg_histogram(res.loads, model->id() + " seed " + std::to_string(cfg.seed));
  }
  return 0;
}

// ---- subcommand: sweep ----

struct SweepOpts {
  CommonOpts common;
  std::string models_csv;
  std::string ns_csv;
  std::string ds_csv;
};

int cmd_sweep(SweepOpts& o) {
  load_config(o.common);
  SweepGrid grid;

  const auto kinds_text = o.common.given("--models")
                              ? o.models_csv
                              : o.common.cfg.get("sweep.models", o.common.model_kind);
  std::stringstream ss(kinds_text);
  std::string kind;
  while (std::getline(ss, kind, ',')) {
    if (kind.empty()) throw ConfigError("sweep: empty model kind in list");
    ModelSpec base = model_spec_from(o.common);
    base.kind = kind;
    grid.models.push_back(std::move(base));
  }

  const auto ns_text =
      o.common.given("--ns") ? o.ns_csv : o.common.cfg.get("sweep.ns", "");
  const auto ds_text =
      o.common.given("--ds") ? o.ds_csv : o.common.cfg.get("sweep.ds", "");
  if (!ns_text.empty())
    for (const auto v : parse_u64_csv(ns_text, "--ns")) grid.ns.push_back(static_cast<std::uint32_t>(v));
  else if (o.common.given("--n") || o.common.cfg.has("model.n"))
    grid.ns.push_back(static_cast<std::uint32_t>(o.common.pick_u64("--n", o.common.n, "model.n", 0)));
  if (!ds_text.empty())
    for (const auto v : parse_u64_csv(ds_text, "--ds")) grid.ds.push_back(static_cast<std::uint32_t>(v));
  else
    grid.ds.push_back(static_cast<std::uint32_t>(o.common.pick_u64("--d", o.common.d, "run.d", 2)));

  grid.process = parse_process(o.common.cfg.get("run.process", "hyper_d_choice"));
  grid.m = o.common.pick_u64("--m", o.common.m, "run.m", 0);
  if (o.common.given("--seeds"))
    grid.seeds = parse_u64_csv(o.common.seeds_csv, "--seeds");
  else if (o.common.cfg.has("run.seeds"))
    grid.seeds = o.common.cfg.get_u64_list("run.seeds");
  grid.base_seed = o.common.cfg.get_u64("run.base_seed", 1);
  grid.replications = static_cast<std::uint32_t>(
      o.common.pick_u64("--reps", o.common.reps, "run.replications", 0));
  if (grid.seeds.empty() && grid.replications == 0) grid.replications = 1;
  grid.threads = static_cast<std::uint32_t>(
      o.common.pick_u64("--threads", o.common.threads, "run.threads", 1));
  grid.witness_red = o.common.cfg.get_u64("diagnostics.witness", 0) != 0;
  grid.component_cycles = o.common.cfg.get_u64("diagnostics.components", 0) != 0;
  grid.component_c =
      static_cast<std::uint32_t>(o.common.cfg.get_u64("diagnostics.component_c", 1));

  const auto report = sweep(grid);
  emit_report(o.common, report);
  return 0;
}

// ---- subcommand: visibility ----

struct VisibilityOpts {
  CommonOpts common;
  std::uint64_t horizon = 0;
  std::string pairs_text;     // explicit "i:j,k:l"
  std::uint64_t random_pairs = 0;
  std::uint64_t pair_seed = 1;
};

int cmd_visibility(VisibilityOpts& o) {
  load_config(o.common);
  const auto model = make_model(model_spec_from(o.common));
  const auto horizon = o.horizon == 0 ? model->horizon() : o.horizon;

  std::vector<std::pair<BinId, BinId>> pairs;
  if (!o.pairs_text.empty()) {
    std::stringstream ss(o.pairs_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos)
        throw ConfigError("--pairs: expected i:j elements, got '" + item + "'");
      try {
        pairs.emplace_back(static_cast<BinId>(std::stoul(item.substr(0, colon))),
                           static_cast<BinId>(std::stoul(item.substr(colon + 1))));
      } catch (const std::exception&) {
        throw ConfigError("--pairs: non-integer element '" + item + "'");
      }
    }
  }
  if (o.random_pairs > 0) {
    auto rng = RandomStream(o.pair_seed).for_ball(1);
    for (std::uint64_t k = 0; k < o.random_pairs; ++k) {
      const auto a = static_cast<BinId>(rng.below(model->n()));
      BinId b = a;
      while (b == a) b = static_cast<BinId>(rng.below(model->n()));
      pairs.emplace_back(a, b);
    }
  }
  if (pairs.empty()) throw ConfigError("visibility: give --pairs or --random-pairs");

  const auto reports = pair_visibility(*model, static_cast<Round>(horizon), pairs);
  if (o.common.format == "json") {
    nlohmann::json rows = nlohmann::json::array();
    std::uint64_t violations = 0;
    for (const auto& r : reports) {
      rows.push_back({{"i", r.i},
                      {"j", r.j},
                      {"count", r.count},
                      {"horizon", r.horizon},
                      {"bound", r.bound},
                      {"within_bound", r.within_bound}});
      if (!r.within_bound) ++violations;
    }
    write_output(o.common, nlohmann::json{{"model", model->descriptor()},
                                          {"violations", violations},
                                          {"reports", std::move(rows)}}
                               .dump(2));
  } else {
    write_output(o.common, visibility_csv(reports));
  }
  return 0;
}

// ---- subcommand: witness ----

struct WitnessOpts {
  CommonOpts common;
  std::string trace_path;
  std::string mode = "hyper";
  std::int64_t root = -1;
  std::uint64_t c = 1;
  std::uint64_t seed = 1;
  std::string ordering = "as_constructed";
};

int cmd_witness(WitnessOpts& o) {
  load_config(o.common);
  if (o.common.format == "csv")
    throw ConfigError("witness trees are emitted as json; pass --format json (default)");

  AllocationTrace trace;
  if (!o.trace_path.empty()) {
    std::ifstream in(o.trace_path);
    if (!in) throw ConfigError("cannot open trace file: " + o.trace_path);
    trace = parse_trace(in);
  } else {
    const auto model = make_model(model_spec_from(o.common));
    RunConfig cfg;
    cfg.model = model.get();
    cfg.d = static_cast<std::uint32_t>(o.common.pick_u64("--d", o.common.d, "run.d", 2));
    cfg.m = o.common.pick_u64("--m", o.common.m, "run.m", model->n());
    cfg.seed = o.common.given("--seed") ? o.seed : o.common.cfg.get_u64("run.seed", 1);
    cfg.record_trace = true;
    trace = *allocate_hypergraph(cfg).trace;
  }
  const auto idx = index_trace(trace);

  WitnessTree tree;
  if (o.mode == "hyper") {
    std::uint32_t root = static_cast<std::uint32_t>(o.root < 0 ? 0 : o.root);
    if (o.root < 0) {  // default: the ball that reached the greatest height
      std::uint32_t best = 0;
      for (std::uint32_t b = 1; b <= idx.heights.size(); ++b)
        if (idx.heights[b - 1] > best) {
          best = idx.heights[b - 1];
          root = b;
        }
      if (root == 0) throw ConfigError("witness: every ball sits at height 0; nothing to expand");
    }
    tree = witness_tree_hyper(trace, root, static_cast<std::uint32_t>(o.c));
  } else if (o.mode == "graph") {
    BinId root = static_cast<BinId>(o.root < 0 ? 0 : o.root);
    if (o.root < 0) {
      std::uint32_t best = 0;
      for (BinId b = 0; b < trace.n; ++b)
        if (idx.final_loads.loads[b] > best) {
          best = idx.final_loads.loads[b];
          root = b;
        }
    }
    tree = witness_tree_graph(trace, root, static_cast<std::uint32_t>(o.c));
  } else {
    throw ConfigError("witness: --mode must be hyper or graph");
  }

  if (o.ordering == "ball_ascending")
    tree = blue_red_color(tree, ChildOrdering::ball_ascending);
  else if (o.ordering != "as_constructed")
    throw ConfigError("witness: --ordering must be as_constructed or ball_ascending");

  write_output(o.common, witness_json(tree).dump(2));
  return 0;
}

// ---- subcommand: trace ----

struct TraceOpts {
  CommonOpts common;
  std::uint64_t seed = 1;
};

int cmd_trace(TraceOpts& o) {
  load_config(o.common);
  const auto model = make_model(model_spec_from(o.common));
  RunConfig cfg;
  cfg.model = model.get();
  cfg.d = static_cast<std::uint32_t>(o.common.pick_u64("--d", o.common.d, "run.d", 2));
  cfg.m = o.common.pick_u64("--m", o.common.m, "run.m", model->n());
  cfg.seed = o.common.given("--seed") ? o.seed : o.common.cfg.get_u64("run.seed", 1);
  cfg.record_trace = true;
  const auto res = allocate_hypergraph(cfg);
  write_output(o.common, dump_trace(*res.trace));
  return 0;
}

int error_out(const char* kind, const std::string& message, int code) {
  std::cerr << nlohmann::json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"balanced-allocation simulator for dynamic graphs and hypergraphs"};
  app.require_subcommand(1);

  RunOpts run_opts;
  auto* run_cmd_p = app.add_subcommand("run", "execute one experiment spec across seeds");
  add_common(run_cmd_p, run_opts.common);
  run_cmd_p->add_option("--process", run_opts.process,
                        "hyper_d_choice|graph_two_choice|empty_only|coupled|uniformity");
  run_cmd_p->add_option("--ell-star", run_opts.ell_star, "coupled: head start per bin");
  run_cmd_p->add_option("--trials", run_opts.trials, "uniformity: Monte Carlo trials");
  run_cmd_p->add_option("--svg", run_opts.svg_path, "also write a load histogram SVG here");

  SweepOpts sweep_opts;
  auto* sweep_cmd_p = app.add_subcommand("sweep", "cross-product of models x n x d");
  add_common(sweep_cmd_p, sweep_opts.common);
  sweep_cmd_p->add_option("--models", sweep_opts.models_csv, "comma list of model kinds");
  sweep_cmd_p->add_option("--ns", sweep_opts.ns_csv, "comma list of n values");
  sweep_cmd_p->add_option("--ds", sweep_opts.ds_csv, "comma list of d values");

  VisibilityOpts vis_opts;
  auto* vis_cmd_p = app.add_subcommand("visibility", "pair-visibility certificate report");
  add_common(vis_cmd_p, vis_opts.common);
  vis_cmd_p->add_option("--horizon", vis_opts.horizon, "rounds to scan (default: model horizon)");
  vis_cmd_p->add_option("--pairs", vis_opts.pairs_text, "explicit pairs i:j,k:l");
  vis_cmd_p->add_option("--random-pairs", vis_opts.random_pairs, "sample this many random pairs");
  vis_cmd_p->add_option("--pair-seed", vis_opts.pair_seed, "seed for --random-pairs");

  WitnessOpts wit_opts;
  auto* wit_cmd_p = app.add_subcommand("witness", "witness tree from a run or a trace file");
  add_common(wit_cmd_p, wit_opts.common);
  wit_opts.common.format = "json";
  wit_cmd_p->add_option("--trace", wit_opts.trace_path, "read this trace dump instead of running");
  wit_cmd_p->add_option("--mode", wit_opts.mode, "hyper|graph");
  wit_cmd_p->add_option("--root", wit_opts.root, "root ball (hyper) or bin (graph); default: top");
  wit_cmd_p->add_option("--c", wit_opts.c, "load threshold");
  wit_cmd_p->add_option("--seed", wit_opts.seed, "seed for the generating run");
  wit_cmd_p->add_option("--ordering", wit_opts.ordering, "as_constructed|ball_ascending");

  TraceOpts trace_opts;
  auto* trace_cmd_p = app.add_subcommand("trace", "run once and dump the placement trace");
  add_common(trace_cmd_p, trace_opts.common);
  trace_cmd_p->add_option("--seed", trace_opts.seed, "seed for the run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::stringstream ss;
    ss << e.what();
    return error_out("usage", ss.str(), 2);
  }

  try {
    if (run_cmd_p->parsed()) return cmd_run(run_opts);
    if (sweep_cmd_p->parsed()) return cmd_sweep(sweep_opts);
    if (vis_cmd_p->parsed()) return cmd_visibility(vis_opts);
    if (wit_cmd_p->parsed()) return cmd_witness(wit_opts);
    if (trace_cmd_p->parsed()) return cmd_trace(trace_opts);
    return error_out("usage", "no subcommand given", 2);
  } catch (const ConfigError& e) {
    return error_out("config", e.what(), 2);
  } catch (const RoundError& e) {
    return error_out("round", e.what(), 3);
  } catch (const ContractError& e) {
    return error_out("contract", e.what(), 4);
  } catch (const std::exception& e) {
    return error_out("internal", e.what(), 5);
  }
}
