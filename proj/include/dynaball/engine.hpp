#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dynaball/core.hpp"
#include "dynaball/errors.hpp"
#include "dynaball/models.hpp"
#include "dynaball/rng.hpp"

namespace dynaball {

// How many later rounds a ball may fall back to when its own round has no
// edge (models that opt into deferral only). Must not exceed the slack the
// mobile trajectory keeps past its horizon.
constexpr std::uint32_t kDeferRetryBudget = 100;
static_assert(kDeferRetryBudget == MobileNetwork::kDeferSlack);

struct RunConfig {
  const DynamicModel* model = nullptr;
  std::uint32_t d = 2;
  std::uint64_t m = 0;     // balls to place; one ball per round
  std::uint64_t seed = 1;
  std::uint64_t run = 0;   // replication index, part of the stream key
  bool record_trace = false;
};

inline void validate_run_config(const RunConfig& cfg) {
  if (cfg.model == nullptr) throw ContractError("run config: model missing");
  const auto& model = *cfg.model;
  if (cfg.m == 0) throw ConfigError("run config: need m >= 1");
  if (cfg.m > model.horizon())
    throw ConfigError("run config: m = " + std::to_string(cfg.m) + " exceeds horizon " +
                      std::to_string(model.horizon()));
  if (cfg.d == 0 || cfg.d > model.edge_size())
    throw ConfigError("run config: need 1 <= d <= s = " + std::to_string(model.edge_size()));
  if (cfg.d == 1 && !model.single_choice_allowed())
    throw ConfigError("run config: d = 1 is only meaningful for the baseline model");
}

enum class RunStatus { ok, degenerate };

struct AllocationResult {
  LoadState loads;
  std::optional<AllocationTrace> trace;
  RunStatus status = RunStatus::ok;
  Round degenerate_round = 0;          // ball that exhausted its deferral budget
  std::uint64_t deferred_retries = 0;  // extra rounds consumed by deferrals
};

namespace detail {

// Least-loaded bin of `choice` under `loads`, ties uniform among minimizers.
// Consumes randomness only when there is an actual tie.
inline BinId pick_least_loaded(const LoadState& loads, const DChoice& choice, RandomStream& rng) {
  std::uint32_t best = std::numeric_limits<std::uint32_t>::max();
  for (auto b : choice) best = std::min(best, loads.loads[b]);
  BinId first = 0;
  std::uint32_t ties = 0;
  for (auto b : choice)
    if (loads.loads[b] == best && ties++ == 0) first = b;
  if (ties == 1) return first;
  auto want = rng.below(ties);
  for (auto b : choice)
    if (loads.loads[b] == best && want-- == 0) return b;
  throw ContractError("pick_least_loaded: unreachable");
}

}  // namespace detail

// The d-choice process: ball t draws edge H_t from E_t and a uniform
// d-subset D_t of it, then joins a least-loaded bin of D_t (ties uniform).
// Models that defer empty rounds get each stuck ball re-rolled against the
// following rounds' edge sets, up to kDeferRetryBudget; running out of
// budget marks the run degenerate and stops it.
inline AllocationResult allocate_hypergraph(const RunConfig& cfg) {
  validate_run_config(cfg);
  const auto& model = *cfg.model;
  const bool defer = model.defer_empty_rounds();
  RandomStream root(cfg.seed, cfg.run);

  AllocationResult res;
  res.loads = LoadState(model.n());
  if (cfg.record_trace) {
    res.trace.emplace();
    res.trace->n = model.n();
    res.trace->d = cfg.d;
    res.trace->model_id = model.id();
    res.trace->records.reserve(cfg.m);
  }

  Hyperedge edge;
  DChoice choice;
  for (std::uint64_t t = 1; t <= cfg.m; ++t) {
    auto rng = root.for_ball(t);
    Round use_round = static_cast<Round>(t);
    bool drawn = false;
    for (std::uint32_t attempt = 0; attempt <= kDeferRetryBudget; ++attempt) {
      try {
        model.sample_ball(use_round, cfg.d, rng, cfg.record_trace, &edge, &choice);
        drawn = true;
        break;
      } catch (const RoundError&) {
        if (!defer || attempt == kDeferRetryBudget) {
          if (!defer) throw;
          break;
        }
        ++use_round;
        ++res.deferred_retries;
      }
    }
    if (!drawn) {
      res.status = RunStatus::degenerate;
      res.degenerate_round = static_cast<Round>(t);
      break;
    }
    const BinId dest = detail::pick_least_loaded(res.loads, choice, rng);
    const auto height = apply_placement(res.loads, dest);
    if (cfg.record_trace)
      res.trace->records.push_back({static_cast<Round>(t), edge, choice, dest, height});
  }
  return res;
}

// Two-choice on a dynamic graph: a uniform edge per round, ball to the
// lighter endpoint. Identical to the hypergraph process at d = s = 2.
inline AllocationResult allocate_graph(const DynamicModel& model, std::uint64_t m,
                                       std::uint64_t seed, std::uint64_t run = 0,
                                       bool record_trace = false) {
  if (model.edge_size() != 2)
    throw ConfigError("graph allocation needs a 2-uniform model, got s = " +
                      std::to_string(model.edge_size()));
  RunConfig cfg;
  cfg.model = &model;
  cfg.d = 2;
  cfg.m = m;
  cfg.seed = seed;
  cfg.run = run;
  cfg.record_trace = record_trace;
  return allocate_hypergraph(cfg);
}

struct EmptyOnlyResult {
  LoadState loads;
  std::vector<std::uint32_t> empty_counts;  // Empty(H_t) for t = 1..rounds seen
  bool failed = false;
  Round failure_round = 0;  // round whose edge had no empty bin
  std::uint32_t min_empty = std::numeric_limits<std::uint32_t>::max();
};

// Restricted allocator: ball t goes to a uniformly random *empty* bin of
// H_t. The run records how many empty bins each chosen edge offered and
// fails (stops) at the first edge with none.
inline EmptyOnlyResult allocate_empty_only(const DynamicModel& model, std::uint64_t m,
                                           std::uint64_t seed, std::uint64_t run = 0) {
  if (m == 0) throw ConfigError("empty-only: need m >= 1");
  if (m > model.horizon()) throw ConfigError("empty-only: m exceeds horizon");
  RandomStream root(seed, run);
  EmptyOnlyResult res;
  res.loads = LoadState(model.n());
  res.empty_counts.reserve(m);
  std::vector<BinId> empties;
  for (std::uint64_t t = 1; t <= m; ++t) {
    auto rng = root.for_ball(t);
    const auto edge = model.sample_edge(static_cast<Round>(t), rng);
    empties.clear();
    for (auto b : edge)
      if (res.loads.loads[b] == 0) empties.push_back(b);
    const auto count = static_cast<std::uint32_t>(empties.size());
    res.empty_counts.push_back(count);
    res.min_empty = std::min(res.min_empty, count);
    if (count == 0) {
      res.failed = true;
      res.failure_round = static_cast<Round>(t);
      break;
    }
    apply_placement(res.loads, empties[rng.below(count)]);
  }
  return res;
}

struct CouplingReport {
  bool domination_ok = true;
  Round first_violation = 0;
  std::uint32_t max_load_x = 0;  // copy started empty
  std::uint32_t max_load_y = 0;  // copy started with the handicap
  std::uint64_t rounds_run = 0;
};

// Two synchronized copies of the process share every draw: the edge, the
// d-subset, and a fresh uniform labeling of the subset each round. Copy X
// starts empty; copy Y starts with ell_star balls in every bin. Both place
// into the least-loaded bin of the shared subset, ties broken by the shared
// labels, which keeps per-bin domination X_i <= Y_i provable — so any
// violation is an implementation bug, reported rather than thrown so the
// caller can assert on it.
inline CouplingReport coupled_allocate(const DynamicModel& model, std::uint64_t m,
                                       std::uint32_t ell_star, std::uint64_t seed,
                                       std::uint32_t d = 2, std::uint64_t run = 0) {
  RunConfig probe;
  probe.model = &model;
  probe.d = d;
  probe.m = m;
  validate_run_config(probe);
  RandomStream root(seed, run);

  const auto n = model.n();
  LoadState x(n), y(n);
  std::fill(y.loads.begin(), y.loads.end(), ell_star);
  y.balls_placed = std::uint64_t{ell_star} * n;

  CouplingReport rep;
  DChoice choice;
  std::vector<std::uint32_t> sigma;
  auto labeled_pick = [&](const LoadState& st) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < choice.size(); ++i) {
      const auto load_i = st.loads[choice[i]], load_b = st.loads[choice[best]];
      if (load_i < load_b || (load_i == load_b && sigma[i] < sigma[best])) best = i;
    }
    return choice[best];
  };
  auto full_check = [&](Round t) {
    for (std::uint32_t i = 0; i < n; ++i)
      if (x.loads[i] > y.loads[i]) {
        rep.domination_ok = false;
        rep.first_violation = t;
        return false;
      }
    return true;
  };

  for (std::uint64_t t = 1; t <= m; ++t) {
    auto rng = root.for_ball(t);
    model.sample_ball(static_cast<Round>(t), d, rng, false, nullptr, &choice);
    sigma.resize(choice.size());
    std::iota(sigma.begin(), sigma.end(), 0u);
    rng.shuffle(sigma);

    const BinId bx = labeled_pick(x);
    const BinId by = labeled_pick(y);
    apply_placement(x, bx);
    apply_placement(y, by);
    rep.rounds_run = t;
    // domination can only break at the bin X just grew
    if (x.loads[bx] > y.loads[bx]) {
      rep.domination_ok = false;
      rep.first_violation = static_cast<Round>(t);
      break;
    }
    if (t % 1024 == 0 && !full_check(static_cast<Round>(t))) break;
  }
  if (rep.domination_ok) full_check(static_cast<Round>(rep.rounds_run));
  rep.max_load_x = max_load(x);
  rep.max_load_y = max_load(y);
  return rep;
}

// Empirical per-bin placement probabilities of designated balls, maximized
// over (checkpoint ball, bin). Each trial is an independent fresh run; by
// default the checkpoints are the first, middle and last ball.
inline double uniformity_estimate(const DynamicModel& model, std::uint32_t d, std::uint64_t m,
                                  std::uint32_t trials, std::uint64_t seed,
                                  std::vector<std::uint64_t> checkpoints = {},
                                  std::uint32_t threads = 1) {
  RunConfig probe;
  probe.model = &model;
  probe.d = d;
  probe.m = m;
  validate_run_config(probe);
  if (trials == 0) throw ConfigError("uniformity estimate: need trials >= 1");
  if (threads == 0) threads = 1;
  if (checkpoints.empty())
    checkpoints = {1, std::max<std::uint64_t>(1, m / 2), m};
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  for (auto c : checkpoints)
    if (c < 1 || c > m) throw ConfigError("uniformity estimate: checkpoint outside 1..m");

  const auto n = model.n();
  const auto cells = checkpoints.size();
  auto run_block = [&](std::uint32_t lo, std::uint32_t hi, std::vector<std::uint64_t>& counts) {
    counts.assign(cells * n, 0);
    LoadState loads;
    DChoice choice;
    const std::uint64_t last = checkpoints.back();
    for (std::uint32_t trial = lo; trial < hi; ++trial) {
      RandomStream root(seed, trial);
      loads = LoadState(n);
      std::size_t next_cp = 0;
      for (std::uint64_t t = 1; t <= last; ++t) {
        auto rng = root.for_ball(t);
        model.sample_ball(static_cast<Round>(t), d, rng, false, nullptr, &choice);
        const BinId dest = detail::pick_least_loaded(loads, choice, rng);
        apply_placement(loads, dest);
        if (t == checkpoints[next_cp]) {
          counts[next_cp * n + dest] += 1;
          ++next_cp;
        }
      }
    }
  };

  std::vector<std::vector<std::uint64_t>> partial(threads);
  if (threads == 1) {
    run_block(0, trials, partial[0]);
  } else {
    std::vector<std::thread> pool;
    const std::uint32_t chunk = (trials + threads - 1) / threads;
    for (std::uint32_t w = 0; w < threads; ++w) {
      const std::uint32_t lo = std::min(trials, w * chunk), hi = std::min(trials, lo + chunk);
      pool.emplace_back(run_block, lo, hi, std::ref(partial[w]));
    }
    for (auto& th : pool) th.join();
  }

  std::vector<std::uint64_t> counts(cells * n, 0);
  for (const auto& p : partial)
    for (std::size_t i = 0; i < p.size(); ++i) counts[i] += p[i];
  std::uint64_t best = 0;
  for (auto c : counts) best = std::max(best, c);
  return static_cast<double>(best) / static_cast<double>(trials);
}

}  // namespace dynaball
