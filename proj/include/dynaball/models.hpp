#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <istream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dynaball/c4free.hpp"
#include "dynaball/core.hpp"
#include "dynaball/errors.hpp"
#include "dynaball/numutil.hpp"
#include "dynaball/rng.hpp"

namespace dynaball {

// A per-round edge source: round t (1-based) has an edge set E_t over n bins,
// every edge with the same size s. Allocation samples edges; diagnostics
// enumerate them or test pair membership. Implementations must be usable
// read-only from several threads at once.
class DynamicModel {
 public:
  virtual ~DynamicModel() = default;

  virtual std::uint32_t n() const = 0;
  virtual std::uint32_t edge_size() const = 0;  // s
  virtual Round horizon() const = 0;            // rounds are 1..horizon

  virtual std::size_t edge_count(Round t) const { return edges(t).size(); }
  virtual std::vector<Hyperedge> edges(Round t) const = 0;

  virtual Hyperedge sample_edge(Round t, RandomStream& rng) const {
    auto all = edges(t);
    if (all.empty()) throw RoundError(t, "empty edge set");
    return all[rng.below(all.size())];
  }

  // One ball's draw: an edge of E_t, then a uniform d-subset of it (no
  // repetition; when d equals the edge size the subset is the edge and no
  // extra randomness is consumed). edge_out is only filled when want_edge is
  // set, so trace-free runs on models with huge edges stay cheap.
  virtual void sample_ball(Round t, std::uint32_t d, RandomStream& rng, bool want_edge,
                           Hyperedge* edge_out, DChoice* choice_out) const {
    Hyperedge e = sample_edge(t, rng);
    if (d == 0 || d > e.size()) throw ConfigError("sample_ball: need 1 <= d <= edge size");
    if (d == e.size()) {
      *choice_out = e;
    } else {
      auto pool = e;
      for (std::uint32_t i = 0; i < d; ++i) {
        auto j = i + static_cast<std::uint32_t>(rng.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
      }
      choice_out->assign(pool.begin(), pool.begin() + d);
      sort_bins(*choice_out);
    }
    if (want_edge && edge_out) *edge_out = std::move(e);
  }

  // True iff {a, b} is contained in some edge of E_t.
  virtual bool pair_visible(Round t, BinId a, BinId b) const {
    for (const auto& e : edges(t))
      if (contains_bin(e, a) && contains_bin(e, b)) return true;
    return false;
  }

  // Certified visibility ceiling for this model (trivially the horizon when
  // nothing better is known).
  virtual double visibility_bound() const { return horizon(); }

  virtual bool single_choice_allowed() const { return false; }
  virtual bool defer_empty_rounds() const { return false; }

  // Pr[bin i is in a uniformly drawn edge of E_t], exactly.
  virtual std::vector<double> inclusion_probability(Round t) const {
    std::vector<double> p(n(), 0.0);
    auto all = edges(t);
    if (all.empty()) throw RoundError(t, "empty edge set");
    for (const auto& e : all)
      for (auto b : e) p[b] += 1.0;
    for (auto& v : p) v /= static_cast<double>(all.size());
    return p;
  }

  virtual std::string id() const = 0;
  virtual nlohmann::json descriptor() const = 0;

 protected:
  // Mobile trajectories may run past the nominal horizon while a deferred
  // round retries; every other model is strict.
  virtual Round max_round() const { return horizon(); }

  void check_round(Round t) const {
    if (t < 1 || t > max_round())
      throw ContractError("round " + std::to_string(t) + " outside 1.." +
                          std::to_string(max_round()));
  }
};

// Round t connects i to i + k_t (mod n) for every i, with the offset
// k_t = ceil(t / sqrt(n)) sweeping 1..sqrt(n) over the horizon. When the
// offset reaches n/2 the pairs {i, i+n/2} coincide in opposite directions and
// the round is a perfect matching of n/2 edges; the offset formula is kept
// as is and the duplicate pairs are enumerated once.
class DynamicCycle : public DynamicModel {
 public:
  explicit DynamicCycle(std::uint32_t n) : n_(n) {
    if (n < 4 || !is_perfect_square(n))
      throw ConfigError("cycle model: n must be a perfect square >= 4, got " + std::to_string(n));
    root_ = static_cast<std::uint32_t>(isqrt(n));
  }

  std::uint32_t n() const override { return n_; }
  std::uint32_t edge_size() const override { return 2; }
  Round horizon() const override { return n_; }

  std::uint32_t offset(Round t) const {
    check_round(t);
    return (t + root_ - 1) / root_;  // ceil(t / sqrt(n))
  }

  std::size_t edge_count(Round t) const override {
    return 2 * offset(t) == n_ ? n_ / 2 : n_;
  }

  std::vector<Hyperedge> edges(Round t) const override {
    const std::uint32_t k = offset(t);
    const std::uint32_t count = 2 * k == n_ ? n_ / 2 : n_;
    std::vector<Hyperedge> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) out.push_back(make_edge(i, k));
    return out;
  }

  Hyperedge sample_edge(Round t, RandomStream& rng) const override {
    const std::uint32_t k = offset(t);
    const std::uint32_t count = 2 * k == n_ ? n_ / 2 : n_;
    return make_edge(static_cast<std::uint32_t>(rng.below(count)), k);
  }

  bool pair_visible(Round t, BinId a, BinId b) const override {
    if (a == b) return false;
    const std::uint32_t k = offset(t);
    const std::uint32_t diff = a < b ? b - a : a - b;
    return diff == k || n_ - diff == k;
  }

  double visibility_bound() const override { return root_; }

  std::string id() const override { return "cycle(n=" + std::to_string(n_) + ")"; }

  nlohmann::json descriptor() const override {
    return {{"kind", "cycle"}, {"n", n_}, {"sqrt_n", root_}};
  }

 private:
  Hyperedge make_edge(std::uint32_t i, std::uint32_t k) const {
    BinId a = i, b = (i + k) % n_;
    if (a > b) std::swap(a, b);
    return {a, b};
  }

  std::uint32_t n_, root_;
};

// Round t has one edge per residue alpha: the arithmetic progression
// {alpha + j * k_t mod n : j = 0..s-1} with stride k_t = ceil(sqrt(n)) +
// ceil(t / n^(3/4)). n must be prime; a composite request is bumped to the
// next prime and the substitution is kept visible in the descriptor.
class ModularHypergraph : public DynamicModel {
 public:
  ModularHypergraph(std::uint32_t requested_n, std::uint32_t s)
      : requested_n_(requested_n), s_(s) {
    n_ = static_cast<std::uint32_t>(next_prime_at_least(requested_n));
    if (s < 2) throw ConfigError("modular model: need s >= 2");
    if (s >= n_) throw ConfigError("modular model: need s < n");
    base_ = static_cast<std::uint32_t>(ceil_sqrt(n_));
    max_q_ = static_cast<std::uint32_t>(ceil_ratio_pow34(n_, n_));
    if (std::uint64_t{base_} + max_q_ >= n_)
      throw ConfigError("modular model: n too small, stride would wrap");
    stride_inverse_.resize(max_q_ + 1, 0);
    for (std::uint32_t q = 1; q <= max_q_; ++q)
      stride_inverse_[q] = static_cast<std::uint32_t>(mod_inverse(base_ + q, n_));
    // The theory wants s to grow like log n while |E_t| stays polynomial; at
    // desk scale that window is usually empty, so out-of-range s is a label,
    // never an error.
    const double ln_n = std::log(static_cast<double>(n_));
    s_in_theory_range_ = (s >= ln_n) && (s <= std::pow(static_cast<double>(n_), 0.2));
  }

  std::uint32_t n() const override { return n_; }
  std::uint32_t requested_n() const { return requested_n_; }
  std::uint32_t edge_size() const override { return s_; }
  Round horizon() const override { return n_; }

  std::uint32_t stride(Round t) const {
    check_round(t);
    return base_ + static_cast<std::uint32_t>(ceil_ratio_pow34(t, n_));
  }

  Hyperedge edge_for(Round t, std::uint32_t alpha) const {
    const std::uint32_t k = stride(t);
    Hyperedge e;
    e.reserve(s_);
    std::uint64_t v = alpha % n_;
    for (std::uint32_t j = 0; j < s_; ++j) {
      e.push_back(static_cast<BinId>(v));
      v += k;
      if (v >= n_) v -= n_;
    }
    sort_bins(e);
    return e;
  }

  std::size_t edge_count(Round t) const override {
    check_round(t);
    return n_;
  }

  std::vector<Hyperedge> edges(Round t) const override {
    std::vector<Hyperedge> out;
    out.reserve(n_);
    for (std::uint32_t alpha = 0; alpha < n_; ++alpha) out.push_back(edge_for(t, alpha));
    return out;
  }

  Hyperedge sample_edge(Round t, RandomStream& rng) const override {
    return edge_for(t, static_cast<std::uint32_t>(rng.below(n_)));
  }

  // {a, b} lies in some progression of round t iff (b - a) is j * k_t for a
  // nonzero j with |j| < s, i.e. (b - a) * k_t^-1 mod n lands in
  // [1, s-1] or [n-s+1, n-1].
  bool pair_visible(Round t, BinId a, BinId b) const override {
    if (a == b) return false;
    const std::uint32_t q = stride(t) - base_;
    const std::uint64_t diff = (std::uint64_t{n_} + b - a) % n_;
    const std::uint64_t j = mod_mul(diff, stride_inverse_[q], n_);
    return j <= s_ - 1 || j >= std::uint64_t{n_} - (s_ - 1);
  }

  double visibility_bound() const override {
    return 4.0 * std::pow(static_cast<double>(n_), 0.75);
  }

  bool s_in_theory_range() const { return s_in_theory_range_; }

  std::string id() const override {
    return "modular(n=" + std::to_string(n_) + ",s=" + std::to_string(s_) + ")";
  }

  nlohmann::json descriptor() const override {
    nlohmann::json j{{"kind", "modular"}, {"n", n_}, {"s", s_}};
    if (requested_n_ != n_) j["requested_n"] = requested_n_;
    if (!s_in_theory_range_) j["out_of_range_s"] = true;
    return j;
  }

 private:
  std::uint32_t requested_n_, s_, n_ = 0, base_ = 0, max_q_ = 0;
  std::vector<std::uint32_t> stride_inverse_;
  bool s_in_theory_range_ = false;
};

// Every round offers the single edge containing all n bins; a d-subset of it
// is the classic d-choice process. The only model where d = 1 makes sense.
class CompleteBaseline : public DynamicModel {
 public:
  explicit CompleteBaseline(std::uint32_t n) : n_(n) {
    if (n == 0) throw ConfigError("baseline model: need n >= 1");
    full_.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) full_[i] = i;
  }

  std::uint32_t n() const override { return n_; }
  std::uint32_t edge_size() const override { return n_; }
  Round horizon() const override { return n_; }

  std::size_t edge_count(Round t) const override {
    check_round(t);
    return 1;
  }

  std::vector<Hyperedge> edges(Round t) const override {
    check_round(t);
    return {full_};
  }

  Hyperedge sample_edge(Round t, RandomStream&) const override {
    check_round(t);
    return full_;
  }

  void sample_ball(Round t, std::uint32_t d, RandomStream& rng, bool want_edge,
                   Hyperedge* edge_out, DChoice* choice_out) const override {
    check_round(t);
    if (d == 0 || d > n_) throw ConfigError("sample_ball: need 1 <= d <= n");
    auto picks = rng.distinct(n_, d);
    sort_bins(picks);
    *choice_out = std::move(picks);
    if (want_edge && edge_out) *edge_out = full_;
  }

  bool pair_visible(Round t, BinId a, BinId b) const override {
    check_round(t);
    return a != b && a < n_ && b < n_;
  }

  std::vector<double> inclusion_probability(Round t) const override {
    check_round(t);
    return std::vector<double>(n_, 1.0);
  }

  bool single_choice_allowed() const override { return true; }

  std::string id() const override { return "baseline(n=" + std::to_string(n_) + ")"; }

  nlohmann::json descriptor() const override { return {{"kind", "baseline"}, {"n", n_}}; }

 private:
  std::uint32_t n_;
  Hyperedge full_;
};

// Static hypergraph whose edges are the vertex neighborhoods of an s-regular
// C4-free graph. C4-freeness makes every bin pair lie in at most one
// neighborhood, which is what the collision statistics need.
class NeighborhoodHypergraph : public DynamicModel {
 public:
  static NeighborhoodHypergraph petersen() {
    return NeighborhoodHypergraph(petersen_graph(), "petersen");
  }
  static NeighborhoodHypergraph heawood() {
    return NeighborhoodHypergraph(pg_incidence_graph(2), "heawood");
  }
  static NeighborhoodHypergraph pg(std::uint32_t q) {
    return NeighborhoodHypergraph(pg_incidence_graph(q), "pg_incidence(" + std::to_string(q) + ")");
  }
  static NeighborhoodHypergraph brute(std::uint32_t n, std::uint32_t s, std::uint64_t seed) {
    return NeighborhoodHypergraph(
        random_regular_c4free(n, s, seed),
        "brute(" + std::to_string(n) + "," + std::to_string(s) + ")");
  }

  NeighborhoodHypergraph(UndirectedGraph g, std::string family)
      : g_(std::move(g)), family_(std::move(family)) {
    if (g_.n == 0) throw ConfigError("c4free model: empty graph");
    s_ = static_cast<std::uint32_t>(g_.adj[0].size());
    if (s_ < 2 || !g_.is_regular(s_))
      throw ConfigError("c4free model: graph must be s-regular with s >= 2");
    if (g_.n <= 10000 && has_four_cycle(g_))
      throw ConfigError("c4free model: graph contains a 4-cycle");
    hyperedges_.reserve(g_.n);
    for (std::uint32_t v = 0; v < g_.n; ++v) {
      Hyperedge e(g_.adj[v].begin(), g_.adj[v].end());
      validate_bins(e, g_.n, "neighborhood edge");
      hyperedges_.push_back(std::move(e));
    }
  }

  std::uint32_t n() const override { return g_.n; }
  std::uint32_t edge_size() const override { return s_; }
  Round horizon() const override { return g_.n; }

  std::size_t edge_count(Round t) const override {
    check_round(t);
    return hyperedges_.size();
  }

  std::vector<Hyperedge> edges(Round t) const override {
    check_round(t);
    return hyperedges_;
  }

  Hyperedge sample_edge(Round t, RandomStream& rng) const override {
    check_round(t);
    return hyperedges_[rng.below(hyperedges_.size())];
  }

  bool pair_visible(Round t, BinId a, BinId b) const override {
    check_round(t);
    if (a == b) return false;
    // common neighbor <=> both in some N(v); adjacency lists are sorted
    const auto& na = g_.adj[a];
    const auto& nb = g_.adj[b];
    std::size_t i = 0, j = 0;
    while (i < na.size() && j < nb.size()) {
      if (na[i] == nb[j]) return true;
      na[i] < nb[j] ? ++i : ++j;
    }
    return false;
  }

  const UndirectedGraph& graph() const { return g_; }

  std::string id() const override {
    return "c4free(" + family_ + ",n=" + std::to_string(g_.n) + ",s=" + std::to_string(s_) + ")";
  }

  nlohmann::json descriptor() const override {
    return {{"kind", "c4free"}, {"family", family_}, {"n", g_.n}, {"s", s_}};
  }

 private:
  UndirectedGraph g_;
  std::string family_;
  std::uint32_t s_ = 0;
  std::vector<Hyperedge> hyperedges_;
};

// ---- geometric mobile network ----

struct MobileState {
  std::uint32_t dims = 1;         // R
  std::uint32_t side = 1;         // torus side length
  double laziness = 0.5;          // probability an agent stays put this step
  std::uint32_t comm_radius = 1;  // Manhattan range for communication
  std::vector<std::uint32_t> positions;  // linear torus index per agent
};

inline std::uint32_t torus_distance(std::uint32_t dims, std::uint32_t side, std::uint32_t a,
                                    std::uint32_t b) {
  std::uint32_t dist = 0;
  for (std::uint32_t axis = 0; axis < dims; ++axis) {
    const std::uint32_t ca = a % side, cb = b % side;
    const std::uint32_t d = ca < cb ? cb - ca : ca - cb;
    dist += std::min(d, side - d);
    a /= side;
    b /= side;
  }
  return dist;
}

// One synchronous lazy-walk step: each agent stays with probability
// `laziness`, otherwise moves one unit along a uniformly chosen axis and
// direction. The uniform distribution over vertices is stationary for this
// walk, so uniformly initialized trajectories stay uniform marginally.
inline MobileState mobile_step(const MobileState& st, RandomStream& rng) {
  MobileState next = st;
  std::uint32_t stride = 1;
  std::vector<std::uint32_t> strides(st.dims);
  for (std::uint32_t axis = 0; axis < st.dims; ++axis) {
    strides[axis] = stride;
    stride *= st.side;
  }
  for (auto& pos : next.positions) {
    if (rng.bernoulli(st.laziness)) continue;
    const auto axis = static_cast<std::uint32_t>(rng.below(st.dims));
    const bool up = rng.below(2) == 0;
    const std::uint32_t coord = (pos / strides[axis]) % st.side;
    const std::uint32_t moved = up ? (coord + 1) % st.side : (coord + st.side - 1) % st.side;
    pos += (moved - coord) * strides[axis];
  }
  return next;
}

// All agent pairs within communication range, co-located agents included.
// Bucketed by cell when the torus is wide enough for offsets to be injective,
// plain pair scan otherwise.
inline std::vector<std::pair<BinId, BinId>> communication_edges(const MobileState& st) {
  const auto agents = static_cast<std::uint32_t>(st.positions.size());
  std::vector<std::pair<BinId, BinId>> out;
  if (st.side < 2 * st.comm_radius + 1) {
    for (std::uint32_t a = 0; a < agents; ++a)
      for (std::uint32_t b = a + 1; b < agents; ++b)
        if (torus_distance(st.dims, st.side, st.positions[a], st.positions[b]) <= st.comm_radius)
          out.emplace_back(a, b);
    return out;
  }

  std::uint32_t cells = 1;
  for (std::uint32_t axis = 0; axis < st.dims; ++axis) cells *= st.side;
  std::vector<std::vector<std::uint32_t>> bucket(cells);
  for (std::uint32_t a = 0; a < agents; ++a) bucket[st.positions[a]].push_back(a);

  // offset vectors with Manhattan norm <= comm_radius, enumerated once
  std::vector<std::vector<std::int32_t>> offsets;
  std::vector<std::int32_t> cur(st.dims, 0);
  const std::int32_t r = static_cast<std::int32_t>(st.comm_radius);
  const std::function<void(std::uint32_t, std::int32_t)> gen = [&](std::uint32_t axis,
                                                                   std::int32_t budget) {
    if (axis == st.dims) {
      offsets.push_back(cur);
      return;
    }
    for (std::int32_t v = -budget; v <= budget; ++v) {
      cur[axis] = v;
      gen(axis + 1, budget - std::abs(v));
    }
  };
  gen(0, r);

  for (std::uint32_t a = 0; a < agents; ++a) {
    std::uint32_t base = st.positions[a];
    for (const auto& off : offsets) {
      std::uint32_t pos = 0, mult = 1, rest = base;
      for (std::uint32_t axis = 0; axis < st.dims; ++axis) {
        const std::uint32_t coord = rest % st.side;
        rest /= st.side;
        const std::uint32_t moved =
            static_cast<std::uint32_t>((static_cast<std::int64_t>(coord) + off[axis] + st.side) %
                                       st.side);
        pos += moved * mult;
        mult *= st.side;
      }
      for (auto b : bucket[pos])
        if (b > a) out.emplace_back(a, b);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Agents random-walk on a torus; round t's graph connects agents within
// Manhattan distance comm_radius of each other in the trajectory's state
// t-1 steps after the uniform start. One agent per bin, so n must be a
// perfect dims-th power. The trajectory is memoized lazily under a mutex;
// states never move or change once computed, so references handed out stay
// valid.
class MobileNetwork : public DynamicModel {
 public:
  MobileNetwork(std::uint32_t n, std::uint32_t dims, double laziness, std::uint32_t comm_radius,
                std::uint64_t traj_seed, Round horizon = 0)
      : n_(n), dims_(dims), laziness_(laziness), comm_radius_(comm_radius),
        traj_seed_(traj_seed) {
    if (dims == 0) throw ConfigError("mobile model: need dims >= 1");
    if (laziness < 0.0 || laziness > 1.0)
      throw ConfigError("mobile model: laziness must be in [0, 1]");
    side_ = static_cast<std::uint32_t>(
        std::llround(std::pow(static_cast<double>(n), 1.0 / dims)));
    std::uint64_t check = 1;
    for (std::uint32_t i = 0; i < dims; ++i) check *= side_;
    if (side_ < 2 || check != n)
      throw ConfigError("mobile model: n must be a perfect dims-th power, got " +
                        std::to_string(n));
    horizon_ = horizon == 0 ? n : horizon;
    MobileState init;
    init.dims = dims;
    init.side = side_;
    init.laziness = laziness;
    init.comm_radius = comm_radius;
    init.positions.resize(n);
    auto rng = RandomStream(traj_seed).for_ball(0);
    for (auto& p : init.positions) p = static_cast<std::uint32_t>(rng.below(n));
    states_.push_back(std::move(init));
  }

  std::uint32_t n() const override { return n_; }
  std::uint32_t edge_size() const override { return 2; }
  Round horizon() const override { return horizon_; }
  std::uint32_t side() const { return side_; }

  const MobileState& state_at_round(Round t) const {
    check_round(t);
    std::scoped_lock lock(mutex_);
    while (states_.size() < t) {
      auto rng = RandomStream(traj_seed_).for_ball(states_.size());
      states_.push_back(mobile_step(states_.back(), rng));
    }
    return states_[t - 1];  // deque elements are reference-stable
  }

  std::vector<Hyperedge> edges(Round t) const override {
    const auto& st = state_at_round(t);
    std::vector<Hyperedge> out;
    for (auto [a, b] : communication_edges(st)) out.push_back({a, b});
    return out;
  }

  bool pair_visible(Round t, BinId a, BinId b) const override {
    const auto& st = state_at_round(t);
    return torus_distance(dims_, side_, st.positions[a], st.positions[b]) <= st.comm_radius;
  }

  double visibility_bound() const override {
    const double delta = std::min(0.25, 1.0 / dims_);
    return bound_slack_ * std::pow(static_cast<double>(n_), 1.0 - delta / 2.0);
  }

  void set_bound_slack(double slack) { bound_slack_ = slack; }

  bool defer_empty_rounds() const override { return true; }

  std::string id() const override {
    std::ostringstream os;
    os << "mobile(R=" << dims_ << ",n=" << n_ << ",p=" << laziness_ << ",r=" << comm_radius_
       << ",traj=" << traj_seed_ << ")";
    return os.str();
  }

  nlohmann::json descriptor() const override {
    return {{"kind", "mobile"},      {"n", n_},
            {"R", dims_},            {"side", side_},
            {"laziness", laziness_}, {"comm_radius", comm_radius_},
            {"traj_seed", traj_seed_}, {"horizon", horizon_}};
  }

 protected:
  Round max_round() const override { return horizon_ + kDeferSlack; }

 public:
  static constexpr Round kDeferSlack = 100;

 private:
  std::uint32_t n_, dims_;
  double laziness_;
  std::uint32_t comm_radius_, side_ = 0;
  Round horizon_;
  std::uint64_t traj_seed_;
  double bound_slack_ = 1.0;
  mutable std::mutex mutex_;
  mutable std::deque<MobileState> states_;
};

// Explicit per-round edge lists read from text. Format: comments start with
// '#'; a "n <count>" line first; each "round" line starts a new round; every
// other line is one edge as whitespace-separated bin ids. All edges must
// have the same size. Rounds may be empty.
class FileModel : public DynamicModel {
 public:
  static FileModel parse(std::istream& is, std::string name = "file") {
    FileModel m;
    m.name_ = std::move(name);
    std::string line;
    bool have_n = false;
    while (std::getline(is, line)) {
      std::istringstream ls(line);
      std::string tok;
      if (!(ls >> tok) || tok[0] == '#') continue;
      if (tok == "n") {
        if (!(ls >> m.n_) || m.n_ == 0) throw ConfigError("file model: bad 'n' line");
        have_n = true;
      } else if (tok == "round") {
        if (!have_n) throw ConfigError("file model: 'n' must come before rounds");
        m.rounds_.emplace_back();
      } else {
        if (m.rounds_.empty()) throw ConfigError("file model: edge before first 'round'");
        Hyperedge e;
        try {
          std::size_t used = 0;
          e.push_back(static_cast<BinId>(std::stoul(tok, &used)));
          if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
          throw ConfigError("file model: bad token '" + tok + "'");
        }
        std::uint64_t v;
        while (ls >> v) e.push_back(static_cast<BinId>(v));
        if (!ls.eof()) throw ConfigError("file model: non-numeric token in edge line");
        sort_bins(e);
        try {
          validate_bins(e, m.n_, "file model edge");
        } catch (const ContractError& err) {
          throw ConfigError(err.what());  // bad input file, not a programming bug
        }
        if (m.s_ == 0)
          m.s_ = static_cast<std::uint32_t>(e.size());
        else if (e.size() != m.s_)
          throw ConfigError("file model: edges must all have the same size");
        m.rounds_.back().push_back(std::move(e));
      }
    }
    if (!have_n || m.rounds_.empty()) throw ConfigError("file model: need 'n' and >= 1 round");
    if (m.s_ == 0) m.s_ = 2;  // all rounds empty; size is moot
    return m;
  }

  static FileModel parse(const std::string& text, std::string name = "file") {
    std::istringstream is(text);
    return parse(is, std::move(name));
  }

  std::uint32_t n() const override { return n_; }
  std::uint32_t edge_size() const override { return s_; }
  Round horizon() const override { return static_cast<Round>(rounds_.size()); }

  std::size_t edge_count(Round t) const override {
    check_round(t);
    return rounds_[t - 1].size();
  }

  std::vector<Hyperedge> edges(Round t) const override {
    check_round(t);
    return rounds_[t - 1];
  }

  std::string id() const override {
    return "file(" + name_ + ",n=" + std::to_string(n_) + ",rounds=" +
           std::to_string(rounds_.size()) + ")";
  }

  nlohmann::json descriptor() const override {
    return {{"kind", "file"}, {"name", name_}, {"n", n_}, {"s", s_},
            {"rounds", rounds_.size()}};
  }

 private:
  FileModel() = default;
  std::uint32_t n_ = 0, s_ = 0;
  std::string name_;
  std::vector<std::vector<Hyperedge>> rounds_;
};

// Monte Carlo inclusion frequencies against the exact enumeration, for
// checking how balanced a model's edge draw is across bins.
struct BalancednessReport {
  std::vector<double> empirical, exact;
  double max_empirical = 0.0, max_exact = 0.0;
};

inline BalancednessReport balancedness_estimate(const DynamicModel& model, Round t,
                                                std::uint32_t samples, RandomStream& rng) {
  if (samples == 0) throw ContractError("balancedness_estimate: samples must be >= 1");
  BalancednessReport rep;
  rep.exact = model.inclusion_probability(t);
  rep.empirical.assign(model.n(), 0.0);
  for (std::uint32_t i = 0; i < samples; ++i) {
    for (auto b : model.sample_edge(t, rng)) rep.empirical[b] += 1.0;
  }
  for (auto& v : rep.empirical) v /= static_cast<double>(samples);
  for (auto v : rep.empirical) rep.max_empirical = std::max(rep.max_empirical, v);
  for (auto v : rep.exact) rep.max_exact = std::max(rep.max_exact, v);
  return rep;
}

}  // namespace dynaball
