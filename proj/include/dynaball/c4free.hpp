#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "dynaball/errors.hpp"
#include "dynaball/numutil.hpp"
#include "dynaball/rng.hpp"

namespace dynaball {

struct UndirectedGraph {
  std::uint32_t n = 0;
  std::vector<std::vector<std::uint32_t>> adj;

  explicit UndirectedGraph(std::uint32_t vertices = 0) : n(vertices), adj(vertices) {}

  void add_edge(std::uint32_t u, std::uint32_t v) {
    if (u == v || u >= n || v >= n) throw ContractError("add_edge: bad endpoints");
    adj[u].push_back(v);
    adj[v].push_back(u);
  }

  void sort_adjacency() {
    for (auto& a : adj) std::sort(a.begin(), a.end());
  }

  bool is_regular(std::uint32_t degree) const {
    for (const auto& a : adj)
      if (a.size() != degree) return false;
    return true;
  }
};

// True iff some vertex pair has two or more common neighbors. Quadratic in
// degree per vertex; meant for n up to about 10^4.
inline bool has_four_cycle(const UndirectedGraph& g) {
  std::unordered_set<std::uint64_t> seen;
  for (std::uint32_t v = 0; v < g.n; ++v) {
    const auto& nb = g.adj[v];
    for (std::size_t i = 0; i < nb.size(); ++i)
      for (std::size_t j = i + 1; j < nb.size(); ++j) {
        std::uint32_t a = std::min(nb[i], nb[j]);
        std::uint32_t b = std::max(nb[i], nb[j]);
        if (a == b) throw ContractError("has_four_cycle: multi-edge in input");
        if (!seen.insert(std::uint64_t{a} * g.n + b).second) return true;
      }
  }
  return false;
}

namespace detail {

// Arithmetic in GF(p^k) for small prime powers, via full add/mul tables.
// Elements are encoded base p (coefficient vectors of polynomials mod an
// irreducible monic polynomial found by brute force).
class GaloisField {
 public:
  explicit GaloisField(std::uint32_t q) : q_(q) {
    std::uint32_t p = smallest_prime_factor(q);
    std::uint32_t k = 0;
    std::uint32_t m = q;
    while (m % p == 0) m /= p, ++k;
    if (m != 1) throw ConfigError("GF(q): q = " + std::to_string(q) + " is not a prime power");
    p_ = p;
    k_ = k;
    if (k_ > 1) find_irreducible();
    build_tables();
  }

  std::uint32_t q() const { return q_; }
  std::uint32_t add(std::uint32_t a, std::uint32_t b) const { return add_[a * q_ + b]; }
  std::uint32_t mul(std::uint32_t a, std::uint32_t b) const { return mul_[a * q_ + b]; }

 private:
  static std::uint32_t smallest_prime_factor(std::uint32_t x) {
    if (x < 2) throw ConfigError("GF(q): q must be >= 2");
    for (std::uint32_t d = 2; d * d <= x; ++d)
      if (x % d == 0) return d;
    return x;
  }

  using Poly = std::vector<std::uint32_t>;  // coefficients, low degree first

  Poly decode(std::uint32_t e) const {
    Poly c(k_, 0);
    for (std::uint32_t i = 0; i < k_; ++i) {
      c[i] = e % p_;
      e /= p_;
    }
    return c;
  }

  std::uint32_t encode(const Poly& c) const {
    std::uint32_t e = 0;
    for (std::uint32_t i = k_; i-- > 0;) e = e * p_ + (i < c.size() ? c[i] : 0);
    return e;
  }

  // Remainder of a by monic b over GF(p).
  Poly poly_mod(Poly a, const Poly& b) const {
    const auto db = b.size() - 1;
    while (a.size() > db) {
      const std::uint32_t lead = a.back();
      if (lead != 0) {
        const auto shift = a.size() - 1 - db;
        for (std::size_t i = 0; i <= db; ++i) {
          const std::uint32_t sub = (lead * b[i]) % p_;
          a[shift + i] = (a[shift + i] + p_ - sub) % p_;
        }
      }
      a.pop_back();
    }
    return a;
  }

  Poly poly_mul(const Poly& a, const Poly& b) const {
    Poly r(a.size() + b.size() - 1, 0);
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j)
        r[i + j] = (r[i + j] + a[i] * b[j]) % p_;
    return r;
  }

  bool divides(const Poly& d, const Poly& target) const {
    auto r = poly_mod(target, d);
    for (auto c : r)
      if (c != 0) return false;
    return true;
  }

  // Monic irreducible of degree k over GF(p), by exhaustive trial division.
  void find_irreducible() {
    std::uint32_t total = 1;
    for (std::uint32_t i = 0; i < k_; ++i) total *= p_;
    for (std::uint32_t low = 0; low < total; ++low) {
      Poly cand(k_ + 1, 0);
      std::uint32_t e = low;
      for (std::uint32_t i = 0; i < k_; ++i) {
        cand[i] = e % p_;
        e /= p_;
      }
      cand[k_] = 1;
      bool ok = true;
      // candidate divisors: all monic polys of degree 1..k/2
      for (std::uint32_t deg = 1; ok && 2 * deg <= k_; ++deg) {
        std::uint32_t count = 1;
        for (std::uint32_t i = 0; i < deg; ++i) count *= p_;
        for (std::uint32_t dl = 0; ok && dl < count; ++dl) {
          Poly div(deg + 1, 0);
          std::uint32_t f = dl;
          for (std::uint32_t i = 0; i < deg; ++i) {
            div[i] = f % p_;
            f /= p_;
          }
          div[deg] = 1;
          if (divides(div, cand)) ok = false;
        }
      }
      if (ok) {
        modulus_ = cand;
        return;
      }
    }
    throw ContractError("GF(q): no irreducible polynomial found");
  }

  void build_tables() {
    add_.resize(std::size_t{q_} * q_);
    mul_.resize(std::size_t{q_} * q_);
    for (std::uint32_t a = 0; a < q_; ++a)
      for (std::uint32_t b = 0; b < q_; ++b) {
        if (k_ == 1) {
          add_[a * q_ + b] = (a + b) % p_;
          mul_[a * q_ + b] = (a * b) % p_;
        } else {
          Poly pa = decode(a), pb = decode(b);
          Poly sum(k_, 0);
          for (std::uint32_t i = 0; i < k_; ++i) sum[i] = (pa[i] + pb[i]) % p_;
          add_[a * q_ + b] = encode(sum);
          mul_[a * q_ + b] = encode(poly_mod(poly_mul(pa, pb), modulus_));
        }
      }
  }

  std::uint32_t p_ = 0, k_ = 0, q_ = 0;
  Poly modulus_;
  std::vector<std::uint32_t> add_, mul_;
};

}  // namespace detail

// Kneser graph K(5,2): 3-regular on 10 vertices, girth 5.
inline UndirectedGraph petersen_graph() {
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < 5; ++a)
    for (int b = a + 1; b < 5; ++b) pairs.emplace_back(a, b);
  UndirectedGraph g(10);
  for (std::size_t i = 0; i < pairs.size(); ++i)
    for (std::size_t j = i + 1; j < pairs.size(); ++j) {
      auto [a, b] = pairs[i];
      auto [c, d] = pairs[j];
      if (a != c && a != d && b != c && b != d) g.add_edge(i, j);
    }
  g.sort_adjacency();
  return g;
}

// Point-line incidence graph of the projective plane of order q (q a prime
// power): bipartite, (q+1)-regular, 2(q^2+q+1) vertices, girth 6. Points are
// canonical homogeneous triples; a point lies on a line iff the dot product
// vanishes in GF(q).
inline UndirectedGraph pg_incidence_graph(std::uint32_t q) {
  detail::GaloisField f(q);
  std::vector<std::array<std::uint32_t, 3>> reps;
  for (std::uint32_t a = 0; a < q; ++a)
    for (std::uint32_t b = 0; b < q; ++b) reps.push_back({1, a, b});
  for (std::uint32_t a = 0; a < q; ++a) reps.push_back({0, 1, a});
  reps.push_back({0, 0, 1});
  const auto count = static_cast<std::uint32_t>(reps.size());  // q^2+q+1

  UndirectedGraph g(2 * count);
  for (std::uint32_t pi = 0; pi < count; ++pi)
    for (std::uint32_t li = 0; li < count; ++li) {
      const auto& p = reps[pi];
      const auto& l = reps[li];
      std::uint32_t dot = f.add(f.add(f.mul(p[0], l[0]), f.mul(p[1], l[1])), f.mul(p[2], l[2]));
      if (dot == 0) g.add_edge(pi, count + li);
    }
  g.sort_adjacency();
  return g;
}

// Random s-regular C4-free graph by repeated pairing-model draws. Throws when
// the parameters are impossible or the retry budget runs out.
inline UndirectedGraph random_regular_c4free(std::uint32_t n, std::uint32_t s, std::uint64_t seed,
                                             std::uint32_t max_tries = 2000) {
  if (s >= n) throw ConfigError("random_regular_c4free: need s < n");
  if ((std::uint64_t{n} * s) % 2 != 0)
    throw ConfigError("random_regular_c4free: n*s must be even");
  RandomStream rng(seed);
  for (std::uint32_t attempt = 0; attempt < max_tries; ++attempt) {
    std::vector<std::uint32_t> stubs;
    stubs.reserve(std::size_t{n} * s);
    for (std::uint32_t v = 0; v < n; ++v)
      for (std::uint32_t i = 0; i < s; ++i) stubs.push_back(v);
    rng.shuffle(stubs);
    UndirectedGraph g(n);
    std::unordered_set<std::uint64_t> used;
    bool ok = true;
    for (std::size_t i = 0; ok && i < stubs.size(); i += 2) {
      std::uint32_t u = stubs[i], v = stubs[i + 1];
      if (u == v) ok = false;
      else {
        auto key = std::uint64_t{std::min(u, v)} * n + std::max(u, v);
        if (!used.insert(key).second) ok = false;
        else g.add_edge(u, v);
      }
    }
    if (!ok) continue;
    g.sort_adjacency();
    if (!has_four_cycle(g)) return g;
  }
  throw ConfigError("random_regular_c4free: no C4-free " + std::to_string(s) +
                    "-regular graph on " + std::to_string(n) + " vertices found within budget");
}

}  // namespace dynaball
