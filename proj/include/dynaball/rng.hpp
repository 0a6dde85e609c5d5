#pragma once

#include <cstdint>
#include <vector>

#include "dynaball/errors.hpp"

namespace dynaball {

namespace detail {

// splitmix64 finalizer. Bijective on u64, good avalanche, pure integer ops,
// so results are identical on every platform and compiler.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
inline constexpr std::uint64_t kBallSalt = 0x517cc1b727220a95ULL;

}  // namespace detail

// Counter-based deterministic stream keyed by (seed, run, ball, draw index).
// Substreams derived with for_ball() are independent of how many draws were
// taken from the parent, which keeps traces reproducible no matter how the
// caller interleaves sampling. Never use std::uniform_int_distribution on top
// of this: its output is implementation-defined and would break byte-identical
// traces across platforms.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t run = 0) {
    key_ = detail::mix64(detail::mix64(seed + detail::kGolden) + run);
    state_ = key_;
  }

  // Substream for one ball (or any other sub-entity). Derivation uses the
  // stream key only, not the draw cursor.
  RandomStream for_ball(std::uint64_t ball) const {
    RandomStream r(*this);
    r.key_ = detail::mix64(key_ ^ (detail::kBallSalt + ball));
    r.state_ = r.key_;
    return r;
  }

  std::uint64_t next_u64() {
    state_ += detail::kGolden;
    return detail::mix64(state_);
  }

  // Uniform on [0, bound). Lemire's multiply-shift with rejection; exact, no
  // modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw ContractError("RandomStream::below: bound must be positive");
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (lo < threshold) {
        m = static_cast<unsigned __int128>(next_u64()) * bound;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double next_double() {  // [0, 1), 53-bit resolution
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return next_double() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct values from [0, n), order random. Partial Fisher-Yates when k
  // is a large fraction of n, rejection otherwise. The switch depends only on
  // (n, k), so draws stay reproducible for fixed inputs.
  std::vector<std::uint32_t> distinct(std::uint32_t n, std::uint32_t k) {
    if (k > n) throw ContractError("RandomStream::distinct: k > n");
    std::vector<std::uint32_t> out;
    out.reserve(k);
    if (k * 3 >= n) {
      std::vector<std::uint32_t> pool(n);
      for (std::uint32_t i = 0; i < n; ++i) pool[i] = i;
      for (std::uint32_t i = 0; i < k; ++i) {
        std::uint32_t j = i + static_cast<std::uint32_t>(below(n - i));
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
      }
    } else {
      while (out.size() < k) {
        auto v = static_cast<std::uint32_t>(below(n));
        bool dup = false;
        for (auto u : out) dup |= (u == v);
        if (!dup) out.push_back(v);
      }
    }
    return out;
  }

 private:
  std::uint64_t key_;    // identity of this (seed, run, ball...) substream
  std::uint64_t state_;  // draw cursor, advances per next_u64
};

}  // namespace dynaball
