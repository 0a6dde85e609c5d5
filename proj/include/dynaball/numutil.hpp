#pragma once

#include <cmath>
#include <cstdint>

#include "dynaball/errors.hpp"

namespace dynaball {

inline std::uint64_t isqrt(std::uint64_t x) {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(x)));
  while (r > 0 && r * r > x) --r;
  while ((r + 1) * (r + 1) <= x) ++r;
  return r;
}

inline bool is_perfect_square(std::uint64_t x) {
  auto r = isqrt(x);
  return r * r == x;
}

inline std::uint64_t ceil_sqrt(std::uint64_t x) {
  auto r = isqrt(x);
  return r * r == x ? r : r + 1;
}

inline bool is_prime(std::uint64_t x) {
  if (x < 2) return false;
  if (x % 2 == 0) return x == 2;
  for (std::uint64_t d = 3; d * d <= x; d += 2)
    if (x % d == 0) return false;
  return true;
}

inline std::uint64_t next_prime_at_least(std::uint64_t x) {
  if (x <= 2) return 2;
  if (x % 2 == 0) ++x;
  while (!is_prime(x)) x += 2;
  return x;
}

// Smallest q >= 1 with q * n^(3/4) >= t, computed exactly: the condition is
// equivalent to q^4 * n^3 >= t^4 over the integers. Floating point only seeds
// the search. Requires n <= 10^9 so the 128-bit products cannot overflow.
inline std::uint64_t ceil_ratio_pow34(std::uint64_t t, std::uint64_t n) {
  if (n == 0 || n > 1000000000ULL) throw ContractError("ceil_ratio_pow34: n out of range");
  if (t == 0) throw ContractError("ceil_ratio_pow34: t must be >= 1");
  const auto pow4 = [](std::uint64_t x) {
    unsigned __int128 sq = static_cast<unsigned __int128>(x) * x;
    return sq * sq;
  };
  const unsigned __int128 n3 = static_cast<unsigned __int128>(n) * n * n;
  const unsigned __int128 t4 = pow4(t);
  auto q = static_cast<std::uint64_t>(
      std::ceil(static_cast<double>(t) / std::pow(static_cast<double>(n), 0.75)));
  if (q == 0) q = 1;
  while (q > 1 && pow4(q - 1) * n3 >= t4) --q;
  while (pow4(q) * n3 < t4) ++q;
  return q;
}

inline std::uint64_t mod_mul(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

inline std::uint64_t mod_pow(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
  std::uint64_t r = 1 % m;
  base %= m;
  while (exp > 0) {
    if (exp & 1) r = mod_mul(r, base, m);
    base = mod_mul(base, base, m);
    exp >>= 1;
  }
  return r;
}

// Inverse mod a prime p, via Fermat.
inline std::uint64_t mod_inverse(std::uint64_t a, std::uint64_t p) {
  if (a % p == 0) throw ContractError("mod_inverse: a divisible by p");
  return mod_pow(a, p - 2, p);
}

}  // namespace dynaball
