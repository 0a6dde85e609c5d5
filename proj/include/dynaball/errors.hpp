#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dynaball {

// Bad user-facing configuration: invalid model parameters, grids, CLI input.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A precondition of a library operation was violated by the caller.
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

// A run failed at a specific round (empty edge set, degenerate retry loop).
struct RoundError : std::runtime_error {
  std::uint32_t round;
  RoundError(std::uint32_t t, const std::string& what)
      : std::runtime_error("round " + std::to_string(t) + ": " + what), round(t) {}
};

}  // namespace dynaball
