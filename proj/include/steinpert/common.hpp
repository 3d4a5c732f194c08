// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace steinpert {

// Absolute weight below which support edges of a measure are trimmed.
// Below double-precision convolution noise, so trimming never moves mass
// that a downstream bound could see.
inline constexpr double kTrimEps = 1e-14;

// Hard cap on window growth; exceeding it signals a divergent construction.
inline constexpr std::size_t kMaxWindow = 1'000'000;

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A lattice function was read outside the range on which its values are known.
class WindowError : public Error {
 public:
  explicit WindowError(const std::string& what) : Error(what) {}
};

// A window/series expansion failed to meet its tolerance within the cap.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& what) : Error(what) {}
};

// An operation's stated precondition does not hold for the given inputs.
class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// Deterministic, platform-independent uniform doubles in [0, 1).
// std::uniform_real_distribution is implementation-defined, so outputs that
// must be byte-reproducible across toolchains derive from the raw engine.
template <class Engine>
double uniform01(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <class Engine>
double uniform(Engine& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

}  // namespace steinpert
