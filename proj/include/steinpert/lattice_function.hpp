// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "steinpert/common.hpp"
#include "steinpert/lattice_measure.hpp"

namespace steinpert {

// Tail convention above the stored window.  Everything vanishes to the LEFT
// of the window: test functions here have finite support on that side, and
// P0-projected functions are zero off Z_+ by definition.
enum class TailRule {
  kZero,      // f(j) = 0 for j above the window
  kConstant,  // f(j) = last stored value for j above the window
};

// Real function on an integer window.  When tail_exact is false the values
// above the window are simply unknown (e.g. numerically solved Stein
// solutions, whose true tail is neither zero nor constant); reading there is
// a WindowError rather than a silent guess.
struct LatticeFunction {
  long long offset = 0;
  std::vector<double> values;
  TailRule tail = TailRule::kZero;
  bool tail_exact = true;

  long long lo() const { return offset; }
  long long hi() const { return offset + static_cast<long long>(values.size()) - 1; }
  bool empty() const { return values.empty(); }

  double at(long long j) const {
    if (empty()) return 0.0;
    if (j < offset) return 0.0;
    if (j <= hi()) return values[static_cast<std::size_t>(j - offset)];
    if (!tail_exact) {
      throw WindowError("LatticeFunction: read at " + std::to_string(j) +
                        " beyond valid window hi=" + std::to_string(hi()));
    }
    return tail == TailRule::kZero ? 0.0 : values.back();
  }

  // Largest index with a usable value (+inf when the tail is analytic).
  long long valid_hi() const {
    return tail_exact ? std::numeric_limits<long long>::max() : hi();
  }
};

inline LatticeFunction indicator_at(long long j) {
  return LatticeFunction{j, {1.0}, TailRule::kZero, true};
}

inline LatticeFunction constant_function(double c) {
  return LatticeFunction{0, {c}, TailRule::kConstant, true};
}

// Norms on the test-function space F.
enum class NormKind {
  kSup,                  // ||f||_inf
  kWassersteinSeminorm,  // ||f||_W = sup_j |f(j+1) - f(j)|
  kL1,                   // ||f||_1 = sum_j |f(j)|
};

inline const char* norm_name(NormKind k) {
  switch (k) {
    case NormKind::kSup: return "sup";
    case NormKind::kWassersteinSeminorm: return "wasserstein";
    case NormKind::kL1: return "l1";
  }
  return "?";
}

// Norm of f over j >= from.  Tail-aware: a constant tail contributes its
// value to the sup, nothing to differences, and is rejected for l1.
inline double norm_of(const LatticeFunction& f, NormKind kind, long long from = 0) {
  if (f.empty()) return 0.0;
  const long long a = std::max(from, f.lo());
  switch (kind) {
    case NormKind::kSup: {
      double v = 0.0;
      for (long long j = a; j <= f.hi(); ++j) v = std::max(v, std::abs(f.at(j)));
      if (f.tail_exact && f.tail == TailRule::kConstant) {
        v = std::max(v, std::abs(f.values.back()));
      }
      return v;
    }
    case NormKind::kWassersteinSeminorm: {
      double v = 0.0;
      const long long b = f.tail_exact ? f.hi() + 1 : f.hi() - 1;
      for (long long j = a; j <= b; ++j) v = std::max(v, std::abs(f.at(j + 1) - f.at(j)));
      return v;
    }
    case NormKind::kL1: {
      if (f.tail_exact && f.tail == TailRule::kConstant && f.values.back() != 0.0) {
        throw PreconditionError("norm_of: l1 norm of a nonzero constant tail is infinite");
      }
      double v = 0.0;
      for (long long j = a; j <= f.hi(); ++j) v += std::abs(f.at(j));
      return v;
    }
  }
  return 0.0;
}

// pi(f) = sum_j pi{j} f(j).  deficit_above is mass of pi known to sit above
// the stored window (e.g. the trimmed Poisson tail); it is paired with the
// function's upper-tail value.
inline double expectation(const SignedLatticeMeasure& pi, const LatticeFunction& f,
                          double deficit_above = 0.0) {
  double s = 0.0;
  for (long long j = pi.lo(); j <= pi.hi(); ++j) {
    const double w = pi.at(j);
    if (w != 0.0) s += w * f.at(j);
  }
  if (deficit_above != 0.0) s += deficit_above * f.at(pi.hi() + 1);
  return s;
}

}  // namespace steinpert
