// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <optional>
#include <vector>

#include "steinpert/common.hpp"

namespace steinpert {

// Finite-support signed measure on the integers.  weights[i] is the mass at
// offset + i.  After trim() the first and last stored weights exceed kTrimEps
// in magnitude; interior weights may be anything, including zero.
struct SignedLatticeMeasure {
  long long offset = 0;
  std::vector<double> weights;

  bool empty() const { return weights.empty(); }
  long long lo() const { return offset; }
  long long hi() const { return offset + static_cast<long long>(weights.size()) - 1; }

  double at(long long j) const {
    if (j < lo() || j > hi()) return 0.0;
    return weights[static_cast<std::size_t>(j - offset)];
  }

  void trim(double eps = kTrimEps) {
    std::size_t b = 0, e = weights.size();
    while (b < e && std::abs(weights[b]) <= eps) ++b;
    while (e > b && std::abs(weights[e - 1]) <= eps) --e;
    if (b == e) {
      offset = 0;
      weights.clear();
      return;
    }
    offset += static_cast<long long>(b);
    weights = std::vector<double>(weights.begin() + static_cast<std::ptrdiff_t>(b),
                                  weights.begin() + static_cast<std::ptrdiff_t>(e));
  }
};

inline SignedLatticeMeasure delta_measure(long long j) {
  return SignedLatticeMeasure{j, {1.0}};
}

inline double total_mass(const SignedLatticeMeasure& m) {
  double s = 0.0;
  for (double w : m.weights) s += w;
  return s;
}

inline double abs_mass(const SignedLatticeMeasure& m) {
  double s = 0.0;
  for (double w : m.weights) s += std::abs(w);
  return s;
}

// |pi|(Z_-): absolute mass strictly below zero.
inline double abs_mass_negative(const SignedLatticeMeasure& m) {
  double s = 0.0;
  for (long long j = m.lo(); j < 0 && j <= m.hi(); ++j) s += std::abs(m.at(j));
  return s;
}

inline double max_abs_weight(const SignedLatticeMeasure& m) {
  double v = 0.0;
  for (double w : m.weights) v = std::max(v, std::abs(w));
  return v;
}

// (a*b){j} = sum_k a{k} b{j-k}.  Total mass multiplies.  Empty convolves to
// empty: the zero measure is absorbing, not an identity.
inline SignedLatticeMeasure convolve(const SignedLatticeMeasure& a,
                                     const SignedLatticeMeasure& b) {
  if (a.empty() || b.empty()) return {};
  SignedLatticeMeasure out;
  out.offset = a.offset + b.offset;
  out.weights.assign(a.weights.size() + b.weights.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.weights.size(); ++i) {
    if (a.weights[i] == 0.0) continue;
    for (std::size_t k = 0; k < b.weights.size(); ++k) {
      out.weights[i + k] += a.weights[i] * b.weights[k];
    }
  }
  out.trim();
  return out;
}

// Generating function sum_j m{j} z^j.  Two-sided supports need z > 0; the
// value is then the Laurent sum.
inline double gf_eval(const SignedLatticeMeasure& m, double z) {
  if (m.lo() < 0 && z <= 0.0) {
    throw PreconditionError("gf_eval: two-sided support requires z > 0");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < m.weights.size(); ++i) {
    const long long j = m.offset + static_cast<long long>(i);
    s += m.weights[i] * std::pow(z, static_cast<double>(j));
  }
  return s;
}

// Po(lambda) on a window [0, K] capturing all but tail_tol of the mass.
// Ratio recursion from the mode keeps every weight in the normal range.
inline SignedLatticeMeasure poisson_pmf(double lambda, double tail_tol = 1e-15) {
  if (!(lambda > 0.0)) throw PreconditionError("poisson_pmf: lambda must be positive");
  const long long mode = static_cast<long long>(std::floor(lambda));
  const double log_pmode =
      static_cast<double>(mode) * std::log(lambda) - lambda - std::lgamma(static_cast<double>(mode) + 1.0);
  const double pmode = std::exp(log_pmode);

  std::vector<double> up;  // mode, mode+1, ...
  up.push_back(pmode);
  std::vector<double> down;  // mode-1, mode-2, ..., 0
  {
    double p = pmode;
    for (long long k = mode; k >= 1; --k) {
      p *= static_cast<double>(k) / lambda;
      down.push_back(p);
    }
  }
  double captured = pmode;
  for (double p : down) captured += p;
  {
    double p = pmode;
    long long k = mode;
    // captured can stall ~1 ulp short of 1, so past twice the mean a weight
    // below tail_tol certifies the remaining tail (geometric with ratio < 1/2).
    while (1.0 - captured > tail_tol &&
           !(k >= 2 * (mode + 1) && p <= tail_tol)) {
      if (up.size() + down.size() > kMaxWindow) {
        throw DivergenceError("poisson_pmf: window cap exceeded");
      }
      ++k;
      p *= lambda / static_cast<double>(k);
      up.push_back(p);
      captured += p;
    }
  }
  SignedLatticeMeasure out;
  out.offset = 0;
  out.weights.assign(down.size() + up.size(), 0.0);
  for (std::size_t i = 0; i < down.size(); ++i) {
    out.weights[down.size() - 1 - i] = down[i];
  }
  for (std::size_t i = 0; i < up.size(); ++i) out.weights[down.size() + i] = up[i];
  return out;
}

// Jump rates {lambda_l} of a (possibly signed) compound Poisson exponent
// exp{sum_l lambda_l (z^l - 1)}.  truncation_error carries an upper bound on
// sum_{l>L} l |lambda_l| for whatever was discarded when the spec was built.
struct JumpRateSpec {
  std::map<long long, double> rates;
  double truncation_error = 0.0;

  double rate_mass() const {  // sum_l l lambda_l
    double s = 0.0;
    for (const auto& [l, v] : rates) s += static_cast<double>(l) * v;
    return s;
  }
};

inline JumpRateSpec operator+(const JumpRateSpec& a, const JumpRateSpec& b) {
  JumpRateSpec out = a;
  for (const auto& [l, v] : b.rates) out.rates[l] += v;
  out.truncation_error += b.truncation_error;
  return out;
}

namespace detail {

// Coefficients q_0..q_n of exp{sum_{l>=1} lambda_l (z^l - 1)} by the
// generating-function-derivative recursion
//   q_0 = e^{-Lambda},  j q_j = sum_{l=1}^{min(j,L)} l lambda_l q_{j-l}.
// Valid for signed rates: it encodes Q'(z) = Q(z) sum_l l lambda_l z^{l-1}.
inline std::vector<double> exp_rates_coeffs(const std::map<long long, double>& rates,
                                            std::size_t count) {
  double big_lambda = 0.0;
  for (const auto& [l, v] : rates) big_lambda += v;
  std::vector<double> q(count, 0.0);
  q[0] = std::exp(-big_lambda);
  for (std::size_t j = 1; j < count; ++j) {
    double s = 0.0;
    for (const auto& [l, v] : rates) {
      if (static_cast<std::size_t>(l) > j) break;
      s += static_cast<double>(l) * v * q[j - static_cast<std::size_t>(l)];
    }
    q[j] = s / static_cast<double>(j);
  }
  return q;
}

// Chernoff bound on the absolute tail beyond J: |q_j| is dominated by the
// coefficients of e^{-Lambda} exp{sum |lambda_l| z^l}, so
//   sum_{j>J} |q_j| <= z^{-J} exp{sum_l |lambda_l| z^l - Lambda}, z > 1.
inline double exp_rates_tail_bound(const std::map<long long, double>& rates,
                                   std::size_t window_hi) {
  double big_lambda = 0.0;
  for (const auto& [l, v] : rates) big_lambda += v;
  double best = std::numeric_limits<double>::infinity();
  for (double z : {1.02, 1.05, 1.1, 1.25, 1.5, 2.0, 3.0}) {
    double expo = -big_lambda - static_cast<double>(window_hi) * std::log(z);
    for (const auto& [l, v] : rates) {
      expo += std::abs(v) * std::pow(z, static_cast<double>(l));
    }
    best = std::min(best, std::exp(expo));
  }
  return best;
}

// One-sided exponential: all rates on l >= 1, result supported on Z_+.
inline SignedLatticeMeasure exp_rates_positive(const std::map<long long, double>& rates,
                                               double tail_tol) {
  if (rates.empty()) return delta_measure(0);
  std::size_t window = 32;
  while (exp_rates_tail_bound(rates, window - 1) > tail_tol) {
    if (window > kMaxWindow) {
      throw DivergenceError("exp_rates: tail tolerance unreachable within window cap");
    }
    window *= 2;
  }
  SignedLatticeMeasure out;
  out.offset = 0;
  out.weights = exp_rates_coeffs(rates, window);
  out.trim();
  return out;
}

}  // namespace detail

// The signed measure with generating function exp{sum_l lambda_l (z^l - 1)}.
// Rates on l >= 1 use the recursion directly; two-sided rate sets split into
// positive and negative-l parts, which are exponentiated separately (the
// negative part via mirroring) and convolved.  Total mass is 1 by
// construction (generating function at z = 1).
inline SignedLatticeMeasure exp_rates(const JumpRateSpec& spec, double tail_tol = 1e-13) {
  std::map<long long, double> pos, neg;
  for (const auto& [l, v] : spec.rates) {
    if (l == 0) throw PreconditionError("exp_rates: rate at l = 0 is not a jump");
    if (v == 0.0) continue;
    if (l > 0) {
      pos[l] = v;
    } else {
      neg[-l] = v;
    }
  }
  SignedLatticeMeasure result = detail::exp_rates_positive(pos, tail_tol);
  if (!neg.empty()) {
    SignedLatticeMeasure mirrored = detail::exp_rates_positive(neg, tail_tol);
    std::reverse(mirrored.weights.begin(), mirrored.weights.end());
    mirrored.offset = -(static_cast<long long>(mirrored.weights.size()) - 1 + mirrored.offset);
    result = convolve(result, mirrored);
  }
  return result;
}

// lambda and jump distribution {mu_l} of a compound Poisson law CP(lambda, mu),
// the distribution of sum_l l N_l with independent N_l ~ Po(lambda mu_l).
// Signed mu_l and negative l are allowed; m1 must stay positive.
struct CompoundPoissonSpec {
  double lambda = 0.0;
  std::map<long long, double> mu;

  double m1() const {
    double s = 0.0;
    for (const auto& [l, v] : mu) s += static_cast<double>(l) * v;
    return s;
  }
  // m2 = sum_{l>=1} l(l-1) mu_l, the one-sided second factorial moment.
  double m2() const {
    double s = 0.0;
    for (const auto& [l, v] : mu) {
      if (l >= 1) s += static_cast<double>(l) * static_cast<double>(l - 1) * v;
    }
    return s;
  }
  // m2' = sum_l l(l-1) |mu_l|, which replaces m2 for signed/two-sided specs.
  double m2_abs() const {
    double s = 0.0;
    for (const auto& [l, v] : mu) {
      s += static_cast<double>(l) * static_cast<double>(l - 1) * std::abs(v);
    }
    return s;
  }
  bool one_sided() const {
    for (const auto& [l, v] : mu) {
      if (l < 1 && v != 0.0) return false;
    }
    return true;
  }
  long long max_jump() const {
    long long m = 1;
    for (const auto& [l, v] : mu) {
      if (v != 0.0) m = std::max(m, std::llabs(l));
    }
    return m;
  }
  JumpRateSpec rates() const {
    JumpRateSpec r;
    for (const auto& [l, v] : mu) {
      if (v != 0.0) r.rates[l] = lambda * v;
    }
    return r;
  }
  void validate() const {
    if (!(lambda > 0.0)) throw PreconditionError("CompoundPoissonSpec: lambda must be positive");
    if (!(m1() > 0.0)) throw PreconditionError("CompoundPoissonSpec: m1 must be positive");
  }
};

// sum_{m>=n} m^{-l} for l >= 2: explicit terms to K = 11n, then the integral
// bracket [K^{1-l}/(l-1), (K-1)^{1-l}/(l-1)]; midpoint taken, half-width
// reported so callers can carry it as truncation error.
struct TailPowerSum {
  double value = 0.0;
  double half_width = 0.0;
};

inline TailPowerSum tail_power_sum(long long n, int l) {
  if (l < 2) throw PreconditionError("tail_power_sum: requires l >= 2");
  if (n < 1) throw PreconditionError("tail_power_sum: requires n >= 1");
  const long long K = 11 * n;
  double partial = 0.0;
  for (long long m = K - 1; m >= n; --m) {
    partial += std::pow(static_cast<double>(m), -static_cast<double>(l));
  }
  const double lm1 = static_cast<double>(l - 1);
  const double lo_rem = std::pow(static_cast<double>(K), 1.0 - static_cast<double>(l)) / lm1;
  const double hi_rem = std::pow(static_cast<double>(K - 1), 1.0 - static_cast<double>(l)) / lm1;
  return {partial + 0.5 * (lo_rem + hi_rem), 0.5 * (hi_rem - lo_rem)};
}

// Analytic tail of a Bernoulli family: p_i = 1/i for all i > n (the records
// model).  Tail sums over i > n reduce to sum_{m>=n} m^{-l}.
struct RecordsTail {
  long long n = 0;
};

// Jump rates of the Borovkov-Pfeifer signed compound Poisson representation.
// For the finite family { p_i } the correction rates are
//   lambda_l += ((-1)^{l+1}/l) sum_i (p_i/q_i)^l,  l >= 1,  q_i = 1 - p_i,
// and with include_poisson the Po(lambda) factor folds into lambda_1, making
// exp_rates of the result the full Po(lambda) * BP measure, whose generating
// function is prod_i (1 + p_i(z-1)) x (tail factors).  An analytic records
// tail adds lambda_1 += 1/n (telescoping sum of p_i^2/q_i over i > n) and
// lambda_l += ((-1)^{l+1}/l) sum_{m>=n} m^{-l} for l >= 2.
//
// max_jump = 0 picks the smallest L with sum_{l>L} l |lambda_l| < 1e-12 lambda;
// the discarded mass (plus tail-sum bracket widths) lands in truncation_error.
inline JumpRateSpec bp_rates(const std::vector<double>& p,
                             std::optional<RecordsTail> tail = std::nullopt,
                             int max_jump = 0,
                             bool include_poisson = true) {
  for (double pi : p) {
    if (!(pi >= 0.0 && pi < 1.0 / 3.0)) {
      throw PreconditionError("bp_rates: requires 0 <= p_i < 1/3");
    }
  }
  if (tail && tail->n < 3) {
    throw PreconditionError("bp_rates: records tail requires n >= 3");
  }
  double lambda = 0.0;
  std::vector<double> r;
  r.reserve(p.size());
  for (double pi : p) {
    lambda += pi;
    if (pi > 0.0) r.push_back(pi / (1.0 - pi));
  }

  // Upper bound on sum_{l>L} l |lambda_l| = sum_{l>L} sum_i r_i^l (+ tail part).
  auto discarded_bound = [&](int L) {
    double b = 0.0;
    for (double ri : r) b += std::pow(ri, L + 1) / (1.0 - ri);
    if (tail) {
      // sum_{m>=n} sum_{l>L} m^{-l} = sum_{m>=n} m^{-L}/(m-1)
      //   <= (n/(n-1)) sum_{m>=n} m^{-(L+1)}.
      const double n = static_cast<double>(tail->n);
      const TailPowerSum s = tail_power_sum(tail->n, L + 1);
      b += (n / (n - 1.0)) * (s.value + s.half_width);
    }
    return b;
  };

  int L = max_jump;
  if (L <= 0) {
    L = 2;
    const double target = 1e-12 * std::max(lambda, 1e-300);
    while (L < 400 && discarded_bound(L) > target) ++L;
  }

  JumpRateSpec spec;
  spec.truncation_error = discarded_bound(L);
  for (int l = 1; l <= L; ++l) {
    const double sign = (l % 2 == 1) ? 1.0 : -1.0;
    double s = 0.0;
    for (double ri : r) s += std::pow(ri, l);
    double lam_l = sign * s / static_cast<double>(l);
    if (tail) {
      if (l == 1) {
        // sum_{i>n} p_i^2/q_i = sum_{i>n} 1/(i(i-1)) = 1/n exactly.
        lam_l += 1.0 / static_cast<double>(tail->n);
      } else {
        const TailPowerSum ts = tail_power_sum(tail->n, l);
        lam_l += sign * ts.value / static_cast<double>(l);
        spec.truncation_error += ts.half_width;
      }
    }
    if (lam_l != 0.0) spec.rates[l] = lam_l;
  }
  if (include_poisson && lambda > 0.0) spec.rates[1] += lambda;
  return spec;
}

}  // namespace steinpert
