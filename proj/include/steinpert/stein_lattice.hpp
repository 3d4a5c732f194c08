// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "steinpert/common.hpp"
#include "steinpert/distance.hpp"
#include "steinpert/lattice_function.hpp"
#include "steinpert/lattice_measure.hpp"

namespace steinpert {

// P0 f = (f - pi0(f)) 1_{Z+}: center under pi0 and cut off the negatives.
// pi0 must be a probability measure on Z_+ (its trimmed upper tail is folded
// into the expectation so that pi0(P0 f) vanishes at full precision).
inline LatticeFunction p0_project(const LatticeFunction& f, const SignedLatticeMeasure& pi0) {
  if (pi0.lo() < 0) {
    throw PreconditionError("p0_project: pi0 must be supported on Z_+");
  }
  const double deficit = 1.0 - total_mass(pi0);
  if (std::abs(deficit) > 1e-9) {
    throw PreconditionError("p0_project: pi0 is not a probability measure");
  }
  const double mean = expectation(pi0, f, deficit);
  LatticeFunction out;
  out.offset = 0;
  // One site past f's window, so the constant extension carries f's own tail
  // value minus the mean, not the last interior value.
  const long long hi = std::max<long long>(f.hi(), 0) + (f.tail_exact ? 1 : 0);
  out.values.reserve(static_cast<std::size_t>(hi + 1));
  for (long long j = 0; j <= hi; ++j) out.values.push_back(f.at(j) - mean);
  out.tail = TailRule::kConstant;
  out.tail_exact = f.tail_exact;
  return out;
}

namespace detail {

// Steps beyond v after which a backward-recursion seed error has contracted
// by at least 1e-18 (each step divides by (i/lambda') > 1 for i > lambda').
inline long long backward_reach(double lambda_prime, long long v) {
  double log_gain = 0.0;
  long long steps = 0;
  const double target = std::log(1e-18);
  while (log_gain > target) {
    ++steps;
    log_gain += std::log(lambda_prime / static_cast<double>(v + steps));
    if (steps > 200000) {
      throw DivergenceError("a0_solve: backward seed cannot contract; window too close to lambda");
    }
  }
  return steps;
}

}  // namespace detail

// Right inverse of the Poisson operator (A0 g)(j) = lambda' g(j+1) - j g(j):
// returns g on [0, g_hi] with g(j) = 0 for j <= 0 and A0 g = f on the window.
// f must already be centered under Po(lambda'); callers compose with
// p0_project.
//
// The forward recursion g(j+1) = (f(j) + j g(j))/lambda' amplifies rounding
// error above lambda', and the Poisson-tail form underflows below it, so the
// two are stitched at the crossover: forward up to ~lambda', backward
// recursion g(j) = (lambda' g(j+1) - f(j))/j seeded with zero a contracted
// distance above g_hi for the rest.
inline LatticeFunction a0_solve(const LatticeFunction& f, double lambda_prime,
                                long long g_hi = -1) {
  if (!(lambda_prime > 0.0)) throw PreconditionError("a0_solve: lambda' must be positive");
  if (g_hi < 0) {
    g_hi = std::max<long long>(f.hi(), 0) + static_cast<long long>(std::ceil(4.0 * lambda_prime)) + 80;
  }
  LatticeFunction g;
  g.offset = 0;
  g.values.assign(static_cast<std::size_t>(g_hi + 1), 0.0);
  g.tail_exact = false;

  const long long cross = std::min<long long>(g_hi, static_cast<long long>(std::ceil(lambda_prime)) + 2);
  for (long long j = 0; j < cross; ++j) {
    g.values[static_cast<std::size_t>(j + 1)] =
        (f.at(j) + static_cast<double>(j) * g.values[static_cast<std::size_t>(j)]) / lambda_prime;
  }
  if (cross < g_hi) {
    const long long seed = g_hi + detail::backward_reach(lambda_prime, g_hi);
    double next = 0.0;  // g(seed + 1)
    for (long long j = seed; j > cross; --j) {
      const double cur = (lambda_prime * next - f.at(j)) / static_cast<double>(j);
      if (j <= g_hi) g.values[static_cast<std::size_t>(j)] = cur;
      next = cur;
    }
  }
  return g;
}

enum class OperatorKind { kA0, kA1, kU };

// Pointwise application of A0, A1 = A0 + U, or the perturbation
//   (U g)(j) = lambda sum_l l mu_l {g(j+l) - g(j+1)}
// on [lo, hi].  hi = -1 shrinks to what g's valid window can serve; reads
// below g's window are the gauge zeros, reads above a non-analytic tail
// throw WindowError.
inline LatticeFunction apply_operator(OperatorKind kind, const LatticeFunction& g,
                                      const CompoundPoissonSpec& spec, long long lo = 0,
                                      long long hi = -1) {
  const long long reach = std::max<long long>(spec.max_jump(), 1);
  if (hi < 0) {
    hi = g.tail_exact ? g.hi() : g.hi() - reach;
    if (hi < lo) throw WindowError("apply_operator: g window too small");
  }
  const double lambda_m1 = spec.lambda * spec.m1();
  LatticeFunction out;
  out.offset = lo;
  out.values.reserve(static_cast<std::size_t>(hi - lo + 1));
  out.tail_exact = false;
  for (long long j = lo; j <= hi; ++j) {
    double v = 0.0;
    switch (kind) {
      case OperatorKind::kA0:
        v = lambda_m1 * g.at(j + 1) - static_cast<double>(j) * g.at(j);
        break;
      case OperatorKind::kA1:
        for (const auto& [l, mu] : spec.mu) {
          if (mu != 0.0) v += spec.lambda * static_cast<double>(l) * mu * g.at(j + l);
        }
        v -= static_cast<double>(j) * g.at(j);
        break;
      case OperatorKind::kU: {
        const double g1 = g.at(j + 1);
        for (const auto& [l, mu] : spec.mu) {
          if (mu != 0.0) v += spec.lambda * static_cast<double>(l) * mu * (g.at(j + l) - g1);
        }
        break;
      }
    }
    out.values.push_back(v);
  }
  return out;
}

// Certified contraction bound ||U A0^{-1} P0|| <= 2 m2'/m1, the same value
// for the sup norm, the Wasserstein seminorm and l1.  m2' = m2 for one-sided
// nonnegative jump distributions.
inline double gamma_upper(const CompoundPoissonSpec& spec, NormKind /*norm*/) {
  spec.validate();
  return 2.0 * spec.m2_abs() / spec.m1();
}

// Magic-factor constant A of the matching norm: ||A0^{-1} P0 f||_G <= A ||f||.
inline double magic_A(double lambda_prime, NormKind norm) {
  switch (norm) {
    case NormKind::kSup: return 2.0 / lambda_prime;
    case NormKind::kWassersteinSeminorm: return 1.15 / std::sqrt(lambda_prime);
    case NormKind::kL1: return 2.0 / lambda_prime;
  }
  return 0.0;
}

struct NeumannSolution {
  LatticeFunction g;       // B f on [0, g_hi]
  int terms = 0;           // Neumann terms summed
  double gamma = 0.0;      // certified contraction bound used for termination
  double tail_bound = 0.0; // norm bound on the dropped series tail, A ||f_k|| / (1 - gamma)
};

// g = B f with B = A0^{-1} P0 sum_{j>=0} (-1)^j (U A0^{-1} P0)^j, terminated
// when the certified geometric tail drops below tol.  Termination always uses
// gamma_upper, never an empirical estimate, so the error guarantee stands.
// Per-term solve windows shrink by one U-reach plus one backward-seed reach,
// sized upfront so no term ever reads beyond a valid window.
inline NeumannSolution neumann_b(const LatticeFunction& f, const CompoundPoissonSpec& spec,
                                 NormKind norm, double tol = 1e-10, int max_terms = 400,
                                 long long g_hi = -1) {
  spec.validate();
  const double gamma = gamma_upper(spec, norm);
  if (gamma >= 1.0) {
    throw PreconditionError("neumann_b: no contraction, gamma_upper = " + std::to_string(gamma));
  }
  const double lambda_prime = spec.lambda * spec.m1();
  const long long reach = std::max<long long>(spec.max_jump(), 1);
  if (g_hi < 0) {
    g_hi = std::max<long long>(f.hi(), 0) +
           static_cast<long long>(std::ceil(4.0 * lambda_prime)) + 80 + reach;
  }

  const double f_norm = norm_of(f, norm, 0);
  NeumannSolution sol;
  sol.gamma = gamma;
  sol.g.offset = 0;
  sol.g.values.assign(static_cast<std::size_t>(g_hi + 1), 0.0);
  sol.g.tail_exact = false;
  if (f_norm == 0.0) {
    sol.terms = 0;
    return sol;
  }

  const double stop_at = tol * (1.0 - gamma);
  int planned = 1;
  if (gamma > 0.0) {
    const double t = std::log(stop_at / f_norm) / std::log(gamma);
    planned = std::max(1, static_cast<int>(std::ceil(t)) + 1);
  }
  planned = std::min(planned, max_terms);

  const long long seed_reach = detail::backward_reach(lambda_prime, g_hi);
  const SignedLatticeMeasure pi0 = poisson_pmf(lambda_prime, 1e-16);
  const double A = magic_A(lambda_prime, norm);

  LatticeFunction f_cur = f;
  double sign = 1.0;
  for (int k = 0; k < planned; ++k) {
    const long long solve_hi =
        g_hi + static_cast<long long>(planned - 1 - k) * (reach + seed_reach);
    const LatticeFunction centered = p0_project(f_cur, pi0);
    const LatticeFunction gk = a0_solve(centered, lambda_prime, solve_hi);
    for (long long j = 0; j <= g_hi; ++j) {
      sol.g.values[static_cast<std::size_t>(j)] += sign * gk.at(j);
    }
    sol.terms = k + 1;
    const LatticeFunction f_next = apply_operator(OperatorKind::kU, gk, spec, 0, solve_hi - reach);
    const double next_norm = norm_of(f_next, norm, 0);
    sol.tail_bound = A * next_norm / (1.0 - gamma);
    if (next_norm <= stop_at) return sol;
    f_cur = f_next;
    sign = -sign;
  }
  throw DivergenceError("neumann_b: series did not reach tolerance within max_terms");
}

// Randomized lower bound on the operator norm in the contraction condition:
// max over seeded unit-norm probes of ||U A0^{-1} P0 f||.  Deterministic
// given the seed, and never exceeds gamma_upper beyond roundoff.
inline double gamma_empirical(const CompoundPoissonSpec& spec, NormKind norm, int probes,
                              std::uint64_t seed) {
  spec.validate();
  if (probes < 1) throw PreconditionError("gamma_empirical: probes >= 1");
  const double lambda_prime = spec.lambda * spec.m1();
  const long long reach = std::max<long long>(spec.max_jump(), 1);
  const long long probe_hi = 24;
  const long long solve_hi =
      probe_hi + static_cast<long long>(std::ceil(4.0 * lambda_prime)) + 80 + reach;
  const SignedLatticeMeasure pi0 = poisson_pmf(lambda_prime, 1e-16);

  double best = 0.0;
  for (int k = 0; k < probes; ++k) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(k) * 0x9e3779b97f4a7c15ULL);
    LatticeFunction f;
    f.offset = 0;
    f.values.resize(static_cast<std::size_t>(probe_hi + 1));
    for (double& v : f.values) v = uniform(rng, -1.0, 1.0);
    const double fn = norm_of(f, norm, 0);
    if (fn == 0.0) continue;
    for (double& v : f.values) v /= fn;
    const LatticeFunction g = a0_solve(p0_project(f, pi0), lambda_prime, solve_hi);
    const LatticeFunction u = apply_operator(OperatorKind::kU, g, spec, 0, solve_hi - reach);
    best = std::max(best, norm_of(u, norm, 0));
  }
  return best;
}

struct PerturbationReport {
  double gamma_upper = 0.0;
  double gamma_empirical = 0.0;
  bool contraction_ok = false;
  double A = 0.0;
  NormKind norm = NormKind::kSup;
};

inline PerturbationReport make_perturbation_report(const CompoundPoissonSpec& spec, NormKind norm,
                                                   int probes, std::uint64_t seed) {
  PerturbationReport r;
  r.norm = norm;
  r.gamma_upper = gamma_upper(spec, norm);
  r.gamma_empirical = probes > 0 ? gamma_empirical(spec, norm, probes, seed) : 0.0;
  r.contraction_ok = r.gamma_upper < 1.0;
  r.A = magic_A(spec.lambda * spec.m1(), norm);
  return r;
}

// Compound-Poisson-to-compound-Poisson perturbation certificate.  The base
// CP(lambda0, mu0) must satisfy j mu_j >= (j+1) mu_{j+1} and
// delta = mu_1 - 2 mu_2 > 0; the perturbation must preserve the mean.  Then
//   E = (1/2) sum_l l |lambda1 mu1_l - lambda0 mu0_l|,
//   rho_l = l (lambda1 mu1_l - lambda0 mu0_l)^+ / E,   sigma_l analogous,
//   theta = E d_W(rho, sigma),
//   gamma = c2(lambda0) theta / (delta lambda0),
// with c2(x) = (1/2)(delta x)^{-1} ... evaluated at x = lambda0 as
// c2 = (1/2)/(delta lambda0) + 2 log^+(2 delta lambda0).
struct CpToCpPerturbation {
  CompoundPoissonSpec spec0, spec1;
  double delta = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double E = 0.0;
  double theta = 0.0;
  double gamma = 0.0;
  SignedLatticeMeasure rho, sigma;  // probability measures; empty when E = 0
  bool small_delta_lambda = false;  // delta*lambda0 <= 1/4, where c1 goes negative
};

inline CpToCpPerturbation make_cp_to_cp(const CompoundPoissonSpec& s0,
                                        const CompoundPoissonSpec& s1) {
  s0.validate();
  s1.validate();
  for (const auto* s : {&s0, &s1}) {
    for (const auto& [l, v] : s->mu) {
      if (l < 1 || v < 0.0) {
        throw PreconditionError("make_cp_to_cp: jump distributions must be nonnegative on l >= 1");
      }
    }
  }
  long long top = 1;
  for (const auto& [l, v] : s0.mu) {
    if (v != 0.0) top = std::max(top, l);
  }
  auto mu0 = [&](long long l) {
    auto it = s0.mu.find(l);
    return it == s0.mu.end() ? 0.0 : it->second;
  };
  for (long long j = 1; j <= top; ++j) {
    if (static_cast<double>(j) * mu0(j) < static_cast<double>(j + 1) * mu0(j + 1) - 1e-15) {
      throw PreconditionError("make_cp_to_cp: base spec violates j mu_j >= (j+1) mu_{j+1}");
    }
  }
  CpToCpPerturbation p;
  p.spec0 = s0;
  p.spec1 = s1;
  p.delta = mu0(1) - 2.0 * mu0(2);
  if (!(p.delta > 0.0)) throw PreconditionError("make_cp_to_cp: requires delta = mu_1 - 2 mu_2 > 0");
  const double mean0 = s0.lambda * s0.m1();
  const double mean1 = s1.lambda * s1.m1();
  if (std::abs(mean0 - mean1) > 1e-10 * std::max({1.0, std::abs(mean0), std::abs(mean1)})) {
    throw PreconditionError("make_cp_to_cp: perturbation must preserve the mean");
  }
  const double dl = p.delta * s0.lambda;
  p.c1 = 4.0 - 2.0 / std::sqrt(dl);
  p.c2 = 0.5 / dl + 2.0 * std::max(std::log(2.0 * dl), 0.0);
  p.small_delta_lambda = dl <= 0.25;

  long long max_l = 1;
  for (const auto& [l, v] : s1.mu) {
    if (v != 0.0) max_l = std::max(max_l, l);
  }
  max_l = std::max(max_l, top);
  std::vector<double> diff(static_cast<std::size_t>(max_l) + 1, 0.0);
  for (const auto& [l, v] : s1.mu) diff[static_cast<std::size_t>(l)] += s1.lambda * v;
  for (const auto& [l, v] : s0.mu) diff[static_cast<std::size_t>(l)] -= s0.lambda * v;
  for (long long l = 1; l <= max_l; ++l) {
    p.E += 0.5 * static_cast<double>(l) * std::abs(diff[static_cast<std::size_t>(l)]);
  }
  if (p.E == 0.0) {
    p.theta = 0.0;
    p.gamma = 0.0;  // ties short-circuit; rho and sigma stay undefined
    return p;
  }
  p.rho.offset = 1;
  p.sigma.offset = 1;
  p.rho.weights.assign(static_cast<std::size_t>(max_l), 0.0);
  p.sigma.weights.assign(static_cast<std::size_t>(max_l), 0.0);
  for (long long l = 1; l <= max_l; ++l) {
    const double d = static_cast<double>(l) * diff[static_cast<std::size_t>(l)];
    if (d > 0.0) {
      p.rho.weights[static_cast<std::size_t>(l - 1)] = d / p.E;
    } else {
      p.sigma.weights[static_cast<std::size_t>(l - 1)] = -d / p.E;
    }
  }
  p.rho.trim();
  p.sigma.trim();
  p.theta = p.E * distance(p.rho, p.sigma, MetricKind::kWasserstein);
  p.gamma = p.c2 * p.theta / dl;
  return p;
}

inline double gamma_cp_to_cp(const CompoundPoissonSpec& s0, const CompoundPoissonSpec& s1) {
  return make_cp_to_cp(s0, s1).gamma;
}

// One magic-factor comparison: an achieved solution norm against its bound.
struct FactorCheck {
  std::string name;
  double achieved = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct SteinFactorReport {
  std::vector<FactorCheck> checks;
  bool all_pass = true;
};

namespace detail {

inline void push_check(SteinFactorReport& r, const std::string& name, double achieved,
                       double bound) {
  const bool ok = achieved <= bound * (1.0 + 1e-9) + 1e-12;
  r.checks.push_back({name, achieved, bound, ok});
  r.all_pass = r.all_pass && ok;
}

}  // namespace detail

// Check the solution g = A0^{-1} P0 f of the Poisson Stein equation against
// the published factors for the requested norm:
//   sup:  ||Dg||_inf  <= 2/lambda' ||f||_inf
//   W:    ||g||_inf <= ||f||_W,  ||Dg||_inf <= 1.15 lambda'^{-1/2} ||f||_W,
//         ||D2g||_inf <= 2/lambda' ||f||_W
//   l1:   ||g||_inf <= ||f||_1/lambda',  ||Dg||_1 <= 2/lambda' ||f||_1
// Solution norms run over j >= 1; g(0) is gauge, never read by the operators.
inline SteinFactorReport stein_factor_check(double lambda_prime, const LatticeFunction& f,
                                            NormKind norm) {
  const long long g_hi = std::max<long long>(f.hi(), 0) +
                         static_cast<long long>(std::ceil(4.0 * lambda_prime)) + 200;
  const SignedLatticeMeasure pi0 = poisson_pmf(lambda_prime, 1e-16);
  const LatticeFunction g = a0_solve(p0_project(f, pi0), lambda_prime, g_hi);

  double g_sup = 0.0, dg_sup = 0.0, d2g_sup = 0.0, dg_l1 = 0.0;
  for (long long j = 1; j + 2 <= g_hi; ++j) {
    g_sup = std::max(g_sup, std::abs(g.at(j)));
    const double d1 = g.at(j + 1) - g.at(j);
    dg_sup = std::max(dg_sup, std::abs(d1));
    dg_l1 += std::abs(d1);
    d2g_sup = std::max(d2g_sup, std::abs(g.at(j + 2) - 2.0 * g.at(j + 1) + g.at(j)));
  }

  SteinFactorReport report;
  switch (norm) {
    case NormKind::kSup: {
      const double fn = norm_of(f, NormKind::kSup, 0);
      detail::push_check(report, "sup:delta_g_sup", dg_sup, 2.0 / lambda_prime * fn);
      break;
    }
    case NormKind::kWassersteinSeminorm: {
      const double fn = norm_of(f, NormKind::kWassersteinSeminorm, 0);
      detail::push_check(report, "w:g_sup", g_sup, fn);
      detail::push_check(report, "w:delta_g_sup", dg_sup, 1.15 / std::sqrt(lambda_prime) * fn);
      detail::push_check(report, "w:delta2_g_sup", d2g_sup, 2.0 / lambda_prime * fn);
      break;
    }
    case NormKind::kL1: {
      const double fn = norm_of(f, NormKind::kL1, 0);
      detail::push_check(report, "l1:g_sup", g_sup, fn / lambda_prime);
      detail::push_check(report, "l1:delta_g_l1", dg_l1, 2.0 / lambda_prime * fn);
      break;
    }
  }
  return report;
}

// d(pi, pi1) <= (1-gamma)^{-1} {A eps + eps'}, with
// eps' = min{2(|pi1|(X0^c) + pi(X0^c)) F, kappa(pi1,X0^c) + kappa(pi,X0^c)}.
inline double bound_very_useful(double A, double gamma, double eps, double pi1_outside,
                                double pi_outside, double kappa1, double kappa, double F) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw PreconditionError("bound_very_useful: requires 0 <= gamma < 1");
  }
  const double eps_prime = std::min(2.0 * (pi1_outside + pi_outside) * F, kappa1 + kappa);
  return (A * eps + eps_prime) / (1.0 - gamma);
}

// d_H(pi, pi1) <= H {eps1 + gamma_H A eps2/(1-gamma) + eps(pi,pi1)/(1-gamma)}.
inline double bound_k_distance(double H, double eps1, double eps2, double A, double gamma,
                               double gammaH, double eps_pi) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw PreconditionError("bound_k_distance: requires 0 <= gamma < 1");
  }
  if (!(H > 0.0)) throw PreconditionError("bound_k_distance: requires H > 0");
  return H * (eps1 + gammaH * A * eps2 / (1.0 - gamma) + eps_pi / (1.0 - gamma));
}

// |c(f)| <= 2 |pi1|(X0^c) (1-gamma)^{-1} ||f||_inf.
inline double c_bound_sup(double pi1_outside, double gamma, double f_sup) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw PreconditionError("c_bound_sup: requires 0 <= gamma < 1");
  }
  return 2.0 * pi1_outside * f_sup / (1.0 - gamma);
}

// |c(f)| <= kappa(pi1, X0^c) (1-gamma)^{-1} ||f||.
inline double c_bound_kappa(double kappa1, double gamma, double f_norm) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw PreconditionError("c_bound_kappa: requires 0 <= gamma < 1");
  }
  return kappa1 * f_norm / (1.0 - gamma);
}

}  // namespace steinpert
