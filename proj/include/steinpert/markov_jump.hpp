// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "steinpert/common.hpp"
#include "steinpert/lattice_measure.hpp"

namespace steinpert {

// Pure jump Markov process on Z_+ with rates
//   j -> j+1 at N,   j -> j-1 at j,   j -> j + floor(z sqrt(N)) at alpha,
// observed as W_N = (X_N - N)/sqrt(N) on the lattice with spacing
// eta_N = 1/sqrt(N).
struct MarkovJumpModel {
  long long N = 0;
  double z = 0.0;
  double alpha = 0.0;

  double eta() const { return 1.0 / std::sqrt(static_cast<double>(N)); }
  long long jump() const {
    return static_cast<long long>(std::floor(z * std::sqrt(static_cast<double>(N))));
  }
  void validate() const {
    if (N < 1) throw PreconditionError("MarkovJumpModel: N >= 1");
    if (z < 0.0 || alpha < 0.0) throw PreconditionError("MarkovJumpModel: z, alpha >= 0");
  }
};

struct MarkovEquilibrium {
  SignedLatticeMeasure centered;   // stationary law of X_N - N (spacing eta_N in W units)
  double eta = 0.0;
  double mean_w = 0.0;             // E W_N
  double second_w = 0.0;           // E W_N^2
  double balance_residual = 0.0;   // max-norm residual of the balance equations
  long long truncation = 0;
};

// Stationary distribution of X_N on {0..truncation}, solved from the balance
// equations.  Only the -1 jumps cross a cut {0..j}|{j+1..} downward, so the
// cut equations give the forward substitution
//   (j+1) pi(j+1) = N pi(j) + alpha sum_{i=j-J+1}^{j} pi(i),
// which is the sparse linear system solved in elimination order, with all
// coefficients positive.  truncation <= 0 picks a window automatically,
// doubling until the mass criterion (>= 1 - 1e-10 captured) passes; the full
// per-state residual is evaluated post hoc on the renormalized solution.
inline MarkovEquilibrium markov_jump_equilibrium(const MarkovJumpModel& model,
                                                 long long truncation = -1) {
  model.validate();
  const double N = static_cast<double>(model.N);
  const long long J = model.jump();
  const double alpha = J > 0 ? model.alpha : 0.0;  // size-0 jumps are self-loops

  long long T = truncation;
  if (T <= 0) {
    T = model.N + static_cast<long long>(std::ceil(8.0 * std::sqrt(N))) + 3 * J + 20;
  }
  const long long pad = J + 2;

  std::vector<double> pi;
  for (;;) {
    const std::size_t len = static_cast<std::size_t>(T + pad + 1);
    if (len > kMaxWindow) throw DivergenceError("markov_jump_equilibrium: window cap exceeded");
    pi.assign(len, 0.0);
    pi[0] = 1.0;
    double rolling = (J >= 1) ? pi[0] : 0.0;  // sum of the J entries ending at j
    for (long long j = 0; j + 1 <= T + pad; ++j) {
      pi[static_cast<std::size_t>(j + 1)] =
          (N * pi[static_cast<std::size_t>(j)] + alpha * rolling) / static_cast<double>(j + 1);
      if (J >= 1) {
        rolling += pi[static_cast<std::size_t>(j + 1)];
        const long long drop = j + 1 - J;  // index leaving the window ending at j+1
        if (drop >= 0) rolling -= pi[static_cast<std::size_t>(drop)];
      }
    }
    double mass = 0.0, tail = 0.0;
    for (long long j = 0; j <= T + pad; ++j) mass += pi[static_cast<std::size_t>(j)];
    for (long long j = T + 1; j <= T + pad; ++j) tail += pi[static_cast<std::size_t>(j)];
    // Rates above T are dominated by a subcritical branching tail; the pad
    // mass is a faithful proxy for everything beyond.
    if (tail <= 1e-11 * mass) break;
    if (truncation > 0) {
      throw PreconditionError("markov_jump_equilibrium: truncation window insufficient");
    }
    T *= 2;
  }

  double mass = 0.0;
  for (double w : pi) mass += w;
  for (double& w : pi) w /= mass;

  // Full balance residual at every interior state (self-loops cancel, so
  // size-0 jumps contribute to neither side).
  double residual = 0.0;
  for (long long j = 0; j <= T; ++j) {
    double flow = -(N + static_cast<double>(j) + alpha) * pi[static_cast<std::size_t>(j)];
    if (j >= 1) flow += N * pi[static_cast<std::size_t>(j - 1)];
    flow += static_cast<double>(j + 1) * pi[static_cast<std::size_t>(j + 1)];
    if (alpha > 0.0 && j >= J) flow += alpha * pi[static_cast<std::size_t>(j - J)];
    residual = std::max(residual, std::abs(flow));
  }

  MarkovEquilibrium out;
  out.eta = model.eta();
  out.truncation = T;
  out.balance_residual = residual;
  out.centered.offset = -model.N;
  out.centered.weights.assign(pi.begin(), pi.begin() + static_cast<std::ptrdiff_t>(T + 1));
  out.centered.trim();
  for (long long k = out.centered.lo(); k <= out.centered.hi(); ++k) {
    const double wk = static_cast<double>(k) * out.eta;
    out.mean_w += out.centered.at(k) * wk;
    out.second_w += out.centered.at(k) * wk * wk;
  }
  return out;
}

// |E W_N| <= alpha z.
inline double mean_w_bound(const MarkovJumpModel& model) { return model.alpha * model.z; }

// E W_N^2 <= 1 + (1/2) alpha z eta_N + alpha^2 z^2 + (1/2) alpha z^2.
inline double second_w_bound(const MarkovJumpModel& model) {
  const double az = model.alpha * model.z;
  return 1.0 + 0.5 * az * model.eta() + az * az + 0.5 * az * model.z;
}

// d_TV(pi, pi_1) <= 2 alpha int (zeta - z)^2 mu(d zeta) / (1 - gamma) with
// gamma = sqrt(2 pi) z alpha, for the random-jump-size diffusion equilibrium.
inline double bound_example_4_1(double alpha, double z, double second_moment_about_z) {
  const double gamma = std::sqrt(2.0 * std::numbers::pi) * z * alpha;
  if (!(gamma < 1.0)) throw PreconditionError("bound_example_4_1: gamma >= 1");
  if (second_moment_about_z < 0.0) {
    throw PreconditionError("bound_example_4_1: second moment must be nonnegative");
  }
  return 2.0 * alpha * second_moment_about_z / (1.0 - gamma);
}

// Assembled d^(1) error coefficient for approximating the equilibrium of W_N
// by the jump-diffusion law: the ODE-solution derivative bounds give, for
// ||f||^(1) <= 1,
//   |pi(A_1 g_f)| <= N^{-1/2} { (1/3)||g'''|| + (1/2) E|W_N| ||g''|| + alpha ||g'|| }
//                <= N^{-1/2} { 2/3 + 2 E|W_N| + min(sqrt(2 pi), 2) alpha },
// so d^(1) <= C N^{-1/2} / (1 - gamma) with gamma = (4 + sqrt(2 pi)) z alpha.
// This composition is an assembly of the stated ingredients, using the
// moment bound for E|W_N|.
struct JumpDiffusionD1Bound {
  double c_coeff = 0.0;
  double gamma = 0.0;
  double bound = 0.0;
  double e_abs_w_bound = 0.0;
};

inline JumpDiffusionD1Bound jump_diffusion_d1_bound(const MarkovJumpModel& model) {
  JumpDiffusionD1Bound b;
  b.gamma = (4.0 + std::sqrt(2.0 * std::numbers::pi)) * model.z * model.alpha;
  b.e_abs_w_bound = std::sqrt(second_w_bound(model));
  b.c_coeff = 2.0 / 3.0 + 2.0 * b.e_abs_w_bound +
              std::min(std::sqrt(2.0 * std::numbers::pi), 2.0) * model.alpha;
  if (b.gamma < 1.0) {
    b.bound = b.c_coeff / (std::sqrt(static_cast<double>(model.N)) * (1.0 - b.gamma));
  } else {
    b.bound = std::numeric_limits<double>::infinity();
  }
  return b;
}

}  // namespace steinpert
