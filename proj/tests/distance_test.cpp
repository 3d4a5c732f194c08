// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "steinpert/distance.hpp"

using namespace steinpert;

namespace {

SignedLatticeMeasure random_probability(std::mt19937_64& rng, long long lo, int width) {
  SignedLatticeMeasure m;
  m.offset = lo;
  m.weights.resize(static_cast<std::size_t>(width));
  double mass = 0.0;
  for (double& w : m.weights) {
    w = uniform(rng, 0.0, 1.0);
    mass += w;
  }
  for (double& w : m.weights) w /= mass;
  return m;
}

// sup over |f(j+1)-f(j)| <= 1 of |P(f) - Q(f)|, by enumerating the slope
// signs on every unit step of the joint support (the sup is attained at a
// vertex, slopes in {-1, +1}).
double wasserstein_vertex_oracle(const SignedLatticeMeasure& P, const SignedLatticeMeasure& Q) {
  const long long lo = std::min(P.lo(), Q.lo());
  const long long hi = std::max(P.hi(), Q.hi());
  const int steps = static_cast<int>(hi - lo);
  REQUIRE(steps <= 12);
  double best = 0.0;
  for (unsigned mask = 0; mask < (1u << steps); ++mask) {
    double f = 0.0, value = (P.at(lo) - Q.at(lo)) * f;
    for (int s = 0; s < steps; ++s) {
      f += (mask >> s) & 1u ? 1.0 : -1.0;
      value += (P.at(lo + s + 1) - Q.at(lo + s + 1)) * f;
    }
    best = std::max(best, std::abs(value));
  }
  return best;
}

}  // namespace

TEST_CASE("two-point metric values") {
  const SignedLatticeMeasure d0 = delta_measure(0), d1 = delta_measure(1), d2 = delta_measure(2);
  REQUIRE(distance(d0, d0, MetricKind::kTotalVariation) == 0.0);
  REQUIRE(distance(d0, d0, MetricKind::kWasserstein) == 0.0);
  REQUIRE(distance(d0, d1, MetricKind::kTotalVariation) == 2.0);
  REQUIRE(distance(d0, d1, MetricKind::kWasserstein) == 1.0);
  REQUIRE(distance(d0, d1, MetricKind::kPoint) == 1.0);
  REQUIRE(distance(d0, d1, MetricKind::kKolmogorov) == 1.0);
  REQUIRE(distance(d0, d2, MetricKind::kWasserstein) == 2.0);
}

TEST_CASE("wasserstein requires equal masses") {
  const SignedLatticeMeasure half{0, {0.5}};
  REQUIRE_THROWS_AS(distance(half, delta_measure(0), MetricKind::kWasserstein),
                    PreconditionError);
}

TEST_CASE("metric axioms on random probes") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const SignedLatticeMeasure A = random_probability(rng, -2, 6);
    const SignedLatticeMeasure B = random_probability(rng, -1, 5);
    const SignedLatticeMeasure C = random_probability(rng, 0, 6);
    for (MetricKind kind : {MetricKind::kTotalVariation, MetricKind::kWasserstein,
                            MetricKind::kPoint, MetricKind::kKolmogorov}) {
      const double ab = distance(A, B, kind);
      const double ba = distance(B, A, kind);
      const double ac = distance(A, C, kind);
      const double cb = distance(C, B, kind);
      REQUIRE(ab >= 0.0);
      REQUIRE(ab == Catch::Approx(ba).margin(1e-12));
      REQUIRE(ab <= ac + cb + 1e-10);
    }
    REQUIRE(distance(A, B, MetricKind::kKolmogorov) <=
            0.5 * distance(A, B, MetricKind::kTotalVariation) + 1e-10);
    REQUIRE(distance(A, B, MetricKind::kPoint) <=
            distance(A, B, MetricKind::kTotalVariation) + 1e-12);
  }
}

TEST_CASE("wasserstein dual matches vertex enumeration") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const SignedLatticeMeasure P = random_probability(rng, 0, 6);
    const SignedLatticeMeasure Q = random_probability(rng, 0, 6);
    REQUIRE(distance(P, Q, MetricKind::kWasserstein) ==
            Catch::Approx(wasserstein_vertex_oracle(P, Q)).margin(1e-9));
  }
}

TEST_CASE("kappa bounds per metric") {
  SignedLatticeMeasure onZ{0, {0.4, 0.6}};
  REQUIRE(kappa_bound(onZ, MetricKind::kTotalVariation, 1.0) == 0.0);
  REQUIRE(kappa_bound(onZ, MetricKind::kWasserstein, 1.0) == 0.0);
  REQUIRE(kappa_bound(onZ, MetricKind::kPoint, 1.0) == 0.0);

  SignedLatticeMeasure leak1{-1, {0.1, 0.5, 0.4}};
  REQUIRE(kappa_bound(leak1, MetricKind::kTotalVariation, 1.0) == Catch::Approx(0.2));

  SignedLatticeMeasure leak2{-2, {0.05, 0.0, 0.6, 0.35}};
  REQUIRE(kappa_bound(leak2, MetricKind::kWasserstein, 4.0) == Catch::Approx(0.3));

  REQUIRE(kappa_bound(leak2, MetricKind::kPoint, 4.0) ==
          Catch::Approx(0.05 / std::sqrt(8.0 * std::exp(1.0)) + 0.05));

  REQUIRE_THROWS_AS(kappa_bound(leak1, MetricKind::kKolmogorov, 1.0), PreconditionError);
}
