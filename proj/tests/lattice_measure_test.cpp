// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "steinpert/lattice_measure.hpp"

using namespace steinpert;

namespace {

// Independent closed-form Poisson pmf for oracle comparisons.
double poisson_closed_form(double lambda, long long k) {
  return std::exp(static_cast<double>(k) * std::log(lambda) - lambda -
                  std::lgamma(static_cast<double>(k) + 1.0));
}

// Brute-force exponential: e^{-Lambda} sum_k nu^{*k} / k! with nu{l} = lambda_l.
SignedLatticeMeasure exp_rates_series_oracle(const JumpRateSpec& spec, int terms) {
  double big_lambda = 0.0;
  SignedLatticeMeasure nu;
  {
    long long lo = 0, hi = 0;
    for (const auto& [l, v] : spec.rates) {
      (void)v;
      lo = std::min(lo, l);
      hi = std::max(hi, l);
    }
    nu.offset = lo;
    nu.weights.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
    for (const auto& [l, v] : spec.rates) {
      nu.weights[static_cast<std::size_t>(l - lo)] = v;
      big_lambda += v;
    }
  }
  SignedLatticeMeasure power = delta_measure(0);
  SignedLatticeMeasure sum = delta_measure(0);
  double factorial = 1.0;
  for (int k = 1; k <= terms; ++k) {
    power = convolve(power, nu);
    factorial *= k;
    for (long long j = power.lo(); j <= power.hi(); ++j) {
      const double add = power.at(j) / factorial;
      if (add == 0.0) continue;
      if (j < sum.lo() || j > sum.hi()) {
        // grow sum's window
        SignedLatticeMeasure bigger;
        bigger.offset = std::min(sum.lo(), power.lo());
        const long long hi = std::max(sum.hi(), power.hi());
        bigger.weights.assign(static_cast<std::size_t>(hi - bigger.offset + 1), 0.0);
        for (long long i = sum.lo(); i <= sum.hi(); ++i) {
          bigger.weights[static_cast<std::size_t>(i - bigger.offset)] = sum.at(i);
        }
        sum = bigger;
      }
      sum.weights[static_cast<std::size_t>(j - sum.offset)] += add;
    }
  }
  for (double& w : sum.weights) w *= std::exp(-big_lambda);
  return sum;
}

JumpRateSpec make_rates(std::initializer_list<std::pair<long long, double>> init) {
  JumpRateSpec r;
  for (const auto& [l, v] : init) r.rates[l] = v;
  return r;
}

}  // namespace

TEST_CASE("convolve identities") {
  const SignedLatticeMeasure m{2, {0.5, 0.25, 0.25}};
  const SignedLatticeMeasure id = convolve(delta_measure(0), m);
  REQUIRE(id.offset == m.offset);
  for (long long j = m.lo(); j <= m.hi(); ++j) REQUIRE(id.at(j) == Catch::Approx(m.at(j)));

  const SignedLatticeMeasure shifted = convolve(delta_measure(1), delta_measure(2));
  REQUIRE(shifted.lo() == 3);
  REQUIRE(shifted.at(3) == 1.0);

  REQUIRE(convolve(SignedLatticeMeasure{}, m).empty());
}

TEST_CASE("Poisson convolution semigroup") {
  const SignedLatticeMeasure half = poisson_pmf(0.5);
  const SignedLatticeMeasure sum = convolve(half, half);
  for (long long k = 0; k <= 40; ++k) {
    REQUIRE(sum.at(k) == Catch::Approx(poisson_closed_form(1.0, k)).margin(1e-12));
  }
}

TEST_CASE("poisson_pmf closed-form anchors") {
  REQUIRE(poisson_pmf(1.0).at(0) == Catch::Approx(std::exp(-1.0)).epsilon(1e-13));
  const SignedLatticeMeasure five = poisson_pmf(5.0);
  REQUIRE(five.at(4) == Catch::Approx(five.at(5)).margin(1e-12));
  // max_j pi0(j) <= (2 e lambda)^{-1/2}
  const SignedLatticeMeasure twenty = poisson_pmf(20.0);
  REQUIRE(max_abs_weight(twenty) <= 1.0 / std::sqrt(2.0 * std::exp(1.0) * 20.0));
  REQUIRE(total_mass(twenty) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("exp_rates basics") {
  REQUIRE(exp_rates(JumpRateSpec{}).at(0) == 1.0);

  const SignedLatticeMeasure po1 = exp_rates(make_rates({{1, 1.0}}));
  for (long long k = 0; k <= 20; ++k) {
    REQUIRE(po1.at(k) == Catch::Approx(poisson_closed_form(1.0, k)).margin(1e-14));
  }

  // Signed rates: generating function at z = 0.5 equals the exponent value.
  const SignedLatticeMeasure signed_m = exp_rates(make_rates({{1, -0.2}, {2, 0.3}}));
  const double expected = std::exp(-0.2 * (0.5 - 1.0) + 0.3 * (0.25 - 1.0));
  REQUIRE(gf_eval(signed_m, 0.5) == Catch::Approx(expected).epsilon(1e-11));
  REQUIRE(expected == Catch::Approx(std::exp(-0.125)));

  const SignedLatticeMeasure gf_case = exp_rates(make_rates({{1, 0.4}, {3, 0.1}}));
  REQUIRE(gf_eval(gf_case, 0.6) ==
          Catch::Approx(std::exp(0.4 * (0.6 - 1.0) + 0.1 * (0.216 - 1.0))).epsilon(1e-11));
}

TEST_CASE("exp_rates two-sided mirror") {
  const SignedLatticeMeasure neg = exp_rates(make_rates({{-1, 0.3}}));
  REQUIRE(neg.hi() == 0);
  REQUIRE(gf_eval(neg, 0.5) == Catch::Approx(std::exp(0.3 * (2.0 - 1.0))).epsilon(1e-11));

  const SignedLatticeMeasure both = exp_rates(make_rates({{-1, 0.2}, {2, 0.5}}));
  const double z = 0.7;
  const double expect = std::exp(0.2 * (1.0 / z - 1.0) + 0.5 * (z * z - 1.0));
  REQUIRE(gf_eval(both, z) == Catch::Approx(expect).epsilon(1e-11));
  REQUIRE(total_mass(both) == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("exp_rates mass and homomorphism properties") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    JumpRateSpec r1, r2;
    const int jumps = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < jumps; ++i) {
      const long long l = 1 + static_cast<long long>(rng() % 4);
      r1.rates[l] += uniform(rng, -0.3, 0.8);
      r2.rates[(rng() % 2) ? l : -l] += uniform(rng, -0.2, 0.6);
    }
    const SignedLatticeMeasure m1 = exp_rates(r1);
    const SignedLatticeMeasure m2 = exp_rates(r2);
    REQUIRE(total_mass(m1) == Catch::Approx(1.0).margin(1e-10));
    REQUIRE(total_mass(m2) == Catch::Approx(1.0).margin(1e-10));

    for (double z : {0.25, 0.5, 0.9}) {
      REQUIRE(gf_eval(convolve(m1, m2), z) ==
              Catch::Approx(gf_eval(m1, z) * gf_eval(m2, z)).margin(1e-10));
    }

    // exp of a sum is the convolution of the exps.
    const SignedLatticeMeasure lhs = exp_rates(r1 + r2);
    const SignedLatticeMeasure rhs = convolve(m1, m2);
    for (long long j = std::min(lhs.lo(), rhs.lo()); j <= std::max(lhs.hi(), rhs.hi()); ++j) {
      REQUIRE(lhs.at(j) == Catch::Approx(rhs.at(j)).margin(1e-9));
    }
  }
}

TEST_CASE("exp_rates recursion matches truncated series") {
  const JumpRateSpec spec = make_rates({{1, 0.7}, {2, 0.2}, {3, 0.05}});
  const SignedLatticeMeasure fast = exp_rates(spec);
  const SignedLatticeMeasure slow = exp_rates_series_oracle(spec, 40);
  for (long long j = 0; j <= 25; ++j) {
    REQUIRE(fast.at(j) == Catch::Approx(slow.at(j)).margin(1e-9));
  }
}

TEST_CASE("bp_rates single factor") {
  // all p_i = 0: nothing beyond the Poisson part (which is also zero here)
  REQUIRE(bp_rates({0.0, 0.0}, std::nullopt, 0, false).rates.empty());

  const JumpRateSpec bp = bp_rates({0.2}, std::nullopt, 0, false);
  const double r = 0.25;  // p/q
  for (int l = 2; l <= 6; ++l) {
    const double sign = (l % 2 == 1) ? 1.0 : -1.0;
    REQUIRE(bp.rates.at(l) == Catch::Approx(sign * std::pow(r, l) / l).epsilon(1e-12));
  }
  // generating function against (1 + p(z-1)) e^{-p(z-1)}
  const SignedLatticeMeasure bp_measure = exp_rates(bp);
  for (double z : {0.3, 0.7}) {
    const double expect = (1.0 + 0.2 * (z - 1.0)) * std::exp(-0.2 * (z - 1.0));
    REQUIRE(gf_eval(bp_measure, z) == Catch::Approx(expect).margin(1e-10));
  }

  // with the Poisson factor included the product telescopes to 1 + p(z-1)
  const SignedLatticeMeasure full = exp_rates(bp_rates({0.2}, std::nullopt, 0, true));
  for (double z : {0.3, 0.7}) {
    REQUIRE(gf_eval(full, z) == Catch::Approx(1.0 + 0.2 * (z - 1.0)).margin(1e-10));
  }

  REQUIRE_THROWS_AS(bp_rates({0.4}), PreconditionError);
}

TEST_CASE("bp_rates records tail is mean-zero") {
  // sum_l l lambda_{2l} = 0: the tail rates carry no mean.
  std::vector<double> p;
  for (long long i = 4; i <= 50; ++i) p.push_back(1.0 / static_cast<double>(i));
  const JumpRateSpec with_tail = bp_rates(p, RecordsTail{50}, 0, false);
  const JumpRateSpec finite = bp_rates(p, std::nullopt, 0, false);
  double tail_mean = with_tail.rate_mass() - finite.rate_mass();
  REQUIRE(std::abs(tail_mean) <= 1e-10);

  // and the full spec keeps sum_l l lambda_l = lambda once Po(lambda) is folded in
  const JumpRateSpec full = bp_rates(p, RecordsTail{50}, 0, true);
  double lambda = 0.0;
  for (double pi : p) lambda += pi;
  REQUIRE(full.rate_mass() == Catch::Approx(lambda).margin(1e-10));
}

TEST_CASE("bp_rates reproduces the Poisson-binomial pmf") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 10);
    std::vector<double> p;
    for (int i = 0; i < n; ++i) p.push_back(uniform(rng, 0.01, 0.32));
    double lambda = 0.0;
    for (double pi : p) lambda += pi;

    const JumpRateSpec correction = bp_rates(p, std::nullopt, 0, false);
    const SignedLatticeMeasure reproduced =
        convolve(poisson_pmf(lambda), exp_rates(correction));

    // independent exact pmf by direct DP here, as its own oracle
    std::vector<double> w(p.size() + 1, 0.0);
    w[0] = 1.0;
    std::size_t count = 0;
    for (double pi : p) {
      ++count;
      for (std::size_t k = count; k >= 1; --k) w[k] = w[k] * (1.0 - pi) + w[k - 1] * pi;
      w[0] *= (1.0 - pi);
    }
    for (std::size_t k = 0; k < w.size(); ++k) {
      REQUIRE(reproduced.at(static_cast<long long>(k)) ==
              Catch::Approx(w[k]).margin(1e-9 + correction.truncation_error));
    }
  }
}

TEST_CASE("gf_eval anchors") {
  REQUIRE(gf_eval(delta_measure(0), 0.37) == 1.0);
  REQUIRE(gf_eval(poisson_pmf(2.0), 0.5) == Catch::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("tail_power_sum brackets the truth") {
  // sum_{m>=2} m^{-2} = pi^2/6 - 1
  const TailPowerSum s = tail_power_sum(2, 2);
  const double truth = std::numbers::pi * std::numbers::pi / 6.0 - 1.0;
  REQUIRE(std::abs(s.value - truth) <= s.half_width + 1e-13);
  REQUIRE(s.half_width < 1e-3);

  const TailPowerSum deep = tail_power_sum(99, 2);
  double head = 0.0;
  for (long long m = 1; m <= 98; ++m) head += 1.0 / (static_cast<double>(m) * static_cast<double>(m));
  const double deep_truth = std::numbers::pi * std::numbers::pi / 6.0 - head;
  REQUIRE(std::abs(deep.value - deep_truth) <= deep.half_width + 1e-13);
}

TEST_CASE("trim removes only edge noise") {
  SignedLatticeMeasure m{-1, {1e-20, 0.3, 0.0, 0.7, 1e-16}};
  m.trim();
  REQUIRE(m.lo() == 0);
  REQUIRE(m.hi() == 2);
  REQUIRE(m.at(1) == 0.0);
}
