// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <vector>

#include "steinpert/common.hpp"
#include "steinpert/distance.hpp"
#include "steinpert/lattice_measure.hpp"

namespace steinpert {

// W = sum_i I_i for Bernoulli indicators, in one of three flavours:
//  - independent: marginals only;
//  - dependent: an explicit joint table over {0,1}^n (n <= 20), probs indexed
//    so that bit (n-i) of the index is the value of I_i (lexicographic order);
//  - records: p_i = 1/i for s <= i <= n, with the analytic i > n tail.
struct BernoulliSumModel {
  enum class Kind { kIndependent, kDependent, kRecords };

  Kind kind = Kind::kIndependent;
  std::vector<double> p;      // marginals; records holds p_i = 1/i, i in [s, n]
  std::vector<double> joint;  // dependent only, size 2^n
  long long records_s = 0;
  long long records_n = 0;

  int n() const { return static_cast<int>(p.size()); }
  double lambda() const {
    double s = 0.0;
    for (double pi : p) s += pi;
    return s;
  }

  static BernoulliSumModel independent(std::vector<double> probs) {
    for (double pi : probs) {
      if (!(pi >= 0.0 && pi < 1.0 / 3.0)) {
        throw PreconditionError("BernoulliSumModel: requires 0 <= p_i < 1/3");
      }
    }
    BernoulliSumModel m;
    m.kind = Kind::kIndependent;
    m.p = std::move(probs);
    return m;
  }

  static BernoulliSumModel dependent(int n, std::vector<double> table) {
    if (n < 1 || n > 20) throw PreconditionError("BernoulliSumModel: dependent n must be in [1, 20]");
    if (table.size() != (std::size_t{1} << n)) {
      throw PreconditionError("BernoulliSumModel: table must have 2^n entries");
    }
    double mass = 0.0;
    for (double w : table) {
      if (w < 0.0) throw PreconditionError("BernoulliSumModel: negative table entry");
      mass += w;
    }
    if (std::abs(mass - 1.0) > 1e-12) {
      throw PreconditionError("BernoulliSumModel: table mass != 1");
    }
    BernoulliSumModel m;
    m.kind = Kind::kDependent;
    m.joint = std::move(table);
    m.p.assign(static_cast<std::size_t>(n), 0.0);
    for (std::size_t k = 0; k < m.joint.size(); ++k) {
      for (int i = 0; i < n; ++i) {
        if ((k >> (n - 1 - i)) & 1U) m.p[static_cast<std::size_t>(i)] += m.joint[k];
      }
    }
    for (double pi : m.p) {
      if (!(pi < 1.0 / 3.0)) {
        throw PreconditionError("BernoulliSumModel: marginal p_i must stay below 1/3");
      }
    }
    return m;
  }

  static BernoulliSumModel records(long long s, long long n) {
    if (s < 4) throw PreconditionError("BernoulliSumModel: records needs s >= 4 (p_i < 1/3)");
    if (n < s) throw PreconditionError("BernoulliSumModel: records needs n >= s");
    BernoulliSumModel m;
    m.kind = Kind::kRecords;
    m.records_s = s;
    m.records_n = n;
    m.p.reserve(static_cast<std::size_t>(n - s + 1));
    for (long long i = s; i <= n; ++i) m.p.push_back(1.0 / static_cast<double>(i));
    return m;
  }
};

// Exact pmf of sum I_i for independent indicators, by the standard in-place DP.
inline SignedLatticeMeasure poisson_binomial_pmf(const std::vector<double>& p) {
  for (double pi : p) {
    if (!(pi >= 0.0 && pi <= 1.0)) throw PreconditionError("poisson_binomial_pmf: p_i in [0,1]");
  }
  std::vector<double> w(p.size() + 1, 0.0);
  w[0] = 1.0;
  std::size_t count = 0;
  for (double pi : p) {
    ++count;
    for (std::size_t k = count; k >= 1; --k) w[k] = w[k] * (1.0 - pi) + w[k - 1] * pi;
    w[0] *= (1.0 - pi);
  }
  SignedLatticeMeasure out{0, std::move(w)};
  out.trim();
  return out;
}

// Exact pmf of W for a dependent model, by full enumeration of the table.
inline SignedLatticeMeasure exact_sum_pmf(const BernoulliSumModel& model) {
  if (model.kind != BernoulliSumModel::Kind::kDependent) {
    throw PreconditionError("exact_sum_pmf: requires a dependent model");
  }
  std::vector<double> w(static_cast<std::size_t>(model.n()) + 1, 0.0);
  for (std::size_t k = 0; k < model.joint.size(); ++k) {
    w[static_cast<std::size_t>(std::popcount(k))] += model.joint[k];
  }
  SignedLatticeMeasure out{0, std::move(w)};
  out.trim();
  return out;
}

// eta_1 = sum_i {p_i/(1-2p_i)} E|W~(i) - W(i)|, where W(i) = W - I_i and
// W~(i) has the conditional law of W(i) given I_i = 1.  The coupling of the
// pair is not pinned down by the definition, so both canonical readings are
// computed: the Wasserstein-minimal coupling (sum of cdf differences), which
// lower-bounds every coupling, and the independent coupling as a conservative
// reference.
struct Eta1Result {
  double minimal = 0.0;
  double independent = 0.0;
};

inline Eta1Result eta1(const BernoulliSumModel& model) {
  if (model.kind != BernoulliSumModel::Kind::kDependent) return {0.0, 0.0};
  const int n = model.n();
  Eta1Result out;
  for (int i = 0; i < n; ++i) {
    const double pi = model.p[static_cast<std::size_t>(i)];
    if (pi <= 0.0) {
      throw PreconditionError("eta1: P(I_i = 1) = 0 leaves the conditional sum undefined");
    }
    std::vector<double> wi(static_cast<std::size_t>(n), 0.0);   // W(i)
    std::vector<double> wti(static_cast<std::size_t>(n), 0.0);  // W~(i), unnormalized
    for (std::size_t k = 0; k < model.joint.size(); ++k) {
      const bool ii = (k >> (n - 1 - i)) & 1U;
      const int rest = std::popcount(k) - (ii ? 1 : 0);
      wi[static_cast<std::size_t>(rest)] += model.joint[k];
      if (ii) wti[static_cast<std::size_t>(rest)] += model.joint[k];
    }
    for (double& v : wti) v /= pi;
    SignedLatticeMeasure mw{0, wi}, mwt{0, wti};
    const double minimal = distance(mw, mwt, MetricKind::kWasserstein);
    double indep = 0.0;
    for (std::size_t a = 0; a < wi.size(); ++a) {
      for (std::size_t b = 0; b < wti.size(); ++b) {
        indep += wi[a] * wti[b] * std::abs(static_cast<double>(a) - static_cast<double>(b));
      }
    }
    const double factor = pi / (1.0 - 2.0 * pi);
    out.minimal += factor * minimal;
    out.independent += factor * indep;
  }
  return out;
}

// Tail sum_{i>n} p_i^2 (1-2p_i)^{-2} of the records family: with p_i = 1/i
// each term is (i-2)^{-2}, so the tail is sum_{m>=n-1} m^{-2}.
inline TailPowerSum records_tail_term(long long n) { return tail_power_sum(n - 1, 2); }

// theta_1 = sum_i p_i^2 (1-2p_i)^{-2} / lambda, summed over the WHOLE family
// (finite part plus analytic tail for records): the conservative full-sum
// convention, which is what the contraction argument actually controls.
inline double theta1(const BernoulliSumModel& model) {
  double s = 0.0;
  for (double pi : model.p) {
    if (!(pi < 1.0 / 3.0)) throw PreconditionError("theta1: requires p_i < 1/3");
    const double q = 1.0 - 2.0 * pi;
    s += pi * pi / (q * q);
  }
  if (model.kind == BernoulliSumModel::Kind::kRecords) {
    s += records_tail_term(model.records_n).value;
  }
  return s / model.lambda();
}

// The three Borovkov-Pfeifer error bounds, all scaled by (lambda(1-2 theta_1))^{-1}:
//   bp6 (d_TV):  2 (T + eta_1)
//   bp7 (d_pt):  2 (supW * T + eta_1)
//   bp8 (d_W):   1.15 sqrt(lambda) (T + eta_1) / lambda
// where T is the tail sum over i > n (zero for finite families) and eta_1 is
// the dependence penalty (the conservative independent-coupling value).
struct BpBounds {
  double bp6 = 0.0;
  double bp7 = 0.0;
  double bp8 = 0.0;
  double lambda = 0.0;
  double theta1 = 0.0;
  double tail = 0.0;       // T
  double eta1_used = 0.0;  // conservative value fed into the bounds
  double eta1_minimal = 0.0;
};

inline BpBounds bp_bounds_from_ingredients(double lambda, double theta_1, double tail,
                                           double eta_1, double supW) {
  if (!(theta_1 < 0.5)) {
    throw PreconditionError("bp_error_bounds: theta_1 >= 1/2, no contraction");
  }
  BpBounds b;
  b.lambda = lambda;
  b.theta1 = theta_1;
  b.tail = tail;
  b.eta1_used = eta_1;
  const double scale = 1.0 / (lambda * (1.0 - 2.0 * theta_1));
  b.bp6 = 2.0 * scale * (tail + eta_1);
  b.bp7 = 2.0 * scale * (supW * tail + eta_1);
  b.bp8 = 1.15 * std::sqrt(lambda) * scale * (tail + eta_1);
  return b;
}

inline BpBounds bp_error_bounds(const BernoulliSumModel& model, double supW) {
  double tail = 0.0;
  if (model.kind == BernoulliSumModel::Kind::kRecords) {
    const TailPowerSum t = records_tail_term(model.records_n);
    tail = t.value + t.half_width;
  }
  const Eta1Result e = eta1(model);
  BpBounds b = bp_bounds_from_ingredients(model.lambda(), theta1(model), tail, e.independent, supW);
  b.eta1_minimal = e.minimal;
  return b;
}

// sup_k P(W = k) bound for independent families, (4 sum p_i q_i)^{-1/2}.
inline double sup_pmf_bound_independent(const std::vector<double>& p) {
  double s = 0.0;
  for (double pi : p) s += pi * (1.0 - pi);
  if (s <= 0.0) return 1.0;
  return 1.0 / (2.0 * std::sqrt(s));
}

struct RecordsRow {
  long long n = 0;
  MetricKind metric = MetricKind::kTotalVariation;
  double actual = 0.0;
  double bound = 0.0;
  double ratio = 0.0;
  double truncation = 0.0;
};

// One cell of the records experiment: exact L(W_s) against Po(lambda)*BP_s
// for p_i = 1/i, i in [s, n], with the theorem's bound for each metric.
// The first s-1 indicators cancel from both sides by the convolution
// argument, so they never enter.
inline std::vector<RecordsRow> records_experiment(long long n, long long s,
                                                  const std::vector<MetricKind>& metrics,
                                                  int max_jump = 0) {
  const BernoulliSumModel model = BernoulliSumModel::records(s, n);
  const SignedLatticeMeasure exact = poisson_binomial_pmf(model.p);
  const JumpRateSpec rates = bp_rates(model.p, RecordsTail{n}, max_jump, true);
  const SignedLatticeMeasure approx = exp_rates(rates);
  const BpBounds bounds = bp_error_bounds(model, sup_pmf_bound_independent(model.p));

  std::vector<RecordsRow> rows;
  for (MetricKind metric : metrics) {
    RecordsRow row;
    row.n = n;
    row.metric = metric;
    row.actual = distance(exact, approx, metric);
    switch (metric) {
      case MetricKind::kTotalVariation: row.bound = bounds.bp6; break;
      case MetricKind::kPoint: row.bound = bounds.bp7; break;
      case MetricKind::kWasserstein: row.bound = bounds.bp8; break;
      case MetricKind::kKolmogorov:
        throw PreconditionError("records_experiment: no bound for the Kolmogorov metric");
    }
    row.truncation = rates.truncation_error;
    row.ratio = row.actual / row.bound;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace steinpert
