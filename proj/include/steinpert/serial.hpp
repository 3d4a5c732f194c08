// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <string>

#include "steinpert/bernoulli_sum.hpp"
#include "steinpert/lattice_measure.hpp"
#include "steinpert/stein_lattice.hpp"

namespace steinpert {

inline nlohmann::json measure_to_json(const SignedLatticeMeasure& m) {
  return nlohmann::json{{"offset", m.offset}, {"weights", m.weights}};
}

inline SignedLatticeMeasure measure_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("offset") || !j.contains("weights")) {
    throw ConfigError("measure JSON must be {offset, weights[]}");
  }
  SignedLatticeMeasure m;
  m.offset = j.at("offset").get<long long>();
  m.weights = j.at("weights").get<std::vector<double>>();
  return m;
}

inline nlohmann::json report_to_json(const PerturbationReport& r) {
  return nlohmann::json{{"gamma_upper", r.gamma_upper},
                        {"gamma_empirical", r.gamma_empirical},
                        {"contraction_ok", r.contraction_ok},
                        {"A", r.A},
                        {"norm", norm_name(r.norm)}};
}

// Dependent joint table {n, probs: [2^n]} in lexicographic {0,1}^n order:
// probs[k] is P(I_1 = b_1, ..., I_n = b_n) with k = sum_i b_i 2^{n-i}.
inline BernoulliSumModel dependent_model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("probs")) {
    throw ConfigError("dependent model JSON must be {n, probs[]}");
  }
  const int n = j.at("n").get<int>();
  const auto probs = j.at("probs").get<std::vector<double>>();
  return BernoulliSumModel::dependent(n, probs);
}

}  // namespace steinpert
