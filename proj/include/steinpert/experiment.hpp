// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "steinpert/bernoulli_sum.hpp"
#include "steinpert/distance.hpp"
#include "steinpert/markov_jump.hpp"
#include "steinpert/normal_stein.hpp"
#include "steinpert/serial.hpp"
#include "steinpert/stein_lattice.hpp"

namespace steinpert {

struct ExperimentConfig {
  std::string command;
  nlohmann::json parameters = nlohmann::json::object();
  std::string output;  // empty = stdout
  std::string format = "csv";
  std::uint64_t seed = 0;
};

struct ExperimentResult {
  int exit_code = 0;  // 0: all asserted bounds hold; 1: violations listed
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;
  std::vector<std::string> violations;

  std::string render(const std::string& format) const;
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string cell_to_string(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return fmt_double(v.get<double>());
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_null()) return "";
  return v.dump();
}

// Run fn(0..count-1) over `jobs` threads; results must land in preallocated
// slots so the emitted row order never depends on scheduling.
template <class Fn>
void parallel_cells(std::size_t count, int jobs, Fn&& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  const int spawn = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), count));
  threads.reserve(static_cast<std::size_t>(spawn));
  for (int t = 0; t < spawn; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Typed parameter access with unknown-key rejection.
class ParamReader {
 public:
  ParamReader(const nlohmann::json& params, std::string command)
      : params_(params), command_(std::move(command)) {
    if (!params_.is_object()) throw ConfigError(command_ + ": parameters must be an object");
  }

  template <class T>
  T get(const std::string& key, const T& fallback) {
    seen_.insert(key);
    if (!params_.contains(key)) return fallback;
    try {
      return params_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(command_ + ": parameter '" + key + "' has the wrong type");
    }
  }

  template <class T>
  T require(const std::string& key) {
    seen_.insert(key);
    if (!params_.contains(key)) {
      throw ConfigError(command_ + ": missing required parameter '" + key + "'");
    }
    try {
      return params_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(command_ + ": parameter '" + key + "' has the wrong type");
    }
  }

  nlohmann::json raw(const std::string& key) {
    seen_.insert(key);
    return params_.contains(key) ? params_.at(key) : nlohmann::json();
  }

  void finish() const {
    for (const auto& [key, value] : params_.items()) {
      (void)value;
      if (!seen_.count(key)) {
        throw ConfigError(command_ + ": unknown parameter '" + key + "'");
      }
    }
  }

 private:
  const nlohmann::json& params_;
  std::string command_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline std::string ExperimentResult::render(const std::string& format) const {
  std::ostringstream out;
  if (format == "csv") {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out << columns[c] << (c + 1 < columns.size() ? "," : "");
    }
    out << "\n";
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        out << detail::cell_to_string(row[c]) << (c + 1 < row.size() ? "," : "");
      }
      out << "\n";
    }
  } else if (format == "json") {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& row : rows) {
      nlohmann::json obj = nlohmann::json::object();
      for (std::size_t c = 0; c < row.size() && c < columns.size(); ++c) obj[columns[c]] = row[c];
      arr.push_back(obj);
    }
    out << arr.dump(2) << "\n";
  } else {
    throw ConfigError("unknown format: " + format);
  }
  return out.str();
}

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> allowed = {"command", "parameters", "output", "format", "seed"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) throw ConfigError("config: unknown key '" + key + "'");
  }
  ExperimentConfig cfg;
  if (!j.contains("command") || !j.at("command").is_string()) {
    throw ConfigError("config: 'command' (string) is required");
  }
  cfg.command = j.at("command").get<std::string>();
  if (j.contains("parameters")) cfg.parameters = j.at("parameters");
  if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
  if (j.contains("format")) cfg.format = j.at("format").get<std::string>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (cfg.format != "csv" && cfg.format != "json") {
    throw ConfigError("config: format must be 'csv' or 'json'");
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

namespace detail {

inline ExperimentResult run_records(const ExperimentConfig& cfg, int jobs) {
  ParamReader params(cfg.parameters, "records");
  const std::vector<long long> ns = params.get<std::vector<long long>>("n", {25, 50, 100, 200});
  const long long s = params.get<long long>("s", 4);
  const std::vector<std::string> metric_names = params.get<std::vector<std::string>>(
      "metrics", {"total_variation", "point", "wasserstein"});
  const int max_jump = params.get<int>("max_jump", 0);
  params.finish();

  std::vector<MetricKind> metrics;
  for (const auto& name : metric_names) metrics.push_back(metric_from_name(name));

  ExperimentResult result;
  result.columns = {"n", "metric", "actual", "bound", "ratio", "truncation"};
  std::vector<std::vector<RecordsRow>> cells(ns.size());
  parallel_cells(ns.size(), jobs,
                 [&](std::size_t i) { cells[i] = records_experiment(ns[i], s, metrics, max_jump); });
  for (const auto& cell : cells) {
    for (const auto& row : cell) {
      result.rows.push_back({row.n, metric_name(row.metric), row.actual, row.bound, row.ratio,
                             row.truncation});
      if (!(row.ratio <= 1.0 + 1e-9)) {
        result.violations.push_back("records n=" + std::to_string(row.n) + " metric=" +
                                    metric_name(row.metric) + " ratio=" + fmt_double(row.ratio));
      }
    }
  }
  result.exit_code = result.violations.empty() ? 0 : 1;
  return result;
}

inline ExperimentResult run_bp_verify(const ExperimentConfig& cfg, int /*jobs*/) {
  ParamReader params(cfg.parameters, "bp-verify");
  const std::string path = params.require<std::string>("model");
  const std::string dist_out = params.get<std::string>("distribution_out", "");
  params.finish();

  std::ifstream in(path);
  if (!in) throw ConfigError("bp-verify: cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bp-verify: model parse error: ") + e.what());
  }
  const BernoulliSumModel model = dependent_model_from_json(j);
  const SignedLatticeMeasure exact = exact_sum_pmf(model);
  const SignedLatticeMeasure approx = exp_rates(bp_rates(model.p, std::nullopt, 0, true));
  const BpBounds bounds = bp_error_bounds(model, max_abs_weight(exact));
  if (!dist_out.empty()) {
    std::ofstream out(dist_out);
    out << measure_to_json(exact).dump(2) << "\n";
  }

  ExperimentResult result;
  result.columns = {"metric", "actual",       "bound",        "ratio",
                    "lambda", "theta1",       "eta1_minimal", "eta1_independent"};
  struct Line {
    MetricKind metric;
    double bound;
  };
  for (const Line& line : {Line{MetricKind::kTotalVariation, bounds.bp6},
                           Line{MetricKind::kPoint, bounds.bp7},
                           Line{MetricKind::kWasserstein, bounds.bp8}}) {
    const double actual = distance(exact, approx, line.metric);
    const double ratio = actual / line.bound;
    result.rows.push_back({metric_name(line.metric), actual, line.bound, ratio, bounds.lambda,
                           bounds.theta1, bounds.eta1_minimal, bounds.eta1_used});
    if (!(ratio <= 1.0 + 1e-9)) {
      result.violations.push_back(std::string("bp-verify metric=") + metric_name(line.metric) +
                                  " ratio=" + fmt_double(ratio));
    }
  }
  result.exit_code = result.violations.empty() ? 0 : 1;
  return result;
}

inline ExperimentResult run_gamma(const ExperimentConfig& cfg, int /*jobs*/) {
  ParamReader params(cfg.parameters, "gamma");
  CompoundPoissonSpec spec;
  spec.lambda = params.require<double>("lambda");
  const nlohmann::json mu = params.raw("mu");
  if (!mu.is_object() || mu.empty()) throw ConfigError("gamma: 'mu' must be a nonempty object");
  for (const auto& [key, value] : mu.items()) {
    long long l = 0;
    try {
      l = std::stoll(key);
    } catch (...) {
      throw ConfigError("gamma: mu key '" + key + "' is not an integer");
    }
    spec.mu[l] = value.get<double>();
  }
  const std::string norm_str = params.get<std::string>("norm", "sup");
  const int probes = params.get<int>("probes", 200);
  params.finish();

  NormKind norm = NormKind::kSup;
  if (norm_str == "sup") {
    norm = NormKind::kSup;
  } else if (norm_str == "wasserstein") {
    norm = NormKind::kWassersteinSeminorm;
  } else if (norm_str == "l1") {
    norm = NormKind::kL1;
  } else {
    throw ConfigError("gamma: unknown norm '" + norm_str + "'");
  }

  const PerturbationReport report = make_perturbation_report(spec, norm, probes, cfg.seed);
  ExperimentResult result;
  result.columns = {"norm", "gamma_upper", "gamma_empirical", "contraction_ok", "A"};
  result.rows.push_back({norm_name(report.norm), report.gamma_upper, report.gamma_empirical,
                         report.contraction_ok, report.A});
  if (report.gamma_empirical > report.gamma_upper + 1e-9) {
    result.violations.push_back("gamma: empirical exceeds certified upper bound");
  }
  result.exit_code = result.violations.empty() ? 0 : 1;
  return result;
}

inline ExperimentResult run_stein_check(const ExperimentConfig& cfg, int jobs) {
  ParamReader params(cfg.parameters, "stein-check");
  const std::vector<double> lambdas = params.get<std::vector<double>>("lambdas", {0.5, 1.0, 5.0, 20.0});
  const int probes = params.get<int>("probes", 1000);
  params.finish();

  struct Cell {
    double lambda;
    NormKind norm;
    double worst_ratio = 0.0;
    bool pass = true;
  };
  std::vector<Cell> cells;
  for (double lp : lambdas) {
    for (NormKind norm : {NormKind::kSup, NormKind::kWassersteinSeminorm, NormKind::kL1}) {
      cells.push_back({lp, norm, 0.0, true});
    }
  }
  parallel_cells(cells.size(), jobs, [&](std::size_t i) {
    Cell& cell = cells[i];
    for (int k = 0; k < probes; ++k) {
      std::mt19937_64 rng(cfg.seed + 0x1000 * i + static_cast<std::uint64_t>(k));
      LatticeFunction f;
      f.offset = 0;
      f.values.resize(31);
      for (double& v : f.values) v = uniform(rng, -1.0, 1.0);
      const SteinFactorReport rep = stein_factor_check(cell.lambda, f, cell.norm);
      for (const auto& check : rep.checks) {
        if (check.bound > 0.0) cell.worst_ratio = std::max(cell.worst_ratio, check.achieved / check.bound);
        cell.pass = cell.pass && check.pass;
      }
    }
  });

  ExperimentResult result;
  result.columns = {"lambda", "norm", "worst_ratio", "pass"};
  for (const Cell& cell : cells) {
    result.rows.push_back({cell.lambda, norm_name(cell.norm), cell.worst_ratio, cell.pass});
    if (!cell.pass) {
      result.violations.push_back("stein-check lambda=" + fmt_double(cell.lambda) + " norm=" +
                                  norm_name(cell.norm));
    }
  }
  result.exit_code = result.violations.empty() ? 0 : 1;
  return result;
}

inline ExperimentResult run_normal_appendix(const ExperimentConfig& cfg, int jobs) {
  ParamReader params(cfg.parameters, "normal-appendix");
  const std::vector<double> psis = params.get<std::vector<double>>("psi", {0.0, 0.25, 0.5});
  const std::vector<double> zs = params.get<std::vector<double>>("indicator_z", {-2, -1, 0, 1, 2});
  const int probes = params.get<int>("probes", 5);
  params.finish();

  struct Cell {
    double psi;
    std::string label;
    ContinuousTestFunction h;
  };
  std::vector<Cell> cells;
  for (double psi : psis) {
    for (double z : zs) {
      cells.push_back({psi, "indicator(z=" + fmt_double(z) + ")", ContinuousTestFunction::indicator(z)});
    }
    for (int k = 0; k < probes; ++k) {
      std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(k) * 977 + 11);
      const double a = uniform(rng, 0.2, 1.0), b = uniform(rng, 0.2, 1.5);
      const double c = uniform(rng, 0.2, 1.0), d = uniform(rng, 0.2, 1.5);
      const double phase = uniform(rng, 0.0, 6.28);
      cells.push_back({psi, "lipschitz#" + std::to_string(k),
                       ContinuousTestFunction::lipschitz(
                           [=](double x) { return a * std::sin(b * x + phase) + c * std::tanh(d * x); },
                           [=](double x) {
                             const double t = std::tanh(d * x);
                             return a * b * std::cos(b * x + phase) + c * d * (1.0 - t * t);
                           })});
    }
    for (int k = 0; k < probes; ++k) {
      std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(k) * 1409 + 23);
      const double a = uniform(rng, 0.2, 1.0), b = uniform(rng, 0.2, 2.0);
      const double c = uniform(rng, 0.2, 1.0), x0 = uniform(rng, -1.0, 1.0);
      cells.push_back({psi, "bounded#" + std::to_string(k),
                       ContinuousTestFunction::bounded([=](double x) {
                         return a * std::cos(b * x) + c / (1.0 + (x - x0) * (x - x0));
                       })});
    }
  }

  std::vector<NormalBoundsReport> reports(cells.size());
  parallel_cells(cells.size(), jobs, [&](std::size_t i) {
    reports[i] = verify_normal_bounds(cells[i].h, cells[i].psi, default_grid(cells[i].psi));
  });

  ExperimentResult result;
  result.columns = {"psi", "h", "line", "achieved", "bound", "pass"};
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (const auto& line : reports[i].lines) {
      result.rows.push_back({cells[i].psi, cells[i].label, line.name, line.achieved, line.bound,
                             line.pass});
      if (!line.pass) {
        result.violations.push_back("normal-appendix psi=" + fmt_double(cells[i].psi) + " " +
                                    cells[i].label + " " + line.name);
      }
    }
  }
  // Tightness witness: the z = 0, psi = 0 indicator attains (a)(i) at x = 0.
  {
    const SteinOdeSolution sol =
        stein_solve_normal(ContinuousTestFunction::indicator(0.0), 0.0, default_grid(0.0));
    const std::size_t mid = sol.x.size() / 2;
    const double expected = std::sqrt(2.0 * std::numbers::pi) / 4.0;
    const bool pass = std::abs(sol.y[mid] - expected) <= 1e-6;
    result.rows.push_back({0.0, "indicator(z=0)", "witness:y(0)", sol.y[mid], expected, pass});
    if (!pass) result.violations.push_back("normal-appendix tightness witness failed");
  }
  result.exit_code = result.violations.empty() ? 0 : 1;
  return result;
}

inline ExperimentResult run_markov_jump(const ExperimentConfig& cfg, int /*jobs*/) {
  ParamReader params(cfg.parameters, "markov-jump");
  MarkovJumpModel model;
  model.N = params.require<long long>("N");
  model.z = params.get<double>("z", 0.0);
  model.alpha = params.get<double>("alpha", 0.0);
  const long long truncation = params.get<long long>("truncation", -1);
  const std::string dist_out = params.get<std::string>("distribution_out", "");
  params.finish();

  const MarkovEquilibrium eq = markov_jump_equilibrium(model, truncation);
  if (!dist_out.empty()) {
    std::ofstream out(dist_out);
    out << measure_to_json(eq.centered).dump(2) << "\n";
  }

  double po_point_diff = 0.0;
  if (model.jump() == 0 || model.alpha == 0.0) {
    const SignedLatticeMeasure po = poisson_pmf(static_cast<double>(model.N), 1e-15);
    SignedLatticeMeasure shifted = eq.centered;
    shifted.offset += model.N;
    po_point_diff = distance(shifted, po, MetricKind::kPoint);
  }

  const double mean_bound = mean_w_bound(model);
  const double second_bound = second_w_bound(model);
  const JumpDiffusionD1Bound d1 = jump_diffusion_d1_bound(model);

  ExperimentResult result;
  result.columns = {"N",        "z",           "alpha",        "mean_w",   "mean_bound",
                    "second_w", "second_bound", "balance_residual", "po_point_diff",
                    "d1_gamma", "d1_bound"};
  result.rows.push_back({model.N, model.z, model.alpha, eq.mean_w, mean_bound, eq.second_w,
                         second_bound, eq.balance_residual, po_point_diff, d1.gamma, d1.bound});
  if (std::abs(eq.mean_w) > mean_bound + 1e-12) {
    result.violations.push_back("markov-jump: |E W| exceeds alpha z");
  }
  if (eq.second_w > second_bound + 1e-12) {
    result.violations.push_back("markov-jump: E W^2 exceeds its bound");
  }
  if (eq.balance_residual > 1e-10) {
    result.violations.push_back("markov-jump: balance residual above 1e-10");
  }
  result.exit_code = result.violations.empty() ? 0 : 1;
  return result;
}

}  // namespace detail

// Run one experiment config.  Exit code 0 iff every asserted bound held,
// 1 with the violating rows listed otherwise.  Config and parameter errors
// throw ConfigError (the CLI maps them to exit 2, emitting no output).
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs = 1) {
  if (cfg.command == "records") return detail::run_records(cfg, jobs);
  if (cfg.command == "bp-verify") return detail::run_bp_verify(cfg, jobs);
  if (cfg.command == "gamma") return detail::run_gamma(cfg, jobs);
  if (cfg.command == "stein-check") return detail::run_stein_check(cfg, jobs);
  if (cfg.command == "normal-appendix") return detail::run_normal_appendix(cfg, jobs);
  if (cfg.command == "markov-jump") return detail::run_markov_jump(cfg, jobs);
  throw ConfigError("unknown command: " + cfg.command);
}

}  // namespace steinpert
