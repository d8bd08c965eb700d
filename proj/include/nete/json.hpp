#pragma once

// JSON mapping for configs and results (nlohmann/json). Field names mirror
// the C++ structs.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>

#include "nete/bench.hpp"
#include "nete/datagen.hpp"
#include "nete/error.hpp"
#include "nete/estimators.hpp"

namespace nete {

using Json = nlohmann::ordered_json;

inline constexpr const char* kBenchmarkSchema = "nete.benchmark.v1";

namespace detail {

/// Finite numbers as numbers, anything else as null.
inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("config field '") + key + "': " + e.what());
  }
}

/// "auto" or a number.
inline std::optional<double> auto_or_number(const Json& j, const char* key, std::optional<double> fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  const Json& v = j.at(key);
  if (v.is_string() && v.get<std::string>() == "auto") return std::nullopt;
  if (v.is_number()) return v.get<double>();
  throw SchemaError(std::string("config field '") + key + "' must be \"auto\" or a number");
}

}  // namespace detail

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

/// Estimator options; every key optional.
///   alpha: "auto" | number, threshold: "auto" | number, threshold_c0,
///   hill: {l_n, r, scan: "full"|"prefix"},
///   nuisance: {clip_c, outcome: "random_forest"|"linear", n_trees, max_depth,
///              min_leaf, max_features, bootstrap, alpha_use_all_data,
///              alpha_tail_only, tail_only_nuisance}
inline NeteConfig nete_config_from_json(const Json& j, NeteConfig cfg = {}) {
  cfg.alpha = detail::auto_or_number(j, "alpha", cfg.alpha);
  const double c0 = detail::get_or(j, "threshold_c0", cfg.threshold.c0);
  const auto fixed_t = detail::auto_or_number(j, "threshold", cfg.threshold.fixed);
  cfg.threshold = fixed_t ? ThresholdRule{c0, fixed_t} : ThresholdRule::automatic(c0);
  cfg.threshold.validate();

  if (j.contains("hill")) {
    const Json& h = j.at("hill");
    cfg.hill.l_n = detail::get_or<std::size_t>(h, "l_n", cfg.hill.l_n);
    if (h.contains("r") && !h.at("r").is_null()) cfg.hill.r = h.at("r").get<double>();
    const std::string scan = detail::get_or<std::string>(h, "scan", cfg.hill.scan == HillScan::full ? "full" : "prefix");
    if (scan != "full" && scan != "prefix") throw SchemaError("hill.scan must be \"full\" or \"prefix\"");
    cfg.hill.scan = scan == "full" ? HillScan::full : HillScan::prefix;
  }
  if (j.contains("nuisance")) {
    const Json& nu = j.at("nuisance");
    cfg.propensity.clip_c = detail::get_or(nu, "clip_c", cfg.propensity.clip_c);
    const std::string kind = detail::get_or<std::string>(nu, "outcome", to_string(cfg.outcome.kind));
    if (kind != "linear" && kind != "random_forest") throw SchemaError("nuisance.outcome must be linear|random_forest");
    cfg.outcome.kind = kind == "linear" ? OutcomeKind::linear : OutcomeKind::random_forest;
    cfg.outcome.forest.n_trees = detail::get_or<std::size_t>(nu, "n_trees", cfg.outcome.forest.n_trees);
    cfg.outcome.forest.max_depth = detail::get_or<std::size_t>(nu, "max_depth", cfg.outcome.forest.max_depth);
    cfg.outcome.forest.min_leaf = detail::get_or<std::size_t>(nu, "min_leaf", cfg.outcome.forest.min_leaf);
    cfg.outcome.forest.max_features = detail::get_or<std::size_t>(nu, "max_features", cfg.outcome.forest.max_features);
    cfg.outcome.forest.bootstrap = detail::get_or(nu, "bootstrap", cfg.outcome.forest.bootstrap);
    cfg.alpha_use_all_data = detail::get_or(nu, "alpha_use_all_data", cfg.alpha_use_all_data);
    cfg.alpha_tail_only = detail::get_or(nu, "alpha_tail_only", cfg.alpha_tail_only);
    cfg.tail_only_nuisance = detail::get_or(nu, "tail_only_nuisance", cfg.tail_only_nuisance);
  }
  return cfg;
}

inline DgpSpec dgp_spec_from_json(const Json& j) {
  DgpSpec s;
  s.alpha = detail::get_or(j, "alpha", s.alpha);
  s.beta = detail::get_or(j, "beta", s.beta);
  s.d_z = detail::get_or<Eigen::Index>(j, "d_z", s.d_z);
  s.d_u = detail::get_or<Eigen::Index>(j, "d_u", s.d_u);
  s.d_x = detail::get_or<Eigen::Index>(j, "d_x", s.d_x);
  s.noise = parse_noise_kind(detail::get_or<std::string>(j, "noise_kind", to_string(s.noise)));
  return s;
}

inline Json to_json(const DgpSpec& s) {
  return Json{{"alpha", s.alpha}, {"beta", s.beta}, {"d_z", s.d_z},
              {"d_u", s.d_u},     {"d_x", s.d_x},   {"noise_kind", to_string(s.noise)}};
}

/// Simulation config: a DGP spec plus n, seed and angle_term.
inline SyntheticConfig synthetic_config_from_json(const Json& j) {
  const DgpSpec spec = dgp_spec_from_json(j);
  SyntheticConfig cfg = synthetic_config_for(spec, detail::get_or<Eigen::Index>(j, "n", 1000),
                                             parse_angle_term(detail::get_or<std::string>(j, "angle_term", "sum")));
  cfg.validate();
  return cfg;
}

inline ExperimentConfig experiment_config_from_json(const Json& j) {
  ExperimentConfig cfg;
  if (!j.contains("configs") || !j.at("configs").is_array()) throw SchemaError("experiment config needs a 'configs' array");
  for (const auto& c : j.at("configs")) cfg.configs.push_back(dgp_spec_from_json(c));
  cfg.n_grid = detail::get_or<std::vector<Eigen::Index>>(j, "n_grid", {});
  cfg.repetitions = detail::get_or<std::size_t>(j, "repetitions", cfg.repetitions);
  cfg.seed = detail::get_or<std::uint64_t>(j, "seed", cfg.seed);
  if (j.contains("estimators")) {
    cfg.estimators.clear();
    for (const auto& m : j.at("estimators")) cfg.estimators.push_back(parse_method(m.get<std::string>()));
  }
  cfg.resample_A = detail::get_or(j, "resample_A", cfg.resample_A);
  cfg.angle_term = parse_angle_term(detail::get_or<std::string>(j, "angle_term", to_string(cfg.angle_term)));
  cfg.nete = nete_config_from_json(j);
  cfg.validate();
  return cfg;
}

inline Json to_json(const NeteEstimate& e) {
  Json j;
  j["method"] = to_string(e.method);
  j["theta_hat"] = detail::finite_or_null(e.theta_hat);
  j["eta_hat"] = detail::finite_or_null(e.eta_hat);
  j["mu_hat"] = detail::finite_or_null(e.mu_hat);
  j["threshold_t"] = detail::finite_or_null(e.threshold_t);
  j["n_tail"] = e.n_tail;
  j["alpha_hat"] = detail::finite_or_null(e.alpha_hat);
  j["gamma_hat"] = detail::finite_or_null(e.gamma_hat);
  j["k_tail"] = e.k_tail;
  j["gamma_threshold"] = detail::finite_or_null(e.gamma_threshold);
  j["k_threshold"] = e.k_threshold;
  j["alpha_rows_dropped"] = e.alpha_rows_dropped;
  Json warnings = Json::array();
  if (e.alpha_mostly_dropped) warnings.push_back("more than half of the rows had Y = 0 and were left out of the alpha fit");
  j["warnings"] = warnings;
  return j;
}

inline Json to_json(const HillEstimate& h) { return Json{{"gamma_hat", h.gamma_hat}, {"k", h.k}, {"n", h.n}}; }

/// Summary document: see README for the schema.
inline Json benchmark_summary_json(const BenchmarkResult& result) {
  Json j;
  j["schema"] = kBenchmarkSchema;
  j["seed"] = result.config.seed;
  j["repetitions"] = result.config.repetitions;
  j["n_grid"] = result.config.n_grid;
  Json configs = Json::array();
  for (const auto& c : result.config.configs) configs.push_back(to_json(c));
  j["configs"] = configs;
  Json cells = Json::array();
  for (const auto& cell : result.cells) {
    Json c;
    c["config"] = cell.config_index;
    c["n"] = cell.n;
    c["method"] = to_string(cell.method);
    c["ground_truth"] = cell.ground_truth;
    c["mse"] = detail::finite_or_null(cell.mse);
    c["bias"] = detail::finite_or_null(cell.bias);
    c["variance"] = detail::finite_or_null(cell.variance);
    c["mean_theta"] = detail::finite_or_null(cell.mean_theta);
    c["std_error"] = detail::finite_or_null(cell.std_error);
    c["failure_count"] = cell.failure_count;
    c["successes"] = cell.successes();
    c["flagged"] = cell.flagged();
    c["all_failed"] = cell.all_failed();
    cells.push_back(c);
  }
  j["cells"] = cells;
  j["all_cells_failed"] = result.all_cells_failed();
  return j;
}

inline Json semi_synthetic_json(const std::vector<SemiSynRow>& rows) {
  Json arr = Json::array();
  for (const auto& r : rows) {
    Json j;
    j["alpha1"] = r.config.alpha1;
    j["alpha2"] = r.config.alpha2;
    j["evt_dr"] = detail::finite_or_null(r.evt_dr);
    j["evt_ipw"] = detail::finite_or_null(r.evt_ipw);
    j["naive_dr"] = detail::finite_or_null(r.naive_dr);
    j["naive_ipw"] = detail::finite_or_null(r.naive_ipw);
    j["test_set"] = detail::finite_or_null(r.test_set);
    j["test_gamma_hat"] = detail::finite_or_null(r.test_detail.gamma_hat);
    j["test_threshold"] = detail::finite_or_null(r.test_detail.threshold_t);
    j["repetitions"] = r.repetitions;
    j["failures"] = r.failures;
    arr.push_back(j);
  }
  return Json{{"rows", arr}};
}

}  // namespace nete
