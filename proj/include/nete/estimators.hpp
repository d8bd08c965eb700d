#pragma once

// NETE estimators: the two-factor EVT-IPW / EVT-DR pipeline
// (theta = eta * mu) and the naive IPW / DR baselines.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nete/error.hpp"
#include "nete/evt.hpp"
#include "nete/nuisance.hpp"
#include "nete/rng.hpp"
#include "nete/table.hpp"

namespace nete {

enum class Method { evt_ipw, evt_dr, naive_ipw, naive_dr };

inline constexpr Method kAllMethods[] = {Method::evt_dr, Method::evt_ipw, Method::naive_dr, Method::naive_ipw};

inline const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::evt_ipw: return "evt-ipw";
    case Method::evt_dr: return "evt-dr";
    case Method::naive_ipw: return "naive-ipw";
    case Method::naive_dr: return "naive-dr";
  }
  return "unknown";
}

/// Accepts "evt-dr" as well as "evt_dr".
inline Method parse_method(std::string_view text) {
  std::string s(text);
  for (auto& c : s)
    if (c == '_') c = '-';
  if (s == "evt-ipw") return Method::evt_ipw;
  if (s == "evt-dr") return Method::evt_dr;
  if (s == "naive-ipw") return Method::naive_ipw;
  if (s == "naive-dr") return Method::naive_dr;
  throw DomainError("unknown method '" + std::string(text) + "'");
}

inline bool is_evt(Method m) noexcept { return m == Method::evt_ipw || m == Method::evt_dr; }

struct NeteEstimate {
  Method method = Method::evt_dr;
  double eta_hat = 0.0;
  double mu_hat = 1.0;
  double theta_hat = 0.0;
  double threshold_t = 0.0;
  std::size_t n_tail = 0;
  double alpha_hat = 0.0;
  double gamma_hat = 0.0;        ///< Hill index on the tail set (enters mu_hat)
  std::size_t k_tail = 0;
  double gamma_threshold = 0.0;  ///< Hill index on all of the estimation half (sets t)
  std::size_t k_threshold = 0;
  std::size_t alpha_rows_dropped = 0;  ///< Y = 0 rows left out of the alpha regression
  bool alpha_mostly_dropped = false;   ///< more than half of them; alpha_hat is unreliable
};

/// Pipeline options. Defaults: alpha by regression on the nuisance half,
/// automatic threshold, l_n = 30, propensity clipped to [1e-4, 1 - 1e-4],
/// random-forest outcome models trained on the whole nuisance half.
struct NeteConfig {
  std::optional<double> alpha;  ///< fixed alpha_hat; empty means regression estimate
  ThresholdRule threshold = ThresholdRule::automatic();
  AdaptiveHillOptions hill;
  LogisticOptions propensity;
  OutcomeOptions outcome;
  bool alpha_use_all_data = false;  ///< fit alpha on both halves instead of the nuisance half
  bool alpha_tail_only = false;     ///< restrict the alpha regression to norms above t
  bool tail_only_nuisance = false;  ///< fit the outcome models on exceedances of the nuisance half only
};

// ---------------------------------------------------------------------------
// Building blocks

/// Random split into halves of sizes floor(n/2) and ceil(n/2).
inline std::pair<ObservationTable, ObservationTable> split_sample(const ObservationTable& data, Rng& rng) {
  const Eigen::Index n = data.n();
  if (n < 2) throw InsufficientDataError("sample splitting needs at least two rows");
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  for (std::size_t i = perm.size() - 1; i > 0; --i) {
    std::swap(perm[i], perm[static_cast<std::size_t>(rng.below(i + 1))]);
  }
  const auto half = static_cast<std::ptrdiff_t>(n / 2);
  std::vector<Eigen::Index> first(perm.begin(), perm.begin() + half);
  std::vector<Eigen::Index> second(perm.begin() + half, perm.end());
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {data.subset(first), data.subset(second)};
}

namespace detail {

inline std::vector<double> row_of(const Matrix& m, Eigen::Index r) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(c)] = m(r, c);
  return out;
}

inline void require_tail(const ObservationTable& tail) {
  if (tail.n() == 0) throw EmptyTailError("no observation exceeds the threshold");
}

}  // namespace detail

/// Mean of (Y/|U|^alpha) (D/p - (1-D)/(1-p)) over the tail rows.
inline double eta_ipw(const ObservationTable& tail, const PropensityModel& prop, double alpha_hat) {
  detail::require_tail(tail);
  const Vector nrm = tail.norms();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < tail.n(); ++i) {
    const double p = prop.predict(detail::row_of(tail.X, i));
    const double scaled = tail.Y(i) / std::pow(nrm(i), alpha_hat);
    sum += scaled * (tail.D(i) / p - (1.0 - tail.D(i)) / (1.0 - p));
  }
  return sum / static_cast<double>(tail.n());
}

/// Doubly robust score mean with angles S = U/|U|.
inline double eta_dr(const ObservationTable& tail, const PropensityModel& prop, const OutcomeModel& outcome,
                     double alpha_hat) {
  detail::require_tail(tail);
  const Vector nrm = tail.norms();
  const Matrix angles = l1_angles(tail.U);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < tail.n(); ++i) {
    const auto x = detail::row_of(tail.X, i);
    const auto s = detail::row_of(angles, i);
    const double p = prop.predict(x);
    const double g1 = outcome.predict(x, 1.0, s);
    const double g0 = outcome.predict(x, 0.0, s);
    const double g_obs = tail.D(i) == 1.0 ? g1 : g0;
    const double scaled = tail.Y(i) / std::pow(nrm(i), alpha_hat);
    sum += g1 - g0 + (tail.D(i) - p) / (p * (1.0 - p)) * (scaled - g_obs);
  }
  return sum / static_cast<double>(tail.n());
}

/// Naive IPW: raw outcomes over exceedances of t, scaled by t^alpha instead of |U|^alpha.
inline NeteEstimate naive_ipw(const ObservationTable& data, double t, double alpha_hat, const PropensityModel& prop) {
  const ObservationTable tail = data.exceedances(t);
  detail::require_tail(tail);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < tail.n(); ++i) {
    const double p = prop.predict(detail::row_of(tail.X, i));
    sum += tail.Y(i) * (tail.D(i) / p - (1.0 - tail.D(i)) / (1.0 - p));
  }
  NeteEstimate est;
  est.method = Method::naive_ipw;
  est.eta_hat = sum / (std::pow(t, alpha_hat) * static_cast<double>(tail.n()));
  est.mu_hat = 1.0;
  est.theta_hat = est.eta_hat;
  est.threshold_t = t;
  est.n_tail = static_cast<std::size_t>(tail.n());
  est.alpha_hat = alpha_hat;
  return est;
}

/// Naive DR: the usual doubly robust score on raw Y with g(x, d, u) fitted on
/// raw U, divided by t^alpha.
inline NeteEstimate naive_dr(const ObservationTable& data, double t, double alpha_hat, const PropensityModel& prop,
                             const OutcomeModel& raw_outcome) {
  const ObservationTable tail = data.exceedances(t);
  detail::require_tail(tail);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < tail.n(); ++i) {
    const auto x = detail::row_of(tail.X, i);
    const auto u = detail::row_of(tail.U, i);
    const double p = prop.predict(x);
    const double g1 = raw_outcome.predict(x, 1.0, u);
    const double g0 = raw_outcome.predict(x, 0.0, u);
    const double g_obs = tail.D(i) == 1.0 ? g1 : g0;
    sum += g1 - g0 + (tail.D(i) - p) / (p * (1.0 - p)) * (tail.Y(i) - g_obs);
  }
  NeteEstimate est;
  est.method = Method::naive_dr;
  est.eta_hat = sum / (std::pow(t, alpha_hat) * static_cast<double>(tail.n()));
  est.mu_hat = 1.0;
  est.theta_hat = est.eta_hat;
  est.threshold_t = t;
  est.n_tail = static_cast<std::size_t>(tail.n());
  est.alpha_hat = alpha_hat;
  return est;
}

// ---------------------------------------------------------------------------
// Full pipeline

/// Everything the four estimators share for one dataset: the split, the
/// threshold, alpha_hat, the propensity fit and the tail set. Outcome models
/// are fitted on first use.
class NetePipeline {
 public:
  NetePipeline(const ObservationTable& data, const NeteConfig& cfg, const Rng& rng) : cfg_(cfg) {
    data.validate();
    cfg_.threshold.validate();
    Rng split_rng = rng.split(0);
    forest_seed_ = derive_seed(rng.seed(), 1);
    auto halves = split_sample(data, split_rng);
    nuisance_ = std::move(halves.first);
    estimation_ = std::move(halves.second);

    const Vector est_norms = estimation_.norms();
    if (cfg_.threshold.is_auto()) {
      const HillEstimate h = adaptive_hill(std::span<const double>(est_norms.data(), est_norms.size()), cfg_.hill);
      gamma_threshold_ = h.gamma_hat;
      k_threshold_ = h.k;
      t_ = select_threshold(h.n, h.gamma_hat, cfg_.threshold);
    } else {
      t_ = *cfg_.threshold.fixed;
    }

    if (cfg_.alpha) {
      alpha_hat_ = *cfg_.alpha;
    } else {
      const ObservationTable& base = cfg_.alpha_use_all_data ? data : nuisance_;
      const ObservationTable source = cfg_.alpha_tail_only ? base.exceedances(t_) : base;
      const Vector nrm = source.norms();
      const AlphaEstimate fit = estimate_alpha(std::span<const double>(source.Y.data(), source.Y.size()),
                                               std::span<const double>(nrm.data(), nrm.size()));
      alpha_hat_ = fit.alpha_hat;
      alpha_dropped_ = fit.n_dropped;
      alpha_mostly_dropped_ = fit.mostly_dropped();
    }

    propensity_ = fit_propensity(nuisance_.X, nuisance_.D, cfg_.propensity);
    tail_ = estimation_.exceedances(t_);
    detail::require_tail(tail_);
  }

  double threshold() const noexcept { return t_; }
  double alpha_hat() const noexcept { return alpha_hat_; }
  const ObservationTable& nuisance_half() const noexcept { return nuisance_; }
  const ObservationTable& estimation_half() const noexcept { return estimation_; }
  const ObservationTable& tail() const noexcept { return tail_; }
  const PropensityModel& propensity() const noexcept { return propensity_; }

  /// Hill index on the tail norms and the resulting moment factor.
  std::pair<HillEstimate, double> tail_moment() {
    if (!tail_hill_) {
      const Vector nrm = tail_.norms();
      tail_hill_ = adaptive_hill(std::span<const double>(nrm.data(), nrm.size()), cfg_.hill);
    }
    return {*tail_hill_, moment_factor(alpha_hat_, tail_hill_->gamma_hat)};
  }

  const OutcomeModel& pseudo_outcome() {
    if (!pseudo_outcome_) {
      const ObservationTable train = training_rows();
      const Vector nrm = train.norms();
      const Vector scaled = train.Y.array() / nrm.array().pow(alpha_hat_);
      OutcomeOptions opts = cfg_.outcome;
      opts.forest.seed = derive_seed(forest_seed_, 0);
      pseudo_outcome_ = fit_pseudo_outcome(train.X, train.D, l1_angles(train.U), scaled, opts);
    }
    return *pseudo_outcome_;
  }

  const OutcomeModel& raw_outcome() {
    if (!raw_outcome_) {
      const ObservationTable train = training_rows();
      OutcomeOptions opts = cfg_.outcome;
      opts.forest.seed = derive_seed(forest_seed_, 1);
      raw_outcome_ = OutcomeModel::fit(train.X, train.D, train.U, train.Y, opts);
    }
    return *raw_outcome_;
  }

  NeteEstimate estimate(Method method) {
    NeteEstimate est;
    if (is_evt(method)) {
      const auto [hill, mu] = tail_moment();
      est.method = method;
      est.eta_hat = method == Method::evt_ipw ? eta_ipw(tail_, propensity_, alpha_hat_)
                                              : eta_dr(tail_, propensity_, pseudo_outcome(), alpha_hat_);
      est.mu_hat = mu;
      est.theta_hat = est.eta_hat * est.mu_hat;
      est.n_tail = static_cast<std::size_t>(tail_.n());
      est.threshold_t = t_;
      est.alpha_hat = alpha_hat_;
      est.gamma_hat = hill.gamma_hat;
      est.k_tail = hill.k;
    } else {
      est = method == Method::naive_ipw ? naive_ipw(estimation_, t_, alpha_hat_, propensity_)
                                        : naive_dr(estimation_, t_, alpha_hat_, propensity_, raw_outcome());
    }
    est.gamma_threshold = gamma_threshold_;
    est.k_threshold = k_threshold_;
    est.alpha_rows_dropped = alpha_dropped_;
    est.alpha_mostly_dropped = alpha_mostly_dropped_;
    return est;
  }

 private:
  ObservationTable training_rows() const {
    return cfg_.tail_only_nuisance ? nuisance_.exceedances(t_) : nuisance_;
  }

  NeteConfig cfg_;
  std::uint64_t forest_seed_ = 0;
  ObservationTable nuisance_;
  ObservationTable estimation_;
  ObservationTable tail_;
  double t_ = 0.0;
  double gamma_threshold_ = std::nan("");
  std::size_t k_threshold_ = 0;
  double alpha_hat_ = 0.0;
  std::size_t alpha_dropped_ = 0;
  bool alpha_mostly_dropped_ = false;
  PropensityModel propensity_;
  std::optional<HillEstimate> tail_hill_;
  std::optional<OutcomeModel> pseudo_outcome_;
  std::optional<OutcomeModel> raw_outcome_;
};

/// Runs the whole pipeline for a single method.
inline NeteEstimate estimate_nete(const ObservationTable& data, Method method, const NeteConfig& cfg,
                                  const Rng& rng) {
  NetePipeline pipeline(data, cfg, rng);
  return pipeline.estimate(method);
}

/// Result of one method on one dataset; failures are values, not exceptions.
struct MethodOutcome {
  Method method = Method::evt_dr;
  std::optional<NeteEstimate> estimate;
  std::optional<ErrorKind> error;
  std::string message;

  bool ok() const noexcept { return estimate.has_value(); }
};

/// Runs several methods on the same split, threshold and nuisance fits.
/// Estimation failures are recorded per method; other errors propagate.
inline std::vector<MethodOutcome> estimate_methods(const ObservationTable& data, std::span<const Method> methods,
                                                   const NeteConfig& cfg, const Rng& rng) {
  std::vector<MethodOutcome> out;
  out.reserve(methods.size());
  std::optional<NetePipeline> pipeline;
  try {
    pipeline.emplace(data, cfg, rng);
  } catch (const Error& e) {
    if (!e.is_estimation_failure()) throw;
    for (Method m : methods) out.push_back(MethodOutcome{m, std::nullopt, e.kind(), e.what()});
    return out;
  }
  for (Method m : methods) {
    try {
      out.push_back(MethodOutcome{m, pipeline->estimate(m), std::nullopt, {}});
    } catch (const Error& e) {
      if (!e.is_estimation_failure()) throw;
      out.push_back(MethodOutcome{m, std::nullopt, e.kind(), e.what()});
    }
  }
  return out;
}

}  // namespace nete
