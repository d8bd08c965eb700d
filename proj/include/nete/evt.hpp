#pragma once

// Extreme-value primitives: Pareto (type II) law, Hill tail-index estimation
// with adaptive choice of k, the tail moment factor, and the threshold rule.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nete/error.hpp"

namespace nete {

/// Pareto type II with density beta * (1 + x)^(-beta - 1) on x > 0.
struct ParetoParams {
  double beta = 1.0;

  void validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) {
      throw DomainError("Pareto tail exponent must be positive, got " + std::to_string(beta));
    }
  }
};

inline double pareto_cdf(double x, const ParetoParams& params) {
  params.validate();
  if (x <= 0.0) return 0.0;
  return 1.0 - std::pow(1.0 + x, -params.beta);
}

/// Inverse of pareto_cdf on [0, 1).
inline double pareto_quantile(double p, const ParetoParams& params) {
  params.validate();
  if (!(p >= 0.0 && p < 1.0)) {
    throw DomainError("Pareto quantile needs p in [0,1), got " + std::to_string(p));
  }
  return std::pow(1.0 - p, -1.0 / params.beta) - 1.0;
}

struct HillEstimate {
  double gamma_hat = 0.0;
  std::size_t k = 0;
  std::size_t n = 0;
};

namespace detail {

inline void require_positive(std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
      throw DomainError("Hill estimation needs finite positive values; entry " +
                        std::to_string(i) + " is " + std::to_string(values[i]));
    }
  }
}

}  // namespace detail

/// Hill statistic (1/k) * sum_{j<=k} log(x_(j) / x_(k+1)) on values sorted in
/// nonincreasing order.
inline double hill_gamma(std::span<const double> norms_desc, std::size_t k) {
  if (k < 1 || k + 1 > norms_desc.size()) {
    throw IndexError("Hill order k=" + std::to_string(k) + " outside [1, " +
                     std::to_string(norms_desc.size() == 0 ? 0 : norms_desc.size() - 1) + "]");
  }
  detail::require_positive(norms_desc.first(k + 1));
  const double anchor = norms_desc[k];
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) sum += std::log(norms_desc[j] / anchor);
  return sum / static_cast<double>(k);
}

/// All Hill statistics at once: entry i (1 <= i <= n-1) holds gamma_hat(i);
/// entry 0 is unused and set to zero. Logs are taken relative to the smallest
/// value so that tied data gives exact zeros.
inline std::vector<double> hill_curve(std::span<const double> norms_desc) {
  detail::require_positive(norms_desc);
  const std::size_t n = norms_desc.size();
  std::vector<double> curve(n, 0.0);
  if (n < 2) return curve;
  const double log_min = std::log(norms_desc[n - 1]);
  double prefix = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    prefix += std::log(norms_desc[i - 1]) - log_min;
    const double next = std::log(norms_desc[i]) - log_min;
    curve[i] = std::max(0.0, prefix / static_cast<double>(i) - next);
  }
  return curve;
}

/// Which Hill statistics gamma_hat(i) a candidate k is compared against.
enum class HillScan {
  full,    ///< every i in {l_n, ..., n-1}
  prefix,  ///< only i in {l_n, ..., k} (Lepski-style)
};

inline double default_hill_r(std::size_t n) {
  const double ll = std::log(std::log(static_cast<double>(n)));
  return ll > 0.0 ? std::sqrt(ll) : 0.0;
}

/// Adaptive choice of the Hill order:
///   k = min{k in [l_n, n-1] : exists i with |g(i) - g(k)| > g(i) r / sqrt(i)} - 1,
/// or n-1 when no k is rejected.
inline std::size_t adaptive_k(std::span<const double> norms_desc, std::size_t l_n, double r,
                              HillScan scan = HillScan::full) {
  const std::size_t n = norms_desc.size();
  if (l_n < 2) throw DomainError("adaptive Hill needs l_n >= 2");
  if (!(r >= 0.0)) throw DomainError("adaptive Hill needs r >= 0");
  if (n < l_n + 1) {
    throw InsufficientSampleError("adaptive Hill needs at least l_n + 1 = " +
                                  std::to_string(l_n + 1) + " values, got " + std::to_string(n));
  }
  const std::vector<double> g = hill_curve(norms_desc);
  auto band = [&](std::size_t i) { return g[i] * r / std::sqrt(static_cast<double>(i)); };

  if (scan == HillScan::full) {
    double upper = g[l_n] + band(l_n);
    double lower = g[l_n] - band(l_n);
    for (std::size_t i = l_n + 1; i < n; ++i) {
      upper = std::min(upper, g[i] + band(i));
      lower = std::max(lower, g[i] - band(i));
    }
    for (std::size_t k = l_n; k < n; ++k) {
      if (g[k] > upper || g[k] < lower) return k - 1;
    }
    return n - 1;
  }

  double upper = g[l_n] + band(l_n);
  double lower = g[l_n] - band(l_n);
  for (std::size_t k = l_n; k < n; ++k) {
    upper = std::min(upper, g[k] + band(k));
    lower = std::max(lower, g[k] - band(k));
    if (g[k] > upper || g[k] < lower) return k - 1;
  }
  return n - 1;
}

struct AdaptiveHillOptions {
  std::size_t l_n = 30;
  std::optional<double> r;  ///< defaults to sqrt(log log n)
  HillScan scan = HillScan::full;
};

inline HillEstimate adaptive_hill(std::span<const double> norms,
                                  const AdaptiveHillOptions& options = {}) {
  std::vector<double> sorted(norms.begin(), norms.end());
  detail::require_positive(sorted);
  std::stable_sort(sorted.begin(), sorted.end(), std::greater<>());
  const double r = options.r.value_or(default_hill_r(sorted.size()));
  const std::size_t k = adaptive_k(sorted, options.l_n, r, options.scan);
  return HillEstimate{hill_gamma(sorted, k), k, sorted.size()};
}

/// alpha-moment of a standard Pareto with extreme value index gamma:
/// 1 / (1 - alpha * gamma).
inline double moment_factor(double alpha_hat, double gamma_hat) {
  if (!std::isfinite(alpha_hat) || !std::isfinite(gamma_hat)) {
    throw DomainError("moment factor needs finite inputs");
  }
  const double product = alpha_hat * gamma_hat;
  if (product >= 1.0) {
    throw InfiniteMomentError("tail moment is infinite: alpha_hat * gamma_hat = " +
                              std::to_string(product) + " >= 1");
  }
  return 1.0 / (1.0 - product);
}

struct ThresholdRule {
  double c0 = 0.25;
  std::optional<double> fixed;

  static ThresholdRule automatic(double c0 = 0.25) { return ThresholdRule{c0, std::nullopt}; }
  static ThresholdRule fixed_at(double t) { return ThresholdRule{0.25, t}; }

  bool is_auto() const noexcept { return !fixed.has_value(); }

  void validate() const {
    if (!(c0 > 0.0)) throw DomainError("threshold scale c0 must be positive");
    if (fixed && !(*fixed > 0.0)) throw DomainError("fixed threshold must be positive");
  }
};

/// t = c0 * n^(gamma / (1 + 2 min(1, gamma))) in auto mode.
inline double select_threshold(std::size_t n, double gamma_hat, const ThresholdRule& rule) {
  rule.validate();
  if (rule.fixed) return *rule.fixed;
  if (n < 1) throw DomainError("threshold rule needs n >= 1");
  if (!(gamma_hat >= 0.0) || !std::isfinite(gamma_hat)) {
    throw DomainError("threshold rule needs a finite nonnegative gamma_hat");
  }
  const double exponent = gamma_hat / (1.0 + 2.0 * std::min(1.0, gamma_hat));
  return rule.c0 * std::pow(static_cast<double>(n), exponent);
}

}  // namespace nete
