#pragma once

// Synthetic and semi-synthetic data generating processes with their
// ground-truth NETE values.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nete/error.hpp"
#include "nete/evt.hpp"
#include "nete/rng.hpp"
#include "nete/samplers.hpp"
#include "nete/table.hpp"

namespace nete {

/// theta = 1 / (1 - alpha / beta) = beta / (beta - alpha).
inline double ground_truth_nete(double alpha, double beta) {
  if (!(alpha >= 0.0)) throw DomainError("ground truth needs alpha >= 0");
  if (!(alpha < beta)) {
    throw InfiniteMomentError("ground truth needs alpha < beta (got alpha=" + std::to_string(alpha) +
                              ", beta=" + std::to_string(beta) + ")");
  }
  return 1.0 / (1.0 - alpha / beta);
}

enum class NoiseKind { linear_pareto, mixture };

inline const char* to_string(NoiseKind k) noexcept {
  return k == NoiseKind::linear_pareto ? "linear_pareto" : "mixture";
}

inline NoiseKind parse_noise_kind(std::string_view s) {
  if (s == "linear_pareto" || s == "linear-pareto" || s == "linear") return NoiseKind::linear_pareto;
  if (s == "mixture") return NoiseKind::mixture;
  throw DomainError("unknown noise kind '" + std::string(s) + "'");
}

/// How the vector U/|U| enters the scalar outcome formula
/// Y = |U|^a (D + <angle term> + eps) + |U|^(a/2).
enum class AngleTerm {
  sum,    ///< sum of the l1 angle, identically 1
  first,  ///< first component
  mean,   ///< mean component
};

inline AngleTerm parse_angle_term(std::string_view s) {
  if (s == "sum") return AngleTerm::sum;
  if (s == "first") return AngleTerm::first;
  if (s == "mean") return AngleTerm::mean;
  throw DomainError("unknown angle term '" + std::string(s) + "'");
}

inline const char* to_string(AngleTerm a) noexcept {
  switch (a) {
    case AngleTerm::sum: return "sum";
    case AngleTerm::first: return "first";
    case AngleTerm::mean: return "mean";
  }
  return "sum";
}

struct SyntheticConfig {
  double alpha = 1.0;
  double beta = 2.5;
  Eigen::Index d_z = 30;
  Eigen::Index d_u = 5;
  Eigen::Index d_x = 5;
  NoiseKind noise = NoiseKind::linear_pareto;
  Eigen::Index n = 1000;
  AngleTerm angle_term = AngleTerm::sum;
  std::optional<Matrix> A;  ///< fixed mixing matrix; drawn from the generator when empty

  void validate() const {
    if (!(alpha >= 0.0)) throw DomainError("alpha must be >= 0");
    if (!(beta > alpha)) throw DomainError("beta must exceed alpha");
    if (d_x < 1 || d_u < 1 || d_z < 1) throw DomainError("dimensions must be >= 1");
    if (n < 0) throw DomainError("n must be >= 0");
    if (A && (A->rows() != d_u || A->cols() != d_z)) throw DomainError("fixed mixing matrix has wrong shape");
  }
};

struct SyntheticDraw {
  ObservationTable table;
  double ground_truth = 1.0;
};

/// X ~ Unif[0,1]^d_x, b ~ N(0, I), D ~ Ber(1/(1+exp(-x.b))),
/// Y = |U|^a (D + angle + eps) + |U|^(a/2), eps ~ Unif(-1, 1).
inline SyntheticDraw generate_synthetic(const SyntheticConfig& cfg, Rng& rng) {
  cfg.validate();
  Vector b(cfg.d_x);
  for (Eigen::Index j = 0; j < cfg.d_x; ++j) b(j) = rng.normal();

  Matrix u;
  if (cfg.noise == NoiseKind::linear_pareto) {
    LinearParetoSpec spec{cfg.beta, cfg.A ? *cfg.A : sample_matrix_A(cfg.d_u, cfg.d_z, rng)};
    u = sample_linear_pareto(cfg.n, spec, rng);
  } else {
    u = sample_pareto_mixture(cfg.n, MixtureSpec{cfg.beta, cfg.d_u}, rng);
  }

  SyntheticDraw draw;
  ObservationTable& t = draw.table;
  t.U = std::move(u);
  t.X.resize(cfg.n, cfg.d_x);
  t.D.resize(cfg.n);
  t.Y.resize(cfg.n);
  const Vector norms = l1_norms(t.U);
  for (Eigen::Index i = 0; i < cfg.n; ++i) {
    for (Eigen::Index j = 0; j < cfg.d_x; ++j) t.X(i, j) = rng.uniform();
    const double p = 1.0 / (1.0 + std::exp(-t.X.row(i).dot(b)));
    t.D(i) = rng.bernoulli(p) ? 1.0 : 0.0;
    const double eps = rng.uniform(-1.0, 1.0);
    double angle = 1.0;
    if (cfg.angle_term == AngleTerm::first) angle = t.U(i, 0) / norms(i);
    if (cfg.angle_term == AngleTerm::mean) angle = 1.0 / static_cast<double>(cfg.d_u);
    t.Y(i) = std::pow(norms(i), cfg.alpha) * (t.D(i) + angle + eps) + std::pow(norms(i), cfg.alpha / 2.0);
  }
  draw.ground_truth = ground_truth_nete(cfg.alpha, cfg.beta);
  return draw;
}

// ---------------------------------------------------------------------------
// Semi-synthetic

/// Linear interpolation between order statistics: position h = (n-1) q.
inline double empirical_quantile(std::span<const double> values, double q) {
  if (values.empty()) throw InsufficientDataError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile level must lie in [0,1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Per column: shift to min 1, then divide by the shifted column's 10% quantile.
inline Matrix normalize_extremes(const Matrix& raw, double level = 0.1) {
  Matrix out(raw.rows(), raw.cols());
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    const double lo = raw.col(c).minCoeff();
    const double hi = raw.col(c).maxCoeff();
    if (!(hi > lo)) throw DegenerateColumnError("column " + std::to_string(c) + " is constant");
    const Vector shifted = raw.col(c).array() - lo + 1.0;
    const double q = empirical_quantile(std::span<const double>(shifted.data(), shifted.size()), level);
    out.col(c) = shifted / q;
  }
  return out;
}

struct SemiSynConfig {
  double alpha1 = 2.0;
  double alpha2 = 2.0;
  Eigen::Index train_size = 1000;
  bool random_split = false;  ///< default: first train_size rows train, remainder test

  void validate(Eigen::Index total_rows) const {
    if (!(alpha1 >= 0.0 && alpha2 >= 0.0)) throw DomainError("semi-synthetic exponents must be >= 0");
    if (train_size < 1 || train_size >= total_rows) {
      throw DomainError("train_size must lie in [1, " + std::to_string(total_rows) + ")");
    }
  }
};

/// X ~ Unif(0,1), b ~ N(0,1), D ~ Ber(1/(1+exp(-x b))),
/// Y = (1 - X + D) W^a1 S^a2 + N(0,1), with (W, S) the two columns of u_norm.
inline ObservationTable generate_semi_synthetic(const Matrix& u_norm, const SemiSynConfig& cfg, Rng& rng) {
  if (u_norm.cols() != 2) throw SchemaError("semi-synthetic noise must have two columns (wave, surge)");
  if ((u_norm.array() <= 0.0).any()) throw DomainError("semi-synthetic noise must be strictly positive");
  const Eigen::Index n = u_norm.rows();
  const double b = rng.normal();
  ObservationTable t;
  t.U = u_norm;
  t.X.resize(n, 1);
  t.D.resize(n);
  t.Y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = rng.uniform();
    t.X(i, 0) = x;
    t.D(i) = rng.bernoulli(1.0 / (1.0 + std::exp(-x * b))) ? 1.0 : 0.0;
    const double scale = std::pow(u_norm(i, 0), cfg.alpha1) * std::pow(u_norm(i, 1), cfg.alpha2);
    t.Y(i) = (1.0 - x + t.D(i)) * scale + rng.normal();
  }
  return t;
}

struct TestSetEstimate {
  double theta = 0.0;
  double spectral_mean = 0.0;
  double gamma_hat = 0.0;
  std::size_t k = 0;
  double threshold_t = 0.0;
  std::size_t n_tail = 0;
};

/// Surrogate ground truth from held-out noise:
///   mean[W^a1 S^a2 / |U|^(a1+a2) | |U| > t] / (1 - (a1 + a2) gamma_hat).
inline TestSetEstimate test_set_estimate(const ObservationTable& test, double alpha1, double alpha2,
                                         const AdaptiveHillOptions& hill = {},
                                         const ThresholdRule& rule = ThresholdRule::automatic()) {
  if (test.d_u() != 2) throw SchemaError("test-set estimate needs two noise columns");
  const Vector nrm = test.norms();
  const HillEstimate h = adaptive_hill(std::span<const double>(nrm.data(), nrm.size()), hill);
  TestSetEstimate out;
  out.gamma_hat = h.gamma_hat;
  out.k = h.k;
  out.threshold_t = select_threshold(static_cast<std::size_t>(test.n()), h.gamma_hat, rule);
  const double total = alpha1 + alpha2;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < test.n(); ++i) {
    if (!(nrm(i) > out.threshold_t)) continue;
    sum += std::pow(test.U(i, 0), alpha1) * std::pow(test.U(i, 1), alpha2) / std::pow(nrm(i), total);
    ++out.n_tail;
  }
  if (out.n_tail == 0) throw EmptyTailError("no test-set observation exceeds the threshold");
  out.spectral_mean = sum / static_cast<double>(out.n_tail);
  out.theta = out.spectral_mean * moment_factor(total, h.gamma_hat);
  return out;
}

}  // namespace nete
