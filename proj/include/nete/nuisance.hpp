#pragma once

// Nuisance fits: propensity p(x), pseudo-outcome g(x, d, s), and the scaling
// exponent alpha.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nete/error.hpp"
#include "nete/forest.hpp"

namespace nete {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// Propensity

struct LogisticOptions {
  double l2 = 1e-6;            ///< penalty on the slopes, not the intercept
  double grad_tol = 1e-8;      ///< on the gradient of the mean log-likelihood
  std::size_t max_iter = 500;
  double clip_c = 1e-4;
};

struct PropensityModel {
  Vector weights;  ///< [intercept, slopes...]
  double clip_c = 1e-4;
  bool converged = false;
  std::size_t iterations = 0;

  double predict_raw(std::span<const double> x) const {
    if (static_cast<Eigen::Index>(x.size()) + 1 != weights.size()) {
      throw DomainError("propensity covariate length mismatch");
    }
    double z = weights(0);
    for (std::size_t j = 0; j < x.size(); ++j) z += weights(static_cast<Eigen::Index>(j) + 1) * x[j];
    return sigmoid(z);
  }

  /// sigma(w . [1, x]) clipped to [clip_c, 1 - clip_c].
  double predict(std::span<const double> x) const {
    return std::clamp(predict_raw(x), clip_c, 1.0 - clip_c);
  }
};

namespace detail {

inline Matrix with_intercept(const Matrix& x) {
  Matrix design(x.rows(), x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;
  return design;
}

}  // namespace detail

/// Penalized mean log-likelihood
/// (1/n) sum [d log p + (1-d) log(1-p)] - (l2/2) |slopes|^2.
inline double logistic_objective(const Vector& w, const Matrix& x, const Vector& d, double l2) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double z = w(0) + x.row(i).dot(w.tail(w.size() - 1));
    // log sigma(z) = -log1p(exp(-z)), written stably.
    const double log_p = z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
    const double log_q = log_p - z;
    ll += d(i) * log_p + (1.0 - d(i)) * log_q;
  }
  ll /= static_cast<double>(x.rows());
  return ll - 0.5 * l2 * w.tail(w.size() - 1).squaredNorm();
}

inline Vector logistic_gradient(const Vector& w, const Matrix& x, const Vector& d, double l2) {
  const Matrix design = detail::with_intercept(x);
  Vector residual(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) residual(i) = d(i) - sigmoid(design.row(i).dot(w));
  Vector grad = design.transpose() * residual / static_cast<double>(x.rows());
  grad.tail(grad.size() - 1) -= l2 * w.tail(w.size() - 1);
  return grad;
}

/// Logistic regression of D on X by damped Newton ascent.
inline PropensityModel fit_propensity(const Matrix& x, const Vector& d, const LogisticOptions& options = {}) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols() + 1;
  if (d.size() != n) throw DomainError("propensity: X and D lengths differ");
  if (!(options.clip_c > 0.0 && options.clip_c < 0.5)) throw DomainError("clip_c must lie in (0, 1/2)");
  if (n < p) throw InsufficientDataError("propensity: need n >= d_x + 1 rows");
  Eigen::Index treated = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d(i) != 0.0 && d(i) != 1.0) throw DomainError("treatment must be 0/1");
    treated += d(i) == 1.0 ? 1 : 0;
  }
  if (treated == 0 || treated == n) {
    throw DegenerateTreatmentError("treatment column contains a single class");
  }

  const Matrix design = detail::with_intercept(x);
  PropensityModel model;
  model.clip_c = options.clip_c;
  model.weights = Vector::Zero(p);
  const double mean_d = static_cast<double>(treated) / static_cast<double>(n);
  model.weights(0) = std::log(mean_d / (1.0 - mean_d));

  Vector penalty = Vector::Constant(p, options.l2);
  penalty(0) = 0.0;
  double objective = logistic_objective(model.weights, x, d, options.l2);
  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    Vector residual(n);
    Vector curvature(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double prob = sigmoid(design.row(i).dot(model.weights));
      residual(i) = d(i) - prob;
      curvature(i) = prob * (1.0 - prob);
    }
    Vector grad = design.transpose() * residual / static_cast<double>(n);
    grad -= penalty.cwiseProduct(model.weights);
    model.iterations = iter;
    if (grad.norm() < options.grad_tol) {
      model.converged = true;
      return model;
    }
    Matrix hessian = design.transpose() * curvature.asDiagonal() * design / static_cast<double>(n);
    hessian.diagonal() += penalty;
    hessian.diagonal().array() += 1e-12;
    const Vector step = hessian.ldlt().solve(grad);

    double scale = 1.0;
    Vector candidate = model.weights + step;
    double next = logistic_objective(candidate, x, d, options.l2);
    while (next < objective && scale > 1e-10) {
      scale *= 0.5;
      candidate = model.weights + scale * step;
      next = logistic_objective(candidate, x, d, options.l2);
    }
    if (next < objective) break;  // no ascent direction left at machine precision
    model.weights = candidate;
    objective = next;
    model.iterations = iter + 1;
  }
  model.converged = logistic_gradient(model.weights, x, d, options.l2).norm() < options.grad_tol;
  return model;
}

// ---------------------------------------------------------------------------
// Outcome regressions

/// Ordinary least squares with intercept; minimum-norm solution when the
/// design is rank deficient (angle columns sum to one).
class LinearRegression {
 public:
  static LinearRegression fit(const Matrix& features, const Vector& target) {
    if (features.rows() != target.size()) throw DomainError("linear regression length mismatch");
    if (features.rows() < 1) throw InsufficientDataError("linear regression needs data");
    const Matrix design = detail::with_intercept(features);
    LinearRegression model;
    model.coef_ = design.completeOrthogonalDecomposition().solve(target);
    return model;
  }

  double predict(std::span<const double> x) const {
    double value = coef_(0);
    for (std::size_t j = 0; j < x.size(); ++j) value += coef_(static_cast<Eigen::Index>(j) + 1) * x[j];
    return value;
  }

  const Vector& coefficients() const noexcept { return coef_; }

 private:
  Vector coef_;
};

enum class OutcomeKind { linear, random_forest };

inline const char* to_string(OutcomeKind kind) noexcept {
  return kind == OutcomeKind::linear ? "linear" : "random_forest";
}

struct OutcomeOptions {
  OutcomeKind kind = OutcomeKind::random_forest;
  ForestParams forest;
};

/// Regression of a target on the feature vector [x, d, extra], where `extra`
/// is the angle s = u/|u| for the pseudo-outcome model and raw u for the
/// naive doubly robust baseline.
class OutcomeModel {
 public:
  static OutcomeModel fit(const Matrix& x, const Vector& d, const Matrix& extra, const Vector& target,
                          const OutcomeOptions& options) {
    const Eigen::Index n = x.rows();
    if (d.size() != n || extra.rows() != n || target.size() != n) {
      throw DomainError("outcome regression: column lengths differ");
    }
    OutcomeModel model;
    model.d_x_ = static_cast<std::size_t>(x.cols());
    model.d_extra_ = static_cast<std::size_t>(extra.cols());
    model.kind_ = options.kind;
    Matrix features(n, x.cols() + 1 + extra.cols());
    features << x, d, extra;
    if (options.kind == OutcomeKind::linear) {
      model.impl_ = LinearRegression::fit(features, target);
    } else {
      model.impl_ = RandomForest::fit(features, target, options.forest);
    }
    return model;
  }

  double predict(std::span<const double> x, double d, std::span<const double> extra) const {
    if (x.size() != d_x_ || extra.size() != d_extra_) throw DomainError("outcome prediction shape mismatch");
    thread_local std::vector<double> row;
    row.clear();
    row.insert(row.end(), x.begin(), x.end());
    row.push_back(d);
    row.insert(row.end(), extra.begin(), extra.end());
    return std::visit([&](const auto& m) { return m.predict(row); }, impl_);
  }

  OutcomeKind kind() const noexcept { return kind_; }

 private:
  std::size_t d_x_ = 0;
  std::size_t d_extra_ = 0;
  OutcomeKind kind_ = OutcomeKind::linear;
  std::variant<LinearRegression, RandomForest> impl_;
};

/// Pseudo-outcome regression of Y / |U|^alpha on (X, D, S). S rows are l1 angles.
inline OutcomeModel fit_pseudo_outcome(const Matrix& x, const Vector& d, const Matrix& s, const Vector& y_scaled,
                                       const OutcomeOptions& options) {
  if (x.rows() < 10) throw InsufficientDataError("pseudo-outcome regression needs at least 10 rows");
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    if ((s.row(i).array() < 0.0).any() || std::abs(s.row(i).sum() - 1.0) > 1e-9) {
      throw DomainError("angle row " + std::to_string(i) + " is not l1-normalized and nonnegative");
    }
  }
  return OutcomeModel::fit(x, d, s, y_scaled, options);
}

// ---------------------------------------------------------------------------
// Scaling exponent

struct AlphaEstimate {
  double alpha_hat = 0.0;
  double intercept = 0.0;
  std::size_t n_used = 0;
  std::size_t n_dropped = 0;

  /// More than half of the rows had Y = 0 and were dropped.
  bool mostly_dropped() const noexcept { return n_dropped * 2 > n_used + n_dropped; }
};

/// Slope of the least-squares line log|Y| ~ 1 + log|U|. Rows with Y = 0 are dropped.
inline AlphaEstimate estimate_alpha(std::span<const double> y, std::span<const double> u_norms) {
  if (y.size() != u_norms.size()) throw DomainError("estimate_alpha: length mismatch");
  std::vector<double> lx;
  std::vector<double> ly;
  lx.reserve(y.size());
  ly.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(u_norms[i] > 0.0)) throw DomainError("estimate_alpha: norms must be positive");
    if (y[i] == 0.0) continue;
    lx.push_back(std::log(u_norms[i]));
    ly.push_back(std::log(std::abs(y[i])));
  }
  AlphaEstimate est;
  est.n_used = lx.size();
  est.n_dropped = y.size() - lx.size();
  if (est.n_used < 2) throw InsufficientDataError("estimate_alpha: fewer than two usable rows");

  const double m = static_cast<double>(est.n_used);
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw DegenerateRegressorError("estimate_alpha: all norms are identical");
  est.alpha_hat = sxy / sxx;
  est.intercept = my - est.alpha_hat * mx;
  return est;
}

}  // namespace nete
