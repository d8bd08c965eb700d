#pragma once

// Seeded generators for multivariate regularly varying extreme noise.

#include <Eigen/Dense>
#include <cstddef>
#include <string>

#include "nete/error.hpp"
#include "nete/evt.hpp"
#include "nete/rng.hpp"

namespace nete {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// U = A Z with Z having iid Pareto(beta) coordinates.
struct LinearParetoSpec {
  double beta = 2.0;
  Matrix A;  ///< d_u x d_z, nonnegative

  Eigen::Index d_u() const { return A.rows(); }
  Eigen::Index d_z() const { return A.cols(); }

  void validate() const {
    ParetoParams{beta}.validate();
    if (A.rows() < 1 || A.cols() < 1) throw DomainError("mixing matrix must be at least 1x1");
    if ((A.array() < 0.0).any()) throw DomainError("mixing matrix entries must be nonnegative");
  }
};

/// Each coordinate independently 0.5 Pareto(beta) + 0.5 Pareto(beta + 1).
struct MixtureSpec {
  double beta = 2.0;
  Eigen::Index d_u = 1;

  void validate() const {
    ParetoParams{beta}.validate();
    if (d_u < 1) throw DomainError("mixture dimension must be >= 1");
  }
};

/// Inverse-CDF draw; the open uniform keeps the support strictly positive.
inline double sample_pareto(double beta, Rng& rng) {
  return pareto_quantile(rng.uniform_open(), ParetoParams{beta});
}

/// Entries iid uniform on [1, 2], drawn row by row.
inline Matrix sample_matrix_A(Eigen::Index d_u, Eigen::Index d_z, Rng& rng) {
  if (d_u < 1 || d_z < 1) throw DomainError("mixing matrix dimensions must be >= 1");
  Matrix a(d_u, d_z);
  for (Eigen::Index r = 0; r < d_u; ++r)
    for (Eigen::Index c = 0; c < d_z; ++c) a(r, c) = rng.uniform(1.0, 2.0);
  return a;
}

inline Matrix sample_linear_pareto(Eigen::Index n, const LinearParetoSpec& spec, Rng& rng) {
  spec.validate();
  if (n < 0) throw DomainError("sample size must be nonnegative");
  Matrix u(n, spec.d_u());
  Vector z(spec.d_z());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < spec.d_z(); ++j) z(j) = sample_pareto(spec.beta, rng);
    u.row(i) = (spec.A * z).transpose();
  }
  return u;
}

inline Matrix sample_pareto_mixture(Eigen::Index n, const MixtureSpec& spec, Rng& rng) {
  spec.validate();
  if (n < 0) throw DomainError("sample size must be nonnegative");
  Matrix u(n, spec.d_u);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < spec.d_u; ++j) {
      const double beta = rng.bernoulli(0.5) ? spec.beta : spec.beta + 1.0;
      u(i, j) = sample_pareto(beta, rng);
    }
  }
  return u;
}

/// Row-wise l1 norms.
inline Vector l1_norms(const Matrix& u) { return u.array().abs().rowwise().sum().matrix(); }

/// Row-wise angles u / ||u||_1.
inline Matrix l1_angles(const Matrix& u) {
  const Vector norms = l1_norms(u);
  Matrix s(u.rows(), u.cols());
  for (Eigen::Index i = 0; i < u.rows(); ++i) s.row(i) = u.row(i) / norms(i);
  return s;
}

}  // namespace nete
