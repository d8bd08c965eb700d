#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

#include "nete/error.hpp"
#include "nete/samplers.hpp"

namespace nete {

/// Row-aligned observations (X, D, Y, U) for n units.
struct ObservationTable {
  Matrix X;  ///< n x d_x covariates
  Vector D;  ///< n treatments in {0, 1}
  Vector Y;  ///< n outcomes
  Matrix U;  ///< n x d_u extreme noise, strictly positive

  Eigen::Index n() const { return D.size(); }
  Eigen::Index d_x() const { return X.cols(); }
  Eigen::Index d_u() const { return U.cols(); }

  void validate() const {
    const Eigen::Index rows = D.size();
    if (X.rows() != rows || Y.size() != rows || U.rows() != rows) {
      throw SchemaError("observation columns have different lengths");
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (D(i) != 0.0 && D(i) != 1.0) {
        throw SchemaError("treatment in row " + std::to_string(i) + " is not 0/1");
      }
    }
    if ((U.array() <= 0.0).any()) throw SchemaError("extreme-noise entries must be strictly positive");
  }

  Vector norms() const { return l1_norms(U); }

  ObservationTable subset(const std::vector<Eigen::Index>& rows) const {
    ObservationTable out;
    const auto m = static_cast<Eigen::Index>(rows.size());
    out.X.resize(m, X.cols());
    out.D.resize(m);
    out.Y.resize(m);
    out.U.resize(m, U.cols());
    for (Eigen::Index r = 0; r < m; ++r) {
      const Eigen::Index src = rows[static_cast<std::size_t>(r)];
      out.X.row(r) = X.row(src);
      out.D(r) = D(src);
      out.Y(r) = Y(src);
      out.U.row(r) = U.row(src);
    }
    return out;
  }

  /// Rows whose l1 norm is strictly above t.
  ObservationTable exceedances(double t) const {
    const Vector nrm = norms();
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < nrm.size(); ++i)
      if (nrm(i) > t) rows.push_back(i);
    return subset(rows);
  }
};

}  // namespace nete
