#pragma once

#include <Eigen/Core>

#include <cmath>

#include "pathhedge/errors.hpp"

namespace pathhedge {

/// Thomas algorithm for a tridiagonal system. sub(0) and sup(n-1) are ignored.
/// rhs is overwritten with the solution; scratch must have size n.
template <typename Scalar>
void solve_tridiagonal(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& sub,
                       const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& diag,
                       const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& sup,
                       Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& rhs,
                       Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& scratch) {
  const Eigen::Index n = diag.size();
  scratch.resize(n);
  Scalar pivot = diag(0);
  if (pivot == Scalar(0)) throw ValidationError("tridiagonal solve: zero pivot");
  rhs(0) /= pivot;
  for (Eigen::Index i = 1; i < n; ++i) {
    scratch(i) = sup(i - 1) / pivot;
    pivot = diag(i) - sub(i) * scratch(i);
    if (pivot == Scalar(0) || !std::isfinite(pivot)) throw ValidationError("tridiagonal solve: zero pivot");
    rhs(i) = (rhs(i) - sub(i) * rhs(i - 1)) / pivot;
  }
  for (Eigen::Index i = n - 2; i >= 0; --i) rhs(i) -= scratch(i + 1) * rhs(i + 1);
}

}  // namespace pathhedge
