#pragma once

#include <Eigen/Core>

#include <cassert>

namespace nonuniq {

/// Thomas algorithm for sub/main/super diagonals (sub[0] and super[n-1] unused).
/// Stable for diagonally dominant systems, which is all the heat solver produces.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> solve_tridiagonal(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& sub,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& diag,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& super,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& rhs) {
  const Eigen::Index n = diag.size();
  assert(sub.size() == n && super.size() == n && rhs.size() == n);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> c(n), d(n), x(n);
  c[0] = super[0] / diag[0];
  d[0] = rhs[0] / diag[0];
  for (Eigen::Index i = 1; i < n; ++i) {
    const Scalar m = diag[i] - sub[i] * c[i - 1];
    c[i] = i + 1 < n ? super[i] / m : Scalar(0);
    d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
  }
  x[n - 1] = d[n - 1];
  for (Eigen::Index i = n - 2; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

}  // namespace nonuniq
