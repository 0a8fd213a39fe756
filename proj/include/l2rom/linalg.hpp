// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>

#include "l2rom/types.hpp"

namespace l2rom {

template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> kron(
    const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(),
                                                            a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b.template cast<Scalar>();
  return out;
}

/// |a - b| / max(|b|, floor)
inline double relative_error(double a, double b, double floor = 1e-300) {
  return std::abs(a - b) / std::max(std::abs(b), floor);
}

template <typename DerivedA, typename DerivedB>
double relative_error(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                      double floor = 1e-300) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

/// Reciprocal condition estimate of an LU factorization that reports 0 for
/// a zero or non-finite pivot, where the plain estimator is unreliable.
template <typename Lu>
double lu_rcond(const Lu& lu) {
  const auto diag = lu.matrixLU().diagonal();
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    const double m = std::abs(diag(i));
    if (!(m > 0.0) || !std::isfinite(m)) return 0.0;
  }
  return lu.rcond();
}

}  // namespace l2rom
