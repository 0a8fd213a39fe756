// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "l2rom/types.hpp"

namespace l2rom::testing {

/// Adaptive Gauss-Kronrod integral of a complex scalar function over [lo, hi].
template <typename F>
cplx integrate(F f, double lo, double hi, double tol = 1e-12, unsigned depth = 25) {
  using boost::math::quadrature::gauss_kronrod;
  const double re = gauss_kronrod<double, 61>::integrate(
      [&](double t) { return f(t).real(); }, lo, hi, depth, tol);
  const double im = gauss_kronrod<double, 61>::integrate(
      [&](double t) { return f(t).imag(); }, lo, hi, depth, tol);
  return {re, im};
}

/// (1/2pi) int_{-limit}^{limit} f(i w) dw, split into a central piece and
/// geometrically graded tails so the adaptive rule resolves every scale.
template <typename F>
cplx axis_integral(F f, double limit = 1e6) {
  cplx total = integrate([&](double w) { return f(cplx{0.0, w}); }, -1.0, 1.0);
  for (double lo = 1.0; lo < limit; lo *= 10.0) {
    const double hi = std::min(lo * 10.0, limit);
    total += integrate([&](double w) { return f(cplx{0.0, w}); }, lo, hi);
    total += integrate([&](double w) { return f(cplx{0.0, w}); }, -hi, -lo);
  }
  return total / (2.0 * std::numbers::pi);
}

/// (1/2pi) int_0^{2pi} f(e^{i theta}) d theta.
template <typename F>
cplx circle_integral(F f) {
  return integrate([&](double t) { return f(std::polar(1.0, t)); }, 0.0, 2.0 * std::numbers::pi) /
         (2.0 * std::numbers::pi);
}

}  // namespace l2rom::testing
