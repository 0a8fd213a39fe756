// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Sparse>

#include "l2rom/core.hpp"
#include "l2rom/spectral.hpp"

namespace l2rom {

using SpMat = Eigen::SparseMatrix<double>;
using SpMatC = Eigen::SparseMatrix<cplx>;

enum class TimeDomain { continuous, discrete };

/// E x' = A x + B u, y = C x (or the difference-equation analogue), with
/// transfer function H(s) = C (s E - A)^{-1} B.
struct AffineLtiFom {
  SpMat E, A;
  MatR B, C;
  TimeDomain time = TimeDomain::continuous;

  int order() const { return static_cast<int>(A.rows()); }
  int n_inputs() const { return static_cast<int>(B.cols()); }
  int n_outputs() const { return static_cast<int>(C.rows()); }

  /// Shapes, invertible E, and stability of the spectrum (dense scan, so
  /// only practical for moderate n).
  void validate(bool check_spectrum = true) const;

  MatC transfer(cplx s) const;
  /// H'(s) = -C (sE - A)^{-1} E (sE - A)^{-1} B
  MatC transfer_derivative(cplx s) const;
  /// (sE - A)^{-1} B, and (sE - A)^{-*} C^* when `adjoint` is set.
  MatC resolvent_apply(cplx s, const MatC& rhs, bool adjoint = false) const;

  FomEvaluator evaluator() const;
};

/// (A1 + p A2) x = B, y = C x on the parameter interval [a, b].
struct AffineStationaryFom {
  SpMat A1, A2;
  MatR B, C;
  double a = 0.0;
  double b = 1.0;

  int order() const { return static_cast<int>(A1.rows()); }
  int n_inputs() const { return static_cast<int>(B.cols()); }
  int n_outputs() const { return static_cast<int>(C.rows()); }

  /// Shapes, a < b, and invertibility of A1 + p A2 on a 100-point grid.
  void validate() const;

  MatC output(cplx p) const;
  MatC output_derivative(cplx p) const;
  /// (A1 + p A2)^{-1} B for real p.
  MatR state(double p) const;

  /// Pole-residue form with constant term of the output map.
  PoleResidue pole_residue() const;

  FomEvaluator evaluator() const;
};

/// H(s, xi) = sum_ij c_ij b_ij^* / ((s - nu_i)(xi - pi_j)).
struct KronParametricFom {
  PoleResidue2D terms;

  int n_inputs() const { return static_cast<int>(terms.right.rows()); }
  int n_outputs() const { return static_cast<int>(terms.left.rows()); }
  void validate() const;
  FomEvaluator evaluator() const;
};

AffineLtiFom make_penzl();

/// Q1 finite elements on the unit square with the diffusion coefficient
/// z1 + p (1 - z1), unit load, and output C = B^T.  Boundary nodes are kept
/// as unknowns with identity rows in A1 and zero rows in A2.
AffineStationaryFom make_poisson(int cells_per_side = 32);

AffineLtiFom make_random_stable(int n, int n_inputs, int n_outputs, std::uint64_t seed,
                                TimeDomain time = TimeDomain::continuous);

KronParametricFom make_kron_parametric(int n_s_terms, int n_xi_terms, int n_inputs,
                                       int n_outputs, std::uint64_t seed);

/// Nodes and weights of the n-point Gauss-Legendre rule on [a, b].
void gauss_legendre(int n, double a, double b, VecR& nodes, VecR& weights);

/// Evaluates the fom at i*omega_k and appends the conjugate samples.
SampleSet sample_frequency_response(const FomEvaluator& fom, const std::vector<double>& freqs,
                                    const std::vector<double>& weights);
SampleSet sample_frequency_response(const AffineLtiFom& fom, const std::vector<double>& freqs,
                                    const std::vector<double>& weights);

/// Gauss-Legendre samples of the output on the fom interval.
SampleSet sample_stationary(const AffineStationaryFom& fom, int nodes);

/// Quadrature of (1/2pi) int_R f(i w) dw with w = scale * tan(theta) and the
/// midpoint rule in theta.  Closed under conjugation.
void imaginary_axis_rule(int n, double scale, std::vector<cplx>& points,
                         std::vector<double>& weights);
/// Quadrature of (1/2pi) int_0^{2pi} f(e^{i theta}) d theta by the midpoint rule.
void unit_circle_rule(int n, std::vector<cplx>& points, std::vector<double>& weights);

SampleSet sample_points(const FomEvaluator& fom, const std::vector<ParamPoint>& points,
                        const std::vector<double>& weights);
SampleSet sample_imaginary_axis(const FomEvaluator& fom, int n, double scale);
SampleSet sample_unit_circle(const FomEvaluator& fom, int n);
/// Tensor product of an imaginary-axis rule in s and a unit-circle rule in xi.
SampleSet sample_product(const FomEvaluator& fom, int n_s, double s_scale, int n_xi);

/// n log-spaced values from lo to hi inclusive.
std::vector<double> logspace(double lo, double hi, int n);

}  // namespace l2rom
