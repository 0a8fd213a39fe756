// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "l2rom/core.hpp"
#include "l2rom/spectral.hpp"

namespace l2rom {

enum class Family { h2_ct, h2_dt, h2l2, discrete_ls, stationary };

std::string_view family_name(Family f);
/// Accepts the names printed by family_name as well as
/// h2-ct, h2-dt, h2xl2, discrete-ls, stationary (case-insensitive).
Family parse_family(std::string_view name);

/// One block of interpolation conditions.  Residuals are relative to the
/// fom-side magnitude; NaN marks a condition that does not apply to the row.
///
/// For the two-dimensional family, rows with k >= 0 and l >= 0 carry the
/// tangential conditions at (point, point2), rows with l < 0 the summed
/// s-derivative condition for pole k, and rows with k < 0 the summed
/// xi-derivative condition for xi-pole l.
struct CertificateRow {
  int k = -1;
  int l = -1;
  cplx point{};
  cplx point2{};
  double right = 0.0;
  double left = 0.0;
  double hermite = 0.0;
};

struct Certificate {
  Family family = Family::h2_ct;
  std::vector<CertificateRow> rows;
  double tolerance = 0.0;
  bool pass = false;
  /// Discrepancy between two algebraically identical evaluations of the
  /// residuals (only computed for discrete least squares).
  double consistency = 0.0;

  double max_residual() const;
  /// Recomputes `pass` against `tol`.
  void finalize(double tol);
};

inline constexpr double kResidualFloor = 1e-300;

Certificate h2_ct_residuals(const FomEvaluator& fom, const PoleResidue& rom, double tol = 1e-6);
Certificate h2_dt_residuals(const FomEvaluator& fom, const PoleResidue& rom, double tol = 1e-6);
Certificate h2l2_residuals(const FomEvaluator& fom, const PoleResidue2D& rom, double tol = 1e-4);

/// G(s) = sum_i rho_i Y_i / (s - p_i) when `rom` is null, otherwise the same
/// sum over the rom values at the sample points; order 1 differentiates in s.
MatC modified_ls_tf_eval(const SampleSet& data, const PoleResidue* rom, cplx s, int order = 0);

Certificate ls_residuals(const SampleSet& data, const PoleResidue& rom, double tol = 1e-6);

struct Interval {
  double a = 0.0;
  double b = 1.0;
  void validate() const;
};

/// f_sigma(p) = (ln|(p-b)/(p-a)| - ln|(sigma-b)/(sigma-a)|) / (p - sigma),
/// extended continuously to p = sigma; order 1 gives the derivative in p.
double f_sigma_eval(double a, double b, double sigma, double p, int order = 0);

/// ln|(p-b)/(p-a)| Phi0 + sum_i f_{nu_i}(p) Phi_i for a pole-residue form with
/// real poles outside the interval.
MatR modified_output_eval(const PoleResidue& pr, const Interval& interval, double p, int order = 0);

enum class OutputSide { fom, rom };
MatR modified_output_eval(const PoleResidue& fom, const PoleResidue& rom, const Interval& interval,
                          double p, int order, OutputSide which);

Certificate stationary_residuals(const PoleResidue& fom, const PoleResidue& rom,
                                 const Interval& interval, double tol = 1e-6);

}  // namespace l2rom
