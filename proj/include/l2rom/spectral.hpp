// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "l2rom/core.hpp"
#include "l2rom/types.hpp"

namespace l2rom {

/// Diagonalization S^* E T = I, S^* A T = diag(lambda) of a regular pencil.
struct PencilDiag {
  VecC lambda;
  MatC T;
  MatC S;
};

/// Minimum pole separation, relative to the spectral radius.
inline constexpr double kPoleSeparation = 1e-8;

PencilDiag diagonalize_pencil(const MatR& E, const MatR& A);

/// Phi0 + sum_j c_j b_j^* / (p - lambda_j).
///
/// Column j of `left` is c_j (n_o entries) and column j of `right` is b_j
/// (n_i entries).
struct PoleResidue {
  VecC poles;
  MatC left;
  MatC right;
  MatC constant;  ///< n_o x n_i, zero when there is no constant term

  int size() const noexcept { return static_cast<int>(poles.size()); }
  int n_outputs() const noexcept { return static_cast<int>(constant.rows()); }
  int n_inputs() const noexcept { return static_cast<int>(constant.cols()); }
  /// c_j b_j^*
  MatC residue(int j) const { return left.col(j) * right.col(j).adjoint(); }
};

/// sum_{i,j} c_ij b_ij^* / ((s - lambda_i)(xi - pi_j)).  The pair (i, j) is
/// stored in column i * n_xi + j of `left` and `right`.
struct PoleResidue2D {
  VecC s_poles;
  VecC xi_poles;
  MatC left;
  MatC right;

  int n_s() const noexcept { return static_cast<int>(s_poles.size()); }
  int n_xi() const noexcept { return static_cast<int>(xi_poles.size()); }
  int index(int i, int j) const noexcept { return i * n_xi() + j; }
};

PoleResidue pole_residue_lti(const MatR& E, const MatR& A, const MatR& B, const MatR& C);

/// Pole-residue form with constant term of C (A1 + p A2)^{-1} B for a
/// possibly rank-deficient A2.  Poles are -1/d_i for the eigenvalues d_i of
/// V^T A1^{-1} U, where A2 = U V^T is a numerical rank factorization.
PoleResidue pole_residue_affine_singular(const MatR& A1, const MatR& A2, const MatR& B,
                                         const MatR& C);

PoleResidue2D kron_pole_residue(const MatR& E, const MatR& A, const MatR& Exi, const MatR& Axi,
                                const MatR& B, const MatR& C);

/// Pole-residue form of an LTI, discrete-time LTI or stationary rom.
PoleResidue pole_residue(const StructuredRom& rom);
/// Two-dimensional pole-residue form of a Kronecker rom.
PoleResidue2D kron_pole_residue(const StructuredRom& rom);

/// Value (order 0) or first derivative (order 1).  Throws DomainError when p
/// lies within 1e-12 of a pole.
MatC pole_residue_eval(const PoleResidue& pr, cplx p, int order = 0);

enum class Partial { value, ds, dxi };

MatC pole_residue_eval(const PoleResidue2D& pr, cplx s, cplx xi, Partial which = Partial::value);

/// Conjugate-and-sort pairing check: every pole has a conjugate partner with
/// conjugate factors (tolerance relative to the factor norms).
bool pole_residue_is_real(const PoleResidue& pr, double tol = 1e-8);

}  // namespace l2rom
