// SPDX-License-Identifier: Apache-2.0
#include "l2rom/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "l2rom/linalg.hpp"

namespace l2rom {
namespace {

constexpr double kEigenbasisRcond = 1e-12;

void check_square(const MatR& m, const char* name) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw InvalidArgument(std::string(name) + " must be square and non-empty");
}

void check_separation(const VecC& lambda) {
  double radius = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) radius = std::max(radius, std::abs(lambda(i)));
  const double floor = kPoleSeparation * std::max(radius, std::numeric_limits<double>::min());
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    for (Eigen::Index j = i + 1; j < lambda.size(); ++j)
      if (std::abs(lambda(i) - lambda(j)) < floor)
        throw NotDiagonalizable("eigenvalues " + std::to_string(i) + " and " + std::to_string(j) +
                                " coincide within the separation tolerance");
}

double inverse_condition(const MatC& T) {
  Eigen::BDCSVD<MatC> svd(T);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0.0;
  return sv(sv.size() - 1) / sv(0);
}

// Right eigenvectors of M with unit columns; conjugate eigenvalue pairs get
// conjugate eigenvectors.  Returns true when M was treated as symmetric, in
// which case T is orthogonal.
bool eigen_decompose(const MatR& M, VecC& lambda, MatC& T) {
  const bool symmetric = (M - M.transpose()).norm() <= 1e-14 * M.norm();
  if (symmetric) {
    Eigen::SelfAdjointEigenSolver<MatR> es(0.5 * (M + M.transpose()));
    if (es.info() != Eigen::Success) throw NotDiagonalizable("symmetric eigensolver failed");
    lambda = es.eigenvalues().cast<cplx>();
    T = es.eigenvectors().cast<cplx>();
    return true;
  }
  Eigen::EigenSolver<MatR> es(M);
  if (es.info() != Eigen::Success) throw NotDiagonalizable("eigensolver failed to converge");
  lambda = es.eigenvalues();
  T = es.eigenvectors();
  return false;
}

}  // namespace

PencilDiag diagonalize_pencil(const MatR& E, const MatR& A) {
  check_square(E, "E");
  check_square(A, "A");
  if (E.rows() != A.rows()) throw InvalidArgument("pencil matrices differ in size");
  Eigen::PartialPivLU<MatR> lu(E);
  const double rc = lu_rcond(lu);
  if (!(rc >= kSingularRcond)) throw SingularOperator("E is singular", rc);

  PencilDiag d;
  const bool orthogonal = eigen_decompose(lu.solve(A), d.lambda, d.T);
  check_separation(d.lambda);
  if (!orthogonal && inverse_condition(d.T) < kEigenbasisRcond)
    throw NotDiagonalizable("eigenvector basis is numerically singular (defective pencil)");
  // S^* = (E T)^{-1}
  const MatC ET = E.cast<cplx>() * d.T;
  d.S = ET.partialPivLu().inverse().adjoint();
  return d;
}

PoleResidue pole_residue_lti(const MatR& E, const MatR& A, const MatR& B, const MatR& C) {
  if (B.rows() != A.rows() || C.cols() != A.rows())
    throw InvalidArgument("B or C does not match the pencil size");
  const PencilDiag d = diagonalize_pencil(E, A);
  PoleResidue pr;
  pr.poles = d.lambda;
  pr.left = C.cast<cplx>() * d.T;
  pr.right = (d.S.adjoint() * B.cast<cplx>()).adjoint();
  pr.constant = MatC::Zero(C.rows(), B.cols());
  return pr;
}

PoleResidue pole_residue_affine_singular(const MatR& A1, const MatR& A2, const MatR& B,
                                         const MatR& C) {
  check_square(A1, "A1");
  check_square(A2, "A2");
  const Eigen::Index n = A1.rows();
  if (A2.rows() != n || B.rows() != n || C.cols() != n)
    throw InvalidArgument("affine operator blocks differ in size");

  Eigen::PartialPivLU<MatR> lu1(A1);
  const double rc = lu_rcond(lu1);
  if (!(rc >= kSingularRcond)) throw SingularOperator("A1 is singular", rc);

  // Rank factorization A2 = U V^T.
  MatR U, V;
  const double eps = std::numeric_limits<double>::epsilon();
  const bool symmetric = (A2 - A2.transpose()).norm() <= 1e-14 * A2.norm();
  bool semidefinite = false;
  if (symmetric) {
    Eigen::SelfAdjointEigenSolver<MatR> es(0.5 * (A2 + A2.transpose()));
    const VecR& w = es.eigenvalues();
    const double wmax = w.cwiseAbs().maxCoeff();
    const double thresh = static_cast<double>(n) * eps * wmax;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::abs(w(i)) > thresh) keep.push_back(i);
    const auto k = static_cast<Eigen::Index>(keep.size());
    semidefinite = w.minCoeff() >= -thresh;
    U.resize(n, k);
    V.resize(n, k);
    for (Eigen::Index c = 0; c < k; ++c) {
      const double root = std::sqrt(std::abs(w(keep[c])));
      V.col(c) = es.eigenvectors().col(keep[c]) * root;
      U.col(c) = V.col(c) * (w(keep[c]) < 0.0 ? -1.0 : 1.0);
    }
  } else {
    Eigen::BDCSVD<MatR> svd(A2, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VecR& sv = svd.singularValues();
    const double thresh = static_cast<double>(n) * eps * (sv.size() ? sv(0) : 0.0);
    Eigen::Index k = 0;
    while (k < sv.size() && sv(k) > thresh) ++k;
    U = svd.matrixU().leftCols(k) * sv.head(k).cwiseSqrt().asDiagonal();
    V = svd.matrixV().leftCols(k) * sv.head(k).cwiseSqrt().asDiagonal();
  }

  PoleResidue pr;
  const MatR A1invB = lu1.solve(B);
  pr.constant = (C * A1invB).cast<cplx>();
  if (U.cols() == 0) {
    pr.poles.resize(0);
    pr.left.resize(C.rows(), 0);
    pr.right.resize(B.cols(), 0);
    return pr;
  }

  const MatR A1invU = lu1.solve(U);
  MatR M = V.transpose() * A1invU;
  // U = V and A1 = A1^T make the coupling matrix symmetric up to rounding.
  if (semidefinite && (A1 - A1.transpose()).norm() <= 1e-14 * A1.norm())
    M = (0.5 * (M + M.transpose())).eval();
  const MatR CU = C * A1invU;
  const MatR BV = V.transpose() * A1invB;

  VecC dvals;
  MatC T;
  const bool orthogonal = eigen_decompose(M, dvals, T);
  const double mnorm = M.norm();
  for (Eigen::Index i = 0; i < dvals.size(); ++i)
    if (std::abs(dvals(i)) <= 1e3 * eps * mnorm)
      throw DomainError("zero eigenvalue in the low-rank coupling (pole at infinity)");
  if (!orthogonal && inverse_condition(T) < kEigenbasisRcond)
    throw NotDiagonalizable("low-rank coupling matrix is defective");

  Eigen::PartialPivLU<MatC> luT(T);
  const MatC TinvBV = luT.solve(BV.cast<cplx>());
  const MatC CUT = CU.cast<cplx>() * T;
  // C_U M^{-1} B_V = sum_i (C_U T e_i)(e_i^T T^{-1} B_V) / d_i
  MatC coupling = MatC::Zero(C.rows(), B.cols());
  for (Eigen::Index i = 0; i < dvals.size(); ++i)
    coupling += CUT.col(i) * TinvBV.row(i) / dvals(i);
  pr.constant -= coupling;
  // With A2 of full rank the constant term vanishes identically.
  if (U.cols() == n) pr.constant.setZero();

  pr.poles = (-dvals.cwiseInverse()).eval();
  pr.left = CUT * dvals.cwiseInverse().asDiagonal();
  pr.right = (dvals.cwiseInverse().asDiagonal() * TinvBV).adjoint();
  return pr;
}

PoleResidue2D kron_pole_residue(const MatR& E, const MatR& A, const MatR& Exi, const MatR& Axi,
                                const MatR& B, const MatR& C) {
  const Eigen::Index r = E.rows() * Exi.rows();
  if (B.rows() != r || C.cols() != r)
    throw InvalidArgument("B or C does not match the Kronecker order");
  const PencilDiag ds = diagonalize_pencil(E, A);
  const PencilDiag dx = diagonalize_pencil(Exi, Axi);
  PoleResidue2D pr;
  pr.s_poles = ds.lambda;
  pr.xi_poles = dx.lambda;
  pr.left = C.cast<cplx>() * kron(ds.T, dx.T);
  pr.right = (kron(ds.S, dx.S).adjoint() * B.cast<cplx>()).adjoint();
  return pr;
}

namespace {

const MatR& constant_term(const std::vector<AffineTerm<MatR>>& terms, const char* name) {
  if (terms.size() != 1)
    throw InvalidArgument(std::string("pole-residue form needs a single constant ") + name +
                          " term");
  return terms.front().matrix;
}

}  // namespace

PoleResidue pole_residue(const StructuredRom& rom) {
  const MatR& B = constant_term(rom.b_terms, "B");
  const MatR& C = constant_term(rom.c_terms, "C");
  switch (rom.structure) {
    case RomStructure::lti:
    case RomStructure::lti_dt:
      return pole_residue_lti(rom.a_terms.at(0).matrix, rom.a_terms.at(1).matrix, B, C);
    case RomStructure::stationary: {
      const MatR& A1 = rom.a_terms.at(0).matrix;
      const MatR& A2 = rom.a_terms.at(1).matrix;
      Eigen::PartialPivLU<MatR> lu(A2);
      if (lu_rcond(lu) >= 1e-10) return pole_residue_lti(A2, -A1, B, C);
      return pole_residue_affine_singular(A1, A2, B, C);
    }
    default:
      throw InvalidArgument("rom structure has no one-dimensional pole-residue form");
  }
}

PoleResidue2D kron_pole_residue(const StructuredRom& rom) {
  if (!rom.kron) throw InvalidArgument("rom carries no Kronecker factors");
  const auto& k = *rom.kron;
  return kron_pole_residue(k.E, k.A, k.Exi, k.Axi, constant_term(rom.b_terms, "B"),
                           constant_term(rom.c_terms, "C"));
}

namespace {

cplx checked_inverse(cplx p, cplx pole) {
  const cplx d = p - pole;
  if (std::abs(d) <= 1e-12 * (1.0 + std::abs(pole)))
    throw DomainError("evaluation point coincides with a pole");
  return 1.0 / d;
}

}  // namespace

MatC pole_residue_eval(const PoleResidue& pr, cplx p, int order) {
  if (order != 0 && order != 1) throw InvalidArgument("derivative order must be 0 or 1");
  MatC out = order == 0 ? pr.constant : MatC::Zero(pr.constant.rows(), pr.constant.cols());
  for (int j = 0; j < pr.size(); ++j) {
    const cplx w = checked_inverse(p, pr.poles(j));
    out += (order == 0 ? w : -w * w) * pr.left.col(j) * pr.right.col(j).adjoint();
  }
  return out;
}

MatC pole_residue_eval(const PoleResidue2D& pr, cplx s, cplx xi, Partial which) {
  MatC out = MatC::Zero(pr.left.rows(), pr.right.rows());
  for (int i = 0; i < pr.n_s(); ++i) {
    const cplx ws = checked_inverse(s, pr.s_poles(i));
    for (int j = 0; j < pr.n_xi(); ++j) {
      const cplx wx = checked_inverse(xi, pr.xi_poles(j));
      cplx w = ws * wx;
      if (which == Partial::ds) w *= -ws;
      if (which == Partial::dxi) w *= -wx;
      const int c = pr.index(i, j);
      out += w * pr.left.col(c) * pr.right.col(c).adjoint();
    }
  }
  return out;
}

bool pole_residue_is_real(const PoleResidue& pr, double tol) {
  const double scale = 1.0 + pr.poles.cwiseAbs().maxCoeff();
  for (int j = 0; j < pr.size(); ++j) {
    const MatC target = pr.residue(j).conjugate();
    bool found = false;
    for (int k = 0; k < pr.size() && !found; ++k) {
      if (std::abs(pr.poles(k) - std::conj(pr.poles(j))) > tol * scale) continue;
      found = (pr.residue(k) - target).norm() <= tol * std::max(target.norm(), 1e-300);
    }
    if (!found) return false;
  }
  return true;
}

}  // namespace l2rom
