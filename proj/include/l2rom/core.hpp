// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <functional>
#include <initializer_list>
#include <optional>
#include <vector>

#include "l2rom/types.hpp"

namespace l2rom {

/// Point of the parameter domain. One coordinate (s, or a real stationary
/// parameter) or two coordinates (s, xi).
class ParamPoint {
 public:
  static constexpr int kMaxDim = 2;

  ParamPoint() = default;
  explicit ParamPoint(cplx p) : coords_{p, cplx{}}, dim_(1) {}
  ParamPoint(cplx s, cplx xi) : coords_{s, xi}, dim_(2) {}

  int dim() const noexcept { return dim_; }
  cplx operator[](int d) const { return coords_[static_cast<std::size_t>(d)]; }
  ParamPoint conj() const;

 private:
  std::array<cplx, kMaxDim> coords_{};
  int dim_ = 0;
};

/// One signed monomial coeff * prod_d p_d^{e_d}.
struct Monomial {
  double coeff = 1.0;
  std::array<int, ParamPoint::kMaxDim> exponents{0, 0};
};

/// Real-coefficient polynomial in the parameter coordinates. Covers the
/// scalar functions of parameter-separable operators: 1, -1, p, s, xi, s*xi, ...
class ScalarFamily {
 public:
  ScalarFamily() = default;
  ScalarFamily(int arity, std::vector<Monomial> terms);

  static ScalarFamily constant(double c, int arity = 1);
  /// coeff * p_coord
  static ScalarFamily coordinate(int coord, double coeff = 1.0, int arity = 1);
  static ScalarFamily monomial(double coeff, std::array<int, 2> exponents, int arity);

  int arity() const noexcept { return arity_; }
  const std::vector<Monomial>& terms() const noexcept { return terms_; }

  cplx eval(const ParamPoint& p) const;

 private:
  int arity_ = 1;
  std::vector<Monomial> terms_;
};

cplx eval_family(const ScalarFamily& f, const ParamPoint& p);

template <typename Matrix>
struct AffineTerm {
  ScalarFamily family;
  Matrix matrix;
};

enum class RomStructure { generic, lti, lti_dt, kron, stationary };

/// Factors of the Kronecker operator (s E - A) ⊗ (xi Exi - Axi).
struct KronFactors {
  MatR E, A, Exi, Axi;
};

/// Structured reduced model  A(p) x = B(p),  y = C(p) x  with
/// A(p) = sum_i alpha_i(p) A_i etc. All matrices are real.
struct StructuredRom {
  RomStructure structure = RomStructure::generic;
  int n_params = 1;
  int order = 0;
  int n_inputs = 0;
  int n_outputs = 0;
  std::vector<AffineTerm<MatR>> a_terms;
  std::vector<AffineTerm<MatR>> b_terms;
  std::vector<AffineTerm<MatR>> c_terms;
  std::optional<KronFactors> kron;

  /// Throws InvalidArgument when shapes, arities or the Kronecker terms are
  /// inconsistent.
  void validate() const;
  /// Rebuilds the four A-terms from the Kronecker factors.
  void refresh_kron_terms();
};

/// (p E - A) x = B, y = C x.  Continuous or discrete time only changes the tag.
StructuredRom make_lti_rom(const MatR& E, const MatR& A, const MatR& B, const MatR& C,
                           bool discrete_time = false);
/// (A1 + p A2) x = B, y = C x.
StructuredRom make_stationary_rom(const MatR& A1, const MatR& A2, const MatR& B, const MatR& C);
/// [(s E - A) ⊗ (xi Exi - Axi)] x = B, y = C x.
StructuredRom make_kron_rom(const MatR& E, const MatR& A, const MatR& Exi, const MatR& Axi,
                            const MatR& B, const MatR& C);

enum class Block { A, B, C };

/// Parameter-evaluated operator. For block A of a Kronecker rom the product
/// form is used instead of the four-term sum.
MatC assemble_operator(const StructuredRom& rom, const ParamPoint& p, Block block);

/// Four-term parameter-separable sum, ignoring any Kronecker shortcut.
MatC assemble_operator_terms(const StructuredRom& rom, const ParamPoint& p, Block block);

/// Primal (and optionally dual) reduced solution at one parameter point.
struct RomEvaluation {
  MatC state;   ///< r x n_i
  MatC dual;    ///< r x n_o (empty unless requested)
  MatC output;  ///< n_o x n_i
  double rcond = 0.0;
};

/// Reciprocal condition threshold below which a reduced solve is rejected.
inline constexpr double kSingularRcond = 1e-14;

RomEvaluation evaluate_output(const StructuredRom& rom, const ParamPoint& p);
MatC evaluate_dual(const StructuredRom& rom, const ParamPoint& p);
/// Primal, dual and output from one factorization.
RomEvaluation evaluate_primal_dual(const StructuredRom& rom, const ParamPoint& p);

/// Weighted samples {(p_i, Y_i, rho_i)} of a discrete measure.
struct SampleSet {
  int n_params = 1;
  std::vector<ParamPoint> points;
  std::vector<MatC> values;
  std::vector<double> weights;

  std::size_t size() const noexcept { return points.size(); }
  void validate() const;
};

struct ClosureReport {
  bool closed = true;
  std::vector<std::size_t> violations;
};

ClosureReport check_conjugation_closure(const SampleSet& samples, double tol = 1e-12);

/// Black-box full-order map y(p) with optional first partial derivatives.
struct FomEvaluator {
  int n_inputs = 0;
  int n_outputs = 0;
  int n_params = 1;
  std::function<MatC(const ParamPoint&)> evaluate;
  /// One matrix per coordinate; empty when not available.
  std::function<std::vector<MatC>(const ParamPoint&)> partials;

  bool has_partials() const { return static_cast<bool>(partials); }
};

/// Partial derivative with respect to one coordinate, analytic when the
/// evaluator provides it, otherwise a five-point central difference with
/// step 1e-6 * (1 + |p_coord|).
MatC fom_partial(const FomEvaluator& fom, const ParamPoint& p, int coord);

}  // namespace l2rom
