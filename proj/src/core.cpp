// SPDX-License-Identifier: Apache-2.0
#include "l2rom/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "l2rom/linalg.hpp"

namespace l2rom {

ParamPoint ParamPoint::conj() const {
  ParamPoint out = *this;
  for (auto& c : out.coords_) c = std::conj(c);
  return out;
}

ScalarFamily::ScalarFamily(int arity, std::vector<Monomial> terms)
    : arity_(arity), terms_(std::move(terms)) {
  if (arity_ < 1 || arity_ > ParamPoint::kMaxDim)
    throw InvalidArgument("scalar family arity must be 1 or 2");
  for (const auto& t : terms_) {
    for (int d = 0; d < ParamPoint::kMaxDim; ++d) {
      if (t.exponents[d] < 0) throw InvalidArgument("negative exponent in scalar family");
      if (d >= arity_ && t.exponents[d] != 0)
        throw InvalidArgument("exponent on a coordinate beyond the family arity");
    }
  }
}

ScalarFamily ScalarFamily::constant(double c, int arity) {
  return ScalarFamily(arity, {Monomial{c, {0, 0}}});
}

ScalarFamily ScalarFamily::coordinate(int coord, double coeff, int arity) {
  Monomial m{coeff, {0, 0}};
  m.exponents.at(static_cast<std::size_t>(coord)) = 1;
  return ScalarFamily(arity, {m});
}

ScalarFamily ScalarFamily::monomial(double coeff, std::array<int, 2> exponents, int arity) {
  return ScalarFamily(arity, {Monomial{coeff, exponents}});
}

cplx ScalarFamily::eval(const ParamPoint& p) const {
  if (p.dim() != arity_)
    throw InvalidArgument("parameter point has " + std::to_string(p.dim()) +
                          " coordinates, family expects " + std::to_string(arity_));
  cplx sum{0.0, 0.0};
  for (const auto& t : terms_) {
    cplx v{t.coeff, 0.0};
    for (int d = 0; d < arity_; ++d)
      for (int e = 0; e < t.exponents[d]; ++e) v *= p[d];
    sum += v;
  }
  return sum;
}

cplx eval_family(const ScalarFamily& f, const ParamPoint& p) { return f.eval(p); }

namespace {

template <typename Terms>
void check_terms(const Terms& terms, Eigen::Index rows, Eigen::Index cols, int arity,
                 const char* name) {
  if (terms.empty()) throw InvalidArgument(std::string("rom has no ") + name + " terms");
  for (const auto& t : terms) {
    if (t.matrix.rows() != rows || t.matrix.cols() != cols)
      throw InvalidArgument(std::string("rom ") + name + " term has shape " +
                            std::to_string(t.matrix.rows()) + "x" + std::to_string(t.matrix.cols()) +
                            ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
    if (t.family.arity() != arity)
      throw InvalidArgument(std::string("rom ") + name + " term family arity mismatch");
    if (!t.matrix.allFinite())
      throw InvalidArgument(std::string("rom ") + name + " term has non-finite entries");
  }
}

std::array<MatR, 4> kron_terms(const KronFactors& k) {
  return {kron(k.E, k.Exi), kron(k.E, k.Axi), kron(k.A, k.Exi), kron(k.A, k.Axi)};
}

}  // namespace

void StructuredRom::validate() const {
  if (order < 1 || n_inputs < 1 || n_outputs < 1)
    throw InvalidArgument("rom dimensions must be positive");
  if (n_params < 1 || n_params > ParamPoint::kMaxDim)
    throw InvalidArgument("rom must have one or two parameters");
  check_terms(a_terms, order, order, n_params, "A");
  check_terms(b_terms, order, n_inputs, n_params, "B");
  check_terms(c_terms, n_outputs, order, n_params, "C");
  if (kron) {
    const auto rs = kron->E.rows();
    const auto rx = kron->Exi.rows();
    if (kron->E.cols() != rs || kron->A.rows() != rs || kron->A.cols() != rs ||
        kron->Exi.cols() != rx || kron->Axi.rows() != rx || kron->Axi.cols() != rx)
      throw InvalidArgument("Kronecker factors must be square with matching sizes");
    if (rs * rx != order) throw InvalidArgument("Kronecker factor sizes do not multiply to r");
    if (a_terms.size() != 4) throw InvalidArgument("Kronecker rom needs exactly four A terms");
    const auto expected = kron_terms(*kron);
    for (std::size_t i = 0; i < 4; ++i) {
      const double scale = std::max(expected[i].norm(), 1e-300);
      if ((a_terms[i].matrix - expected[i]).norm() > 1e-14 * scale)
        throw InvalidArgument("A terms disagree with the Kronecker factors");
    }
  }
}

void StructuredRom::refresh_kron_terms() {
  if (!kron) return;
  auto terms = kron_terms(*kron);
  for (std::size_t i = 0; i < 4; ++i) a_terms.at(i).matrix = std::move(terms[i]);
}

StructuredRom make_lti_rom(const MatR& E, const MatR& A, const MatR& B, const MatR& C,
                           bool discrete_time) {
  StructuredRom rom;
  rom.structure = discrete_time ? RomStructure::lti_dt : RomStructure::lti;
  rom.n_params = 1;
  rom.order = static_cast<int>(A.rows());
  rom.n_inputs = static_cast<int>(B.cols());
  rom.n_outputs = static_cast<int>(C.rows());
  rom.a_terms = {{ScalarFamily::coordinate(0), E}, {ScalarFamily::constant(-1.0), A}};
  rom.b_terms = {{ScalarFamily::constant(1.0), B}};
  rom.c_terms = {{ScalarFamily::constant(1.0), C}};
  rom.validate();
  return rom;
}

StructuredRom make_stationary_rom(const MatR& A1, const MatR& A2, const MatR& B, const MatR& C) {
  StructuredRom rom;
  rom.structure = RomStructure::stationary;
  rom.n_params = 1;
  rom.order = static_cast<int>(A1.rows());
  rom.n_inputs = static_cast<int>(B.cols());
  rom.n_outputs = static_cast<int>(C.rows());
  rom.a_terms = {{ScalarFamily::constant(1.0), A1}, {ScalarFamily::coordinate(0), A2}};
  rom.b_terms = {{ScalarFamily::constant(1.0), B}};
  rom.c_terms = {{ScalarFamily::constant(1.0), C}};
  rom.validate();
  return rom;
}

StructuredRom make_kron_rom(const MatR& E, const MatR& A, const MatR& Exi, const MatR& Axi,
                            const MatR& B, const MatR& C) {
  StructuredRom rom;
  rom.structure = RomStructure::kron;
  rom.n_params = 2;
  rom.order = static_cast<int>(E.rows() * Exi.rows());
  rom.n_inputs = static_cast<int>(B.cols());
  rom.n_outputs = static_cast<int>(C.rows());
  rom.kron = KronFactors{E, A, Exi, Axi};
  auto terms = kron_terms(*rom.kron);
  rom.a_terms = {{ScalarFamily::monomial(1.0, {1, 1}, 2), std::move(terms[0])},
                 {ScalarFamily::monomial(-1.0, {1, 0}, 2), std::move(terms[1])},
                 {ScalarFamily::monomial(-1.0, {0, 1}, 2), std::move(terms[2])},
                 {ScalarFamily::constant(1.0, 2), std::move(terms[3])}};
  rom.b_terms = {{ScalarFamily::constant(1.0, 2), B}};
  rom.c_terms = {{ScalarFamily::constant(1.0, 2), C}};
  rom.validate();
  return rom;
}

namespace {

template <typename Terms>
MatC sum_terms(const Terms& terms, const ParamPoint& p) {
  MatC out = MatC::Zero(terms.front().matrix.rows(), terms.front().matrix.cols());
  for (const auto& t : terms) out += t.family.eval(p) * t.matrix.template cast<cplx>();
  return out;
}

const std::vector<AffineTerm<MatR>>& block_terms(const StructuredRom& rom, Block block) {
  switch (block) {
    case Block::A: return rom.a_terms;
    case Block::B: return rom.b_terms;
    case Block::C: return rom.c_terms;
  }
  throw InvalidArgument("unknown operator block");
}

}  // namespace

MatC assemble_operator_terms(const StructuredRom& rom, const ParamPoint& p, Block block) {
  if (p.dim() != rom.n_params) throw InvalidArgument("parameter arity mismatch");
  return sum_terms(block_terms(rom, block), p);
}

MatC assemble_operator(const StructuredRom& rom, const ParamPoint& p, Block block) {
  if (p.dim() != rom.n_params) throw InvalidArgument("parameter arity mismatch");
  if (block == Block::A && rom.kron) {
    const auto& k = *rom.kron;
    const MatC left = p[0] * k.E.cast<cplx>() - k.A.cast<cplx>();
    const MatC right = p[1] * k.Exi.cast<cplx>() - k.Axi.cast<cplx>();
    return kron(left, right);
  }
  return sum_terms(block_terms(rom, block), p);
}

namespace {

Eigen::PartialPivLU<MatC> factor_operator(const StructuredRom& rom, const ParamPoint& p,
                                          double& rcond) {
  Eigen::PartialPivLU<MatC> lu(assemble_operator(rom, p, Block::A));
  rcond = lu_rcond(lu);
  if (!(rcond >= kSingularRcond))
    throw SingularOperator("reduced operator is singular at the evaluation point", rcond);
  return lu;
}

}  // namespace

RomEvaluation evaluate_output(const StructuredRom& rom, const ParamPoint& p) {
  RomEvaluation ev;
  auto lu = factor_operator(rom, p, ev.rcond);
  ev.state = lu.solve(assemble_operator(rom, p, Block::B));
  ev.output = assemble_operator(rom, p, Block::C) * ev.state;
  return ev;
}

MatC evaluate_dual(const StructuredRom& rom, const ParamPoint& p) {
  double rcond = 0.0;
  auto lu = factor_operator(rom, p, rcond);
  return lu.adjoint().solve(assemble_operator(rom, p, Block::C).adjoint());
}

RomEvaluation evaluate_primal_dual(const StructuredRom& rom, const ParamPoint& p) {
  RomEvaluation ev;
  auto lu = factor_operator(rom, p, ev.rcond);
  const MatC Cp = assemble_operator(rom, p, Block::C);
  ev.state = lu.solve(assemble_operator(rom, p, Block::B));
  ev.dual = lu.adjoint().solve(Cp.adjoint());
  ev.output = Cp * ev.state;
  return ev;
}

void SampleSet::validate() const {
  if (points.size() != values.size() || points.size() != weights.size())
    throw InvalidArgument("sample set points, values and weights differ in length");
  if (points.empty()) throw InvalidArgument("sample set is empty");
  const auto rows = values.front().rows();
  const auto cols = values.front().cols();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].dim() != n_params) throw InvalidArgument("sample point arity mismatch");
    if (values[i].rows() != rows || values[i].cols() != cols)
      throw InvalidArgument("sample values differ in shape");
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i]))
      throw InvalidArgument("sample weights must be positive and finite");
  }
}

namespace {

// Invariant under conjugating every coordinate; used to bucket candidates.
double closure_key(const ParamPoint& p) {
  double key = 0.0;
  for (int d = 0; d < p.dim(); ++d)
    key += (d + 1.0) * std::abs(p[d]) + (d + 1.618) * p[d].real();
  return key;
}

bool close(cplx a, cplx b, double tol) { return std::abs(a - b) <= tol * (1.0 + std::abs(b)); }

}  // namespace

ClosureReport check_conjugation_closure(const SampleSet& samples, double tol) {
  ClosureReport report;
  const std::size_t n = samples.size();
  std::vector<double> keys(n);
  for (std::size_t i = 0; i < n; ++i) keys[i] = closure_key(samples.points[i]);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return keys[a] < keys[b]; });
  std::vector<double> sorted_keys(n);
  for (std::size_t i = 0; i < n; ++i) sorted_keys[i] = keys[order[i]];

  for (std::size_t i = 0; i < n; ++i) {
    const ParamPoint target = samples.points[i].conj();
    const MatC target_value = samples.values[i].conjugate();
    const double key = keys[i];
    const double window = 10.0 * tol * (1.0 + std::abs(key)) + 1e-300;
    auto lo = std::lower_bound(sorted_keys.begin(), sorted_keys.end(), key - window);
    bool found = false;
    for (auto it = lo; it != sorted_keys.end() && *it <= key + window; ++it) {
      const std::size_t j = order[static_cast<std::size_t>(it - sorted_keys.begin())];
      const auto& q = samples.points[j];
      if (q.dim() != target.dim()) continue;
      bool same = true;
      for (int d = 0; d < q.dim() && same; ++d) same = close(q[d], target[d], tol);
      if (!same) continue;
      if ((samples.values[j] - target_value).norm() > tol * (1.0 + target_value.norm())) continue;
      if (std::abs(samples.weights[j] - samples.weights[i]) > tol * samples.weights[i]) continue;
      found = true;
      break;
    }
    if (!found) {
      report.closed = false;
      report.violations.push_back(i);
    }
  }
  return report;
}

MatC fom_partial(const FomEvaluator& fom, const ParamPoint& p, int coord) {
  if (coord < 0 || coord >= p.dim()) throw InvalidArgument("partial coordinate out of range");
  if (fom.has_partials()) return fom.partials(p).at(static_cast<std::size_t>(coord));
  const double h = 1e-6 * (1.0 + std::abs(p[coord]));
  auto shifted = [&](double k) {
    if (p.dim() == 1) return ParamPoint(p[0] + k * h);
    return coord == 0 ? ParamPoint(p[0] + k * h, p[1]) : ParamPoint(p[0], p[1] + k * h);
  };
  // Derivative along the real direction of a holomorphic map.
  return (-fom.evaluate(shifted(2.0)) + 8.0 * fom.evaluate(shifted(1.0)) -
          8.0 * fom.evaluate(shifted(-1.0)) + fom.evaluate(shifted(-2.0))) /
         (12.0 * h);
}

}  // namespace l2rom
