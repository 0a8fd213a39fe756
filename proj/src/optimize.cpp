// SPDX-License-Identifier: Apache-2.0
#include "l2rom/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/SVD>
#include <Eigen/SparseLU>

#include "l2rom/spectral.hpp"

namespace l2rom {

double GradientBundle::norm() const {
  double s = 0.0;
  for (const auto& m : dA) s += m.squaredNorm();
  for (const auto& m : dB) s += m.squaredNorm();
  for (const auto& m : dC) s += m.squaredNorm();
  return std::sqrt(s);
}

double KronGradient::norm() const {
  double s = dE.squaredNorm() + dA.squaredNorm() + dExi.squaredNorm() + dAxi.squaredNorm();
  for (const auto& m : dB) s += m.squaredNorm();
  for (const auto& m : dC) s += m.squaredNorm();
  return std::sqrt(s);
}

namespace {

constexpr double kImagTolerance = 1e-10;

std::vector<MatR> realify(const std::vector<MatC>& g, double magnitude) {
  std::vector<MatR> out;
  out.reserve(g.size());
  const double floor = std::max(magnitude, std::numeric_limits<double>::min());
  for (const auto& m : g) {
    if (m.imag().norm() > kImagTolerance * floor)
      throw DomainError(
          "gradient has a non-negligible imaginary part; the samples are not closed under "
          "conjugation");
    out.push_back(m.real());
  }
  return out;
}

GradientBundle to_bundle(const L2Accumulation& acc) {
  GradientBundle g;
  g.dA = realify(acc.dA, acc.magnitude);
  g.dB = realify(acc.dB, acc.magnitude);
  g.dC = realify(acc.dC, acc.magnitude);
  return g;
}

// Kronecker factor contraction without the zero-factor precondition.
MatR contract(const MatR& gradF, KronSide side, const MatR& L, const MatR& R) {
  if (L.cols() != R.cols()) throw InvalidArgument("split factors must have equal column counts");
  if (side == KronSide::left) {
    const auto m1 = L.rows(), m2 = R.rows();
    if (m1 == 0 || m2 == 0 || gradF.rows() % m1 || gradF.cols() % m2)
      throw InvalidArgument("gradient shape is not a multiple of the fixed factor");
    const auto n1 = gradF.rows() / m1, n2 = gradF.cols() / m2;
    MatR out = MatR::Zero(n1, n2);
    for (Eigen::Index j = 0; j < L.cols(); ++j) {
      // (I (x) l_j^T) gradF (I (x) r_j)
      const MatR rows = [&] {
        MatR t(n1, gradF.cols());
        for (Eigen::Index k = 0; k < n1; ++k)
          t.row(k) = L.col(j).transpose() * gradF.middleRows(k * m1, m1);
        return t;
      }();
      for (Eigen::Index l = 0; l < n2; ++l)
        out.col(l) += rows.middleCols(l * m2, m2) * R.col(j);
    }
    return out;
  }
  const auto n1 = L.rows(), n2 = R.rows();
  if (n1 == 0 || n2 == 0 || gradF.rows() % n1 || gradF.cols() % n2)
    throw InvalidArgument("gradient shape is not a multiple of the fixed factor");
  const auto m1 = gradF.rows() / n1, m2 = gradF.cols() / n2;
  MatR out = MatR::Zero(m1, m2);
  for (Eigen::Index j = 0; j < L.cols(); ++j)
    for (Eigen::Index k = 0; k < n1; ++k)
      for (Eigen::Index l = 0; l < n2; ++l) {
        const double w = L(k, j) * R(l, j);
        if (w != 0.0) out += w * gradF.block(k * m1, l * m2, m1, m2);
      }
  return out;
}

}  // namespace

double l2_objective(const StructuredRom& rom, const SampleSet& data, Execution exec) {
  return accumulate_l2(rom, data, false, exec).objective;
}

GradientBundle l2_gradients(const StructuredRom& rom, const SampleSet& data, Execution exec) {
  return to_bundle(accumulate_l2(rom, data, true, exec));
}

std::pair<double, GradientBundle> l2_objective_and_gradients(const StructuredRom& rom,
                                                             const SampleSet& data,
                                                             Execution exec) {
  const L2Accumulation acc = accumulate_l2(rom, data, true, exec);
  return {acc.objective, to_bundle(acc)};
}

MatR kron_factor_gradient(const MatR& gradF, KronSide side, const MatR& fixed_l,
                          const MatR& fixed_r) {
  if ((fixed_l * fixed_r.transpose()).norm() == 0.0)
    throw InvalidArgument("fixed Kronecker factor is zero");
  return contract(gradF, side, fixed_l, fixed_r);
}

MatR kron_factor_gradient(const MatR& gradF, KronSide side, const MatR& fixed) {
  return kron_factor_gradient(gradF, side, fixed, MatR::Identity(fixed.cols(), fixed.cols()));
}

namespace {

KronGradient chain_kron(const StructuredRom& rom, const GradientBundle& g) {
  const auto& k = *rom.kron;
  const auto I = [](const MatR& m) { return MatR::Identity(m.cols(), m.cols()); };
  KronGradient out;
  out.dE = contract(g.dA[0], KronSide::left, k.Exi, I(k.Exi)) +
           contract(g.dA[1], KronSide::left, k.Axi, I(k.Axi));
  out.dA = contract(g.dA[2], KronSide::left, k.Exi, I(k.Exi)) +
           contract(g.dA[3], KronSide::left, k.Axi, I(k.Axi));
  out.dExi = contract(g.dA[0], KronSide::right, k.E, I(k.E)) +
             contract(g.dA[2], KronSide::right, k.A, I(k.A));
  out.dAxi = contract(g.dA[1], KronSide::right, k.E, I(k.E)) +
             contract(g.dA[3], KronSide::right, k.A, I(k.A));
  out.dB = g.dB;
  out.dC = g.dC;
  return out;
}

}  // namespace

KronGradient l2_gradients_kron(const StructuredRom& rom, const SampleSet& data, Execution exec) {
  if (!rom.kron) throw InvalidArgument("rom carries no Kronecker factors");
  return chain_kron(rom, l2_gradients(rom, data, exec));
}

VecR pack_variables(const StructuredRom& rom) {
  std::vector<const MatR*> blocks;
  if (rom.kron) {
    blocks = {&rom.kron->E, &rom.kron->A, &rom.kron->Exi, &rom.kron->Axi};
  } else {
    for (const auto& t : rom.a_terms) blocks.push_back(&t.matrix);
  }
  for (const auto& t : rom.b_terms) blocks.push_back(&t.matrix);
  for (const auto& t : rom.c_terms) blocks.push_back(&t.matrix);
  Eigen::Index total = 0;
  for (const auto* b : blocks) total += b->size();
  VecR x(total);
  Eigen::Index o = 0;
  for (const auto* b : blocks) {
    x.segment(o, b->size()) = b->reshaped();
    o += b->size();
  }
  return x;
}

StructuredRom unpack_variables(const StructuredRom& shape, const VecR& x) {
  StructuredRom rom = shape;
  std::vector<MatR*> blocks;
  if (rom.kron) {
    blocks = {&rom.kron->E, &rom.kron->A, &rom.kron->Exi, &rom.kron->Axi};
  } else {
    for (auto& t : rom.a_terms) blocks.push_back(&t.matrix);
  }
  for (auto& t : rom.b_terms) blocks.push_back(&t.matrix);
  for (auto& t : rom.c_terms) blocks.push_back(&t.matrix);
  Eigen::Index o = 0;
  for (auto* b : blocks) {
    if (o + b->size() > x.size()) throw InvalidArgument("variable vector too short");
    b->reshaped() = x.segment(o, b->size());
    o += b->size();
  }
  if (o != x.size()) throw InvalidArgument("variable vector length does not match the rom");
  rom.refresh_kron_terms();
  return rom;
}

VecR pack_gradient(const StructuredRom& rom, const SampleSet& data, double& objective,
                   Execution exec) {
  const L2Accumulation acc = accumulate_l2(rom, data, true, exec);
  objective = acc.objective;
  const GradientBundle g = to_bundle(acc);
  std::vector<MatR> blocks;
  if (rom.kron) {
    const KronGradient k = chain_kron(rom, g);
    blocks = {k.dE, k.dA, k.dExi, k.dAxi};
  } else {
    blocks = g.dA;
  }
  blocks.insert(blocks.end(), g.dB.begin(), g.dB.end());
  blocks.insert(blocks.end(), g.dC.begin(), g.dC.end());
  Eigen::Index total = 0;
  for (const auto& b : blocks) total += b.size();
  VecR out(total);
  Eigen::Index o = 0;
  for (const auto& b : blocks) {
    out.segment(o, b.size()) = b.reshaped();
    o += b.size();
  }
  return out;
}

void FitOptions::validate() const {
  if (max_iters < 0) throw InvalidArgument("max_iters must be non-negative");
  if (!(grad_tol > 0.0)) throw InvalidArgument("grad_tol must be positive");
  if (!(initial_step > 0.0)) throw InvalidArgument("initial_step must be positive");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw InvalidArgument("backtrack must lie in (0, 1)");
  if (!(armijo > 0.0 && armijo < 1.0)) throw InvalidArgument("armijo must lie in (0, 1)");
  if (!(min_step > 0.0)) throw InvalidArgument("min_step must be positive");
  if (memory < 1) throw InvalidArgument("memory must be at least 1");
}

namespace {

struct Pair {
  VecR s, y;
  double rho;
};

VecR two_loop(const std::deque<Pair>& mem, const VecR& g) {
  VecR q = g;
  std::vector<double> alpha(mem.size());
  for (std::size_t i = mem.size(); i-- > 0;) {
    alpha[i] = mem[i].rho * mem[i].s.dot(q);
    q -= alpha[i] * mem[i].y;
  }
  const auto& last = mem.back();
  q *= last.s.dot(last.y) / last.y.squaredNorm();
  for (std::size_t i = 0; i < mem.size(); ++i) {
    const double beta = mem[i].rho * mem[i].y.dot(q);
    q += (alpha[i] - beta) * mem[i].s;
  }
  return -q;
}

double data_energy(const SampleSet& data) {
  double e = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) e += data.weights[i] * data.values[i].squaredNorm();
  return e;
}

}  // namespace

FitTrace fit(const StructuredRom& init, const SampleSet& data, const FitOptions& opts) {
  opts.validate();
  init.validate();
  data.validate();

  FitTrace trace;
  StructuredRom rom = init;
  VecR x = pack_variables(rom);
  double J = 0.0;
  VecR g = pack_gradient(rom, data, J, opts.exec);
  const double g0 = g.norm();
  trace.iterations.push_back({J, g0, 0.0});

  const double optimal_scale = data_energy(data) / std::max(1.0, x.norm());
  if (g0 <= opts.grad_tol * optimal_scale) {
    trace.rom = rom;
    trace.converged = true;
    trace.message = "initial rom is stationary";
    return trace;
  }

  std::deque<Pair> mem;
  for (int it = 0; it < opts.max_iters; ++it) {
    const bool quasi_newton = opts.kind == OptimizerKind::lbfgs && !mem.empty();
    VecR d = quasi_newton ? two_loop(mem, g) : VecR(-g);
    double gd = g.dot(d);
    if (!(gd < 0.0)) {
      mem.clear();
      d = -g;
      gd = -g.squaredNorm();
    }
    double alpha = opts.initial_step;
    if (mem.empty()) {
      // No curvature information: the first trial moves x by 1% of its size.
      alpha *= 0.01 * std::max(1.0, x.norm()) / d.norm();
    } else if (!quasi_newton) {
      alpha *= mem.back().s.dot(mem.back().y) / mem.back().y.squaredNorm();
    }

    bool accepted = false;
    double dJ = 0.0;
    StructuredRom trial;
    VecR xt;
    while (alpha * d.norm() >= opts.min_step * std::max(1.0, x.norm())) {
      xt = x + alpha * d;
      trial = unpack_variables(rom, xt);
      try {
        dJ = accumulate_l2_change(rom, trial, data, opts.exec);
      } catch (const SingularOperator&) {
        dJ = std::numeric_limits<double>::infinity();
      }
      if (dJ <= opts.armijo * alpha * gd) {
        accepted = true;
        break;
      }
      alpha *= opts.backtrack;
    }
    if (!accepted) {
      if (!mem.empty()) {
        mem.clear();
        --it;
        continue;
      }
      trace.message = "line search failed to find a sufficient decrease";
      break;
    }

    double Jt = 0.0;
    VecR gt = pack_gradient(trial, data, Jt, opts.exec);
    const VecR s = xt - x;
    const VecR y = gt - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      mem.push_back({s, y, 1.0 / sy});
      if (static_cast<int>(mem.size()) > opts.memory) mem.pop_front();
    }
    J += dJ;
    x = xt;
    g = gt;
    rom = std::move(trial);
    trace.iterations.push_back({J, g.norm(), alpha * d.norm()});
    if (g.norm() <= opts.grad_tol * g0) {
      trace.converged = true;
      trace.message = "relative gradient tolerance reached";
      break;
    }
  }
  if (!trace.converged && trace.message.empty()) trace.message = "iteration limit reached";
  trace.rom = rom;
  return trace;
}

namespace {

// Orthonormal basis of the real span of complex columns that come in
// conjugate pairs (or are real).
MatR real_basis(const MatC& V, int r) {
  MatR stacked(V.rows(), 2 * V.cols());
  stacked << V.real(), V.imag();
  Eigen::BDCSVD<MatR> svd(stacked, Eigen::ComputeThinU);
  return svd.matrixU().leftCols(r);
}

cplx mirror_shift(cplx lambda, TimeDomain time) {
  if (time == TimeDomain::continuous) return {std::abs(lambda.real()), lambda.imag()};
  return std::abs(lambda) < 1.0 ? 1.0 / std::conj(lambda) : lambda;
}

double pole_change(const VecC& now, const VecC& before) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < now.size(); ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < before.size(); ++j) best = std::min(best, std::abs(now(k) - before(j)));
    worst = std::max(worst, best / std::max(std::abs(now(k)), 1e-300));
  }
  return worst;
}

// Log-spaced reals on the positive axis for continuous time; for discrete
// time, r points evenly spaced on the circle of radius 1.5.
std::vector<cplx> default_shifts(TimeDomain time, int r) {
  std::vector<cplx> shifts;
  if (time == TimeDomain::continuous) {
    for (double v : logspace(0.1, 10.0, r)) shifts.emplace_back(v, 0.0);
    return shifts;
  }
  for (int k = 0; k < r; ++k) shifts.push_back(std::polar(1.5, 2.0 * std::numbers::pi * k / r));
  return shifts;
}

}  // namespace

IrkaResult irka_init(const AffineLtiFom& fom, int r, const IrkaOptions& opts) {
  const int n = fom.order();
  if (r < 1 || r > n) throw InvalidArgument("reduced order must satisfy 1 <= r <= n");
  if (opts.tol <= 0.0 || opts.max_iters < 1) throw InvalidArgument("invalid IRKA options");

  std::vector<cplx> shifts = opts.initial_shifts;
  if (shifts.empty()) shifts = default_shifts(fom.time, r);
  if (static_cast<int>(shifts.size()) != r) throw InvalidArgument("need exactly r initial shifts");
  MatC bdir = MatC::Ones(fom.n_inputs(), r) / std::sqrt(static_cast<double>(fom.n_inputs()));
  MatC cdir = MatC::Ones(fom.n_outputs(), r) / std::sqrt(static_cast<double>(fom.n_outputs()));

  const MatR Ed = MatR(fom.E), Ad = MatR(fom.A);
  IrkaResult res;
  VecC poles;
  for (int it = 1; it <= opts.max_iters; ++it) {
    MatC V(n, r), W(n, r);
    for (int k = 0; k < r; ++k) {
      const cplx s = shifts[static_cast<std::size_t>(k)];
      V.col(k) = fom.resolvent_apply(s, fom.B.cast<cplx>() * bdir.col(k));
      W.col(k) = fom.resolvent_apply(s, fom.C.adjoint().cast<cplx>() * cdir.col(k), true);
    }
    const MatR Vr = real_basis(V, r), Wr = real_basis(W, r);
    const MatR Er = Wr.transpose() * (fom.E * Vr);
    const MatR Ar = Wr.transpose() * (fom.A * Vr);
    const MatR Br = Wr.transpose() * fom.B;
    const MatR Cr = fom.C * Vr;
    StructuredRom rom = make_lti_rom(Er, Ar, Br, Cr, fom.time == TimeDomain::discrete);

    PoleResidue pr;
    try {
      pr = pole_residue_lti(Er, Ar, Br, Cr);
    } catch (const Error&) {
      res.rom = rom;
      res.iterations = it;
      return res;
    }
    res.rom = std::move(rom);
    res.iterations = it;
    res.pole_change = poles.size() ? pole_change(pr.poles, poles) : 1.0;
    poles = pr.poles;
    if (res.pole_change < opts.tol) {
      res.converged = true;
      return res;
    }
    for (int k = 0; k < r; ++k) shifts[static_cast<std::size_t>(k)] = mirror_shift(pr.poles(k), fom.time);
    bdir = pr.right;
    cdir = pr.left;
  }
  return res;
}

GreedyResult greedy_rb_init(const AffineStationaryFom& fom, int r,
                            const std::vector<double>& candidates) {
  if (r < 1) throw InvalidArgument("reduced order must be positive");
  if (candidates.empty()) throw InvalidArgument("no candidate parameters given");
  std::vector<double> cand = candidates;
  for (double c : cand)
    if (!(c >= fom.a && c <= fom.b)) throw InvalidArgument("candidate outside the parameter interval");
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end(),
                         [](double u, double v) { return std::abs(u - v) <= 1e-12 * (1.0 + std::abs(v)); }),
             cand.end());

  const auto n = fom.order();
  std::vector<MatR> states;
  std::vector<MatR> outputs;
  for (double c : cand) {
    states.push_back(fom.state(c));
    outputs.push_back(fom.C * states.back());
  }

  GreedyResult res;
  MatR Q(n, 0);
  std::vector<bool> used(cand.size(), false);
  auto project = [&](const MatR& basis) {
    const MatR A1 = basis.transpose() * (fom.A1 * basis);
    const MatR A2 = basis.transpose() * (fom.A2 * basis);
    return make_stationary_rom(A1, A2, basis.transpose() * fom.B, fom.C * basis);
  };

  while (Q.cols() < r) {
    std::size_t best = cand.size();
    double best_err = -1.0;
    std::optional<StructuredRom> rom;
    if (Q.cols() > 0) rom = project(Q);
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (used[i]) continue;
      double err = outputs[i].norm();
      if (rom) {
        try {
          err = (outputs[i].cast<cplx>() - evaluate_output(*rom, ParamPoint(cplx{cand[i], 0.0})).output).norm();
        } catch (const SingularOperator&) {
          err = std::numeric_limits<double>::infinity();
        }
      }
      if (err > best_err) {
        best_err = err;
        best = i;
      }
    }
    if (best == cand.size()) break;
    used[best] = true;
    res.selected.push_back(cand[best]);
    for (Eigen::Index j = 0; j < states[best].cols() && Q.cols() < r; ++j) {
      VecR v = states[best].col(j);
      const double vn = v.norm();
      for (int pass = 0; pass < 2; ++pass) v -= Q * (Q.transpose() * v);
      if (v.norm() <= 1e-10 * vn) continue;
      Q.conservativeResize(Eigen::NoChange, Q.cols() + 1);
      Q.col(Q.cols() - 1) = v / v.norm();
    }
  }
  if (Q.cols() == 0) throw DomainError("all snapshots vanish; no reduced basis can be built");
  if (Q.cols() < r) {
    res.truncated = true;
    res.warning = "only " + std::to_string(Q.cols()) + " independent snapshots; reduced order lowered";
  }
  res.rom = project(Q);
  return res;
}

StructuredRom random_rom(RomStructure structure, int r, int n_inputs, int n_outputs,
                         std::uint64_t seed, int r_xi) {
  if (r < 1 || n_inputs < 1 || n_outputs < 1)
    throw InvalidArgument("random_rom needs positive order and io dimensions");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  auto draw = [&](int rows, int cols, double scale) {
    MatR m(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) m(i, j) = scale * normal(gen);
    return m;
  };
  auto near_identity = [&](int k) { return MatR(MatR::Identity(k, k) + draw(k, k, 0.05)); };
  auto stable = [&](int k) {
    const MatR S = draw(k, k, 1.0);
    const MatR M = draw(k, k, 1.0 / std::sqrt(static_cast<double>(k)));
    return MatR(0.5 * (S - S.transpose()) - M * M.transpose() - MatR::Identity(k, k));
  };
  auto contractive = [&](int k) {
    const MatR M = draw(k, k, 1.0 / std::sqrt(static_cast<double>(k)));
    const double radius = Eigen::JacobiSVD<MatR>(M).singularValues()(0);
    return MatR(0.5 * M / std::max(radius, 1e-12));
  };

  switch (structure) {
    case RomStructure::lti:
      return make_lti_rom(near_identity(r), stable(r), draw(r, n_inputs, 1.0),
                          draw(n_outputs, r, 1.0));
    case RomStructure::lti_dt:
      return make_lti_rom(MatR::Identity(r, r), contractive(r), draw(r, n_inputs, 1.0),
                          draw(n_outputs, r, 1.0), true);
    case RomStructure::stationary: {
      const MatR M = draw(r, r, 1.0);
      const MatR N = draw(r, r, 1.0);
      return make_stationary_rom(M * M.transpose() + MatR::Identity(r, r),
                                 N * N.transpose() + MatR::Identity(r, r), draw(r, n_inputs, 1.0),
                                 draw(n_outputs, r, 1.0));
    }
    case RomStructure::kron: {
      if (r_xi < 1) throw InvalidArgument("random_rom needs r_xi >= 1 for a Kronecker rom");
      const MatR E = near_identity(r);
      const MatR A = stable(r);
      // The inverse of a contraction has every eigenvalue outside the unit disk.
      const MatR Axi = contractive(r_xi).inverse();
      const int n = r * r_xi;
      return make_kron_rom(E, A, MatR::Identity(r_xi, r_xi), Axi, draw(n, n_inputs, 1.0),
                           draw(n_outputs, n, 1.0));
    }
    case RomStructure::generic:
      break;
  }
  throw InvalidArgument("random_rom does not support the generic structure");
}

}  // namespace l2rom
