// SPDX-License-Identifier: Apache-2.0
#include "l2rom/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>

#include "l2rom/linalg.hpp"

namespace l2rom {

int thread_limit() {
  int n = omp_get_max_threads();
  if (const char* env = std::getenv("L2ROM_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap > 0) n = std::min<long>(n, cap);
  }
  return std::max(n, 1);
}

namespace {

L2Accumulation zero_accumulation(const StructuredRom& rom, bool gradients) {
  L2Accumulation acc;
  if (!gradients) return acc;
  for (const auto& t : rom.a_terms) acc.dA.push_back(MatC::Zero(t.matrix.rows(), t.matrix.cols()));
  for (const auto& t : rom.b_terms) acc.dB.push_back(MatC::Zero(t.matrix.rows(), t.matrix.cols()));
  for (const auto& t : rom.c_terms) acc.dC.push_back(MatC::Zero(t.matrix.rows(), t.matrix.cols()));
  return acc;
}

void add_sample(const StructuredRom& rom, const ParamPoint& p, const MatC& Y, double rho,
                bool gradients, L2Accumulation& acc) {
  const RomEvaluation ev = gradients ? evaluate_primal_dual(rom, p) : evaluate_output(rom, p);
  const MatC R = Y - ev.output;
  acc.objective += rho * R.squaredNorm();
  if (!gradients) return;
  const MatC dualR = ev.dual * R;
  const MatC gA = dualR * ev.state.adjoint();
  const MatC gC = R * ev.state.adjoint();
  const double w = 2.0 * rho;
  for (std::size_t i = 0; i < rom.a_terms.size(); ++i) {
    const cplx a = std::conj(rom.a_terms[i].family.eval(p));
    acc.dA[i] += (w * a) * gA;
    acc.magnitude += w * std::abs(a) * gA.norm();
  }
  for (std::size_t j = 0; j < rom.b_terms.size(); ++j) {
    const cplx b = std::conj(rom.b_terms[j].family.eval(p));
    acc.dB[j] -= (w * b) * dualR;
    acc.magnitude += w * std::abs(b) * dualR.norm();
  }
  for (std::size_t k = 0; k < rom.c_terms.size(); ++k) {
    const cplx c = std::conj(rom.c_terms[k].family.eval(p));
    acc.dC[k] -= (w * c) * gC;
    acc.magnitude += w * std::abs(c) * gC.norm();
  }
}

void merge(L2Accumulation& into, const L2Accumulation& part) {
  into.objective += part.objective;
  into.magnitude += part.magnitude;
  for (std::size_t i = 0; i < into.dA.size(); ++i) into.dA[i] += part.dA[i];
  for (std::size_t i = 0; i < into.dB.size(); ++i) into.dB[i] += part.dB[i];
  for (std::size_t i = 0; i < into.dC.size(); ++i) into.dC[i] += part.dC[i];
}

MatC operator_change(const StructuredRom& from, const StructuredRom& to, const ParamPoint& p,
                     Block block) {
  if (block == Block::A && from.kron && to.kron) {
    const auto& f = *from.kron;
    const auto& t = *to.kron;
    const cplx s = p[0];
    const cplx xi = p[1];
    const MatC dL = s * (t.E - f.E).cast<cplx>() - (t.A - f.A).cast<cplx>();
    const MatC dR = xi * (t.Exi - f.Exi).cast<cplx>() - (t.Axi - f.Axi).cast<cplx>();
    const MatC Lf = s * f.E.cast<cplx>() - f.A.cast<cplx>();
    const MatC Rt = xi * t.Exi.cast<cplx>() - t.Axi.cast<cplx>();
    return kron(dL, Rt) + kron(Lf, dR);
  }
  const auto& tf = block == Block::A ? from.a_terms : block == Block::B ? from.b_terms : from.c_terms;
  const auto& tt = block == Block::A ? to.a_terms : block == Block::B ? to.b_terms : to.c_terms;
  MatC out = MatC::Zero(tf.front().matrix.rows(), tf.front().matrix.cols());
  for (std::size_t i = 0; i < tf.size(); ++i)
    out += tf[i].family.eval(p) * (tt[i].matrix - tf[i].matrix).cast<cplx>();
  return out;
}

double sample_change(const StructuredRom& from, const StructuredRom& to, const ParamPoint& p,
                     const MatC& Y, double rho) {
  const RomEvaluation old_ev = evaluate_output(from, p);
  Eigen::PartialPivLU<MatC> lu(assemble_operator(to, p, Block::A));
  const double rc = lu_rcond(lu);
  if (!(rc >= kSingularRcond)) throw SingularOperator("trial rom is singular at a sample", rc);
  const MatC dx = lu.solve(operator_change(from, to, p, Block::B) -
                           operator_change(from, to, p, Block::A) * old_ev.state);
  const MatC x_new = old_ev.state + dx;
  const MatC dy = operator_change(from, to, p, Block::C) * x_new +
                  assemble_operator(from, p, Block::C) * dx;
  const MatC R = Y - old_ev.output;
  return rho * (dy.squaredNorm() - 2.0 * (R.conjugate().cwiseProduct(dy)).sum().real());
}

template <typename Body>
void for_each_chunk(std::size_t n, Execution exec, Body&& body) {
  const int chunks = static_cast<int>(std::min<std::size_t>(n, kReductionChunks));
  auto range = [&](int c) {
    return std::pair<std::size_t, std::size_t>{n * static_cast<std::size_t>(c) / chunks,
                                               n * static_cast<std::size_t>(c + 1) / chunks};
  };
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chunks));
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static) num_threads(thread_limit())
    for (int c = 0; c < chunks; ++c) {
      try {
        const auto [lo, hi] = range(c);
        body(c, lo, hi);
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
      }
    }
  } else {
    for (int c = 0; c < chunks; ++c) {
      const auto [lo, hi] = range(c);
      body(c, lo, hi);
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void check_compatible(const StructuredRom& rom, const SampleSet& data) {
  if (data.n_params != rom.n_params) throw InvalidArgument("sample and rom parameter arity differ");
  if (data.size() == 0) throw InvalidArgument("sample set is empty");
  const auto& Y = data.values.front();
  if (Y.rows() != rom.n_outputs || Y.cols() != rom.n_inputs)
    throw InvalidArgument("sample values do not match the rom input/output sizes");
}

}  // namespace

L2Accumulation accumulate_l2(const StructuredRom& rom, const SampleSet& data, bool gradients,
                             Execution exec) {
  check_compatible(rom, data);
  if (exec == Execution::serial) {
    L2Accumulation acc = zero_accumulation(rom, gradients);
    for (std::size_t i = 0; i < data.size(); ++i)
      add_sample(rom, data.points[i], data.values[i], data.weights[i], gradients, acc);
    return acc;
  }
  const int chunks = static_cast<int>(std::min<std::size_t>(data.size(), kReductionChunks));
  std::vector<L2Accumulation> parts(static_cast<std::size_t>(chunks),
                                    zero_accumulation(rom, gradients));
  for_each_chunk(data.size(), exec, [&](int c, std::size_t lo, std::size_t hi) {
    auto& part = parts[static_cast<std::size_t>(c)];
    for (std::size_t i = lo; i < hi; ++i)
      add_sample(rom, data.points[i], data.values[i], data.weights[i], gradients, part);
  });
  L2Accumulation acc = zero_accumulation(rom, gradients);
  for (const auto& part : parts) merge(acc, part);
  return acc;
}

double accumulate_l2_change(const StructuredRom& from, const StructuredRom& to,
                            const SampleSet& data, Execution exec) {
  check_compatible(from, data);
  if (from.a_terms.size() != to.a_terms.size() || from.b_terms.size() != to.b_terms.size() ||
      from.c_terms.size() != to.c_terms.size() || from.order != to.order)
    throw InvalidArgument("roms differ in structure");
  if (exec == Execution::serial) {
    double sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i)
      sum += sample_change(from, to, data.points[i], data.values[i], data.weights[i]);
    return sum;
  }
  const int chunks = static_cast<int>(std::min<std::size_t>(data.size(), kReductionChunks));
  std::vector<double> parts(static_cast<std::size_t>(chunks), 0.0);
  for_each_chunk(data.size(), exec, [&](int c, std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i)
      s += sample_change(from, to, data.points[i], data.values[i], data.weights[i]);
    parts[static_cast<std::size_t>(c)] = s;
  });
  double sum = 0.0;
  for (double s : parts) sum += s;
  return sum;
}

}  // namespace l2rom
