// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "l2rom/core.hpp"
#include "l2rom/kernels.hpp"
#include "l2rom/models.hpp"

namespace l2rom {

/// Gradients of the squared L2 misfit with respect to every matrix of a rom.
struct GradientBundle {
  std::vector<MatR> dA, dB, dC;
  double norm() const;
};

/// Gradients with respect to the Kronecker factors and the B, C terms.
struct KronGradient {
  MatR dE, dA, dExi, dAxi;
  std::vector<MatR> dB, dC;
  double norm() const;
};

/// sum_i rho_i ||Y_i - yhat(p_i)||_F^2
double l2_objective(const StructuredRom& rom, const SampleSet& data,
                    Execution exec = Execution::parallel);

/// Throws DomainError when the imaginary parts of the weighted sums are not
/// rounding noise, which happens for data not closed under conjugation.
GradientBundle l2_gradients(const StructuredRom& rom, const SampleSet& data,
                            Execution exec = Execution::parallel);

/// Objective and gradient from a single pass over the samples.
std::pair<double, GradientBundle> l2_objective_and_gradients(const StructuredRom& rom,
                                                             const SampleSet& data,
                                                             Execution exec = Execution::parallel);

enum class KronSide { left, right };

/// Gradient of A -> F(A (x) B) (left) or B -> F(A (x) B) (right), given the
/// gradient of F at the Kronecker product and the fixed factor written as
/// fixed = fixed_l * fixed_r^T.
MatR kron_factor_gradient(const MatR& gradF, KronSide side, const MatR& fixed_l,
                          const MatR& fixed_r);
/// Same with the trivial split (fixed, I).
MatR kron_factor_gradient(const MatR& gradF, KronSide side, const MatR& fixed);

KronGradient l2_gradients_kron(const StructuredRom& rom, const SampleSet& data,
                               Execution exec = Execution::parallel);

enum class OptimizerKind { steepest_descent, lbfgs };

struct FitOptions {
  int max_iters = 2000;
  double grad_tol = 1e-8;     ///< relative to the initial gradient norm
  double initial_step = 1.0;  ///< first trial step of a line search, in units of the direction
  double backtrack = 0.5;
  double armijo = 1e-4;
  double min_step = 1e-16;
  OptimizerKind kind = OptimizerKind::lbfgs;
  int memory = 10;
  Execution exec = Execution::parallel;

  void validate() const;
};

struct FitIteration {
  double objective = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
};

struct FitTrace {
  /// Entry 0 is the initial rom (step 0); one entry per accepted step after.
  std::vector<FitIteration> iterations;
  StructuredRom rom;
  bool converged = false;
  std::string message;

  int accepted_steps() const { return static_cast<int>(iterations.size()) - 1; }
  double initial_grad_norm() const { return iterations.front().grad_norm; }
  double final_grad_norm() const { return iterations.back().grad_norm; }
  double final_objective() const { return iterations.back().objective; }
};

/// Gradient-based minimisation of the L2 misfit over the raw rom matrices
/// (the Kronecker factors for Kronecker roms).
FitTrace fit(const StructuredRom& init, const SampleSet& data, const FitOptions& opts = {});

struct IrkaOptions {
  int max_iters = 200;
  double tol = 1e-10;  ///< relative pole movement between sweeps
  /// Initial shifts; defaults to r log-spaced reals in [0.1, 10] for
  /// continuous time and r equispaced points on |z| = 1.5 for discrete time.
  std::vector<cplx> initial_shifts;
};

struct IrkaResult {
  StructuredRom rom;
  bool converged = false;
  int iterations = 0;
  double pole_change = 0.0;
};

IrkaResult irka_init(const AffineLtiFom& fom, int r, const IrkaOptions& opts = {});

struct GreedyResult {
  StructuredRom rom;
  std::vector<double> selected;
  /// Set when fewer than r independent snapshots were available.
  bool truncated = false;
  std::string warning;
};

GreedyResult greedy_rb_init(const AffineStationaryFom& fom, int r,
                            const std::vector<double>& candidates);

/// Random starting rom. Continuous-time pencils are stable, discrete-time
/// pencils have spectral radius below one, the xi factor of a Kronecker rom
/// has its poles outside the unit disk, and a stationary rom has symmetric
/// positive definite A1 and A2. `r_xi` is only read for Kronecker roms.
StructuredRom random_rom(RomStructure structure, int r, int n_inputs, int n_outputs,
                         std::uint64_t seed, int r_xi = 0);

/// Flattened optimisation variables of a rom, in a fixed order.
VecR pack_variables(const StructuredRom& rom);
StructuredRom unpack_variables(const StructuredRom& shape, const VecR& x);
VecR pack_gradient(const StructuredRom& rom, const SampleSet& data, double& objective,
                   Execution exec = Execution::parallel);

}  // namespace l2rom
