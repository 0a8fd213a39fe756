// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "l2rom/core.hpp"

namespace l2rom {

enum class Execution { serial, parallel };

/// Worker count used by parallel kernels: the OpenMP default, capped by the
/// L2ROM_THREADS environment variable when it holds a positive integer.
int thread_limit();

/// Number of contiguous sample chunks of a parallel reduction.  Fixed, so
/// the summation order (and therefore the result) does not depend on the
/// number of threads.
inline constexpr int kReductionChunks = 64;

/// Weighted sums over the samples of a misfit and its complex gradient
/// integrands, before realification.
struct L2Accumulation {
  double objective = 0.0;
  std::vector<MatC> dA, dB, dC;
  /// Sum of the magnitudes of all gradient contributions; the yardstick for
  /// deciding whether imaginary parts are rounding noise.
  double magnitude = 0.0;
};

L2Accumulation accumulate_l2(const StructuredRom& rom, const SampleSet& data, bool gradients,
                             Execution exec = Execution::parallel);

/// J(to) - J(from), evaluated through the resolvent difference so that it
/// stays accurate when the two roms are close.  Both roms must share shapes
/// and scalar families.  Throws SingularOperator when `to` has a pole at a
/// sample point.
double accumulate_l2_change(const StructuredRom& from, const StructuredRom& to,
                            const SampleSet& data, Execution exec = Execution::parallel);

}  // namespace l2rom
