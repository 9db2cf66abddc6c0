#pragma once

#include "boxnorm/types.hpp"

namespace boxnorm {

/// Reference O(d(k + log d)) proximity operator of (lambda/2) ||.||_(k)^2,
/// kept for benchmark comparison against the breakpoint-search fast path.
/// Scans every candidate saturation split (q, ell), solving the stationarity
/// system per candidate via prefix sums, and cross-checks that the valid
/// split is unique (boundary ties must yield the same point). Must agree
/// with prox_sq_ksup to 1e-8 (max coordinate); the benchmark command
/// verifies that before timing.
DenseVector prox_sq_ksup_reference(const DenseVector& w, const KSupportParams& kp,
                                   double lambda);

}  // namespace boxnorm
