#pragma once

#include "boxnorm/types.hpp"

namespace boxnorm {

/// Configuration of the proximity operators. `lambda` scales the squared
/// penalty: the operators solve argmin_x 1/2 ||x - w||^2 + (lambda/2) pen(x)^2.
/// `interp_tol` is the relative tolerance of the breakpoint interpolation;
/// it must lie in (0, 1e-6].
struct ProxConfig {
  double lambda = 1.0;
  double interp_tol = 1e-12;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      throw ParameterError("prox: lambda must be nonnegative and finite");
    if (!(interp_tol > 0.0) || interp_tol > 1e-6)
      throw ParameterError("prox: interp_tol must lie in (0, 1e-6]");
  }
};

struct ProxResult {
  DenseVector x;
  NormDecomposition cert;  ///< theta/alpha/q/ell of x; value is pen(x)
};

/// Proximity operator of (lambda/2) ||.||_box^2. The solution is
///   x_i = theta_i w_i / (theta_i + lambda),  theta_i = clamp(alpha |w_i| - lambda, a, b)
/// with alpha solving sum_i theta_i(alpha) = c, found in O(d log d) over the
/// 2d breakpoints {(a+lambda)/|w_i|, (b+lambda)/|w_i|}.
ProxResult prox_sq_box(const DenseVector& w, const BoxParams& params, const ProxConfig& cfg);

/// Proximity operator of (lambda/2) ||.||_(k)^2 (squared k-support norm):
/// the box prox at (a, b, c) -> (0, 1, k); x_i = 0 wherever theta_i = 0.
/// When k >= nnz(w) the budget is slack and x = w / (1 + lambda).
ProxResult prox_sq_ksup(const DenseVector& w, const KSupportParams& kp, const ProxConfig& cfg);

/// Gradient of ||.||_box^2, via the Moreau-decomposition identity
///   grad = (2/a) (w - prox_{rho ||.||_(k)^2}(w)),  rho = a / (2(b-a)),
/// which requires rho(d) = (c - d a)/(b - a) to be a (tolerance 1e-9) integer.
/// For a == b the gradient is the closed form 2 w / a. Lipschitz constant 2/a.
/// Only cfg.interp_tol is read; cfg.lambda does not enter the gradient.
DenseVector grad_sq_box(const DenseVector& w, const BoxParams& params, const ProxConfig& cfg);

/// Moreau-style split of the box-norm:
///   ||w||_box^2 = (1/a) ||u||_2^2 + (1/(b-a)) ||z||_(k)^2,  w = u + z,
/// with z = prox_{rho ||.||_(k)^2}(w), rho = a/(2(b-a)). Requires a < b and
/// integer rho(d) = k.
struct MoreauSplit {
  DenseVector z;  ///< k-support component
  DenseVector u;  ///< l2 component, u = w - z
};
MoreauSplit moreau_split(const DenseVector& w, const BoxParams& params);

}  // namespace boxnorm
