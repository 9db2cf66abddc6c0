#pragma once

#include <vector>

#include "boxnorm/types.hpp"

namespace boxnorm {

/// Box-norm of a vector:
///   ||w||^2 = inf { sum_i w_i^2 / theta_i : a <= theta_i <= b, sum_i theta_i <= c }.
/// Computed in O(d log d) by sorting the 2d breakpoints of
/// S(alpha) = sum_i clamp(alpha |w_i|, a, b), binary-searching the bracketing
/// pair and interpolating linearly. Returns the value together with the
/// minimizing theta and the saturation pattern (q upper-saturated entries,
/// ell lower-saturated entries, residual budget p_res of the middle segment).
///
/// Zero entries take theta_i = a. If c >= b * nnz(w) + a * (d - nnz(w)) the
/// budget constraint is slack and theta saturates at b on the support.
NormDecomposition box_norm(const DenseVector& w, const BoxParams& params);

/// k-support norm. Finds the unique split q in {0, .., k-1} with
///   |w|_[q] >= (1/(k-q)) * sum_{j>q} |w|_[j] > |w|_[q+1]
/// over the nonincreasing rearrangement |w|_[.], then
///   ||w||^2 = sum_{j<=q} |w|_[j]^2 + (sum_{j>q} |w|_[j])^2 / (k-q).
/// Collapses to the l1 norm at k = 1 and the l2 norm at k = d.
struct KSupportResult {
  double value = 0.0;
  Index q = 0;
};
KSupportResult k_support_norm(const DenseVector& w, const KSupportParams& kp);

/// Dual box-norm, valid for fractional rho = (c - d*a)/(b - a):
///   ||u||_*^2 = a ||u||_2^2 + (b-a) ( sum_{i<=k} |u|_[i]^2 + (rho-k) |u|_[k+1]^2 )
/// with k = floor(rho) and |u|_[d+1] = 0. For a == b this is sqrt(a) ||u||_2.
double dual_box_norm(const DenseVector& u, const BoxParams& params);

/// Dual k-support norm: l2 norm of the k largest magnitudes.
double dual_k_support_norm(const DenseVector& u, const KSupportParams& kp);

/// Dual (k, q)-norm: lq norm of the k largest magnitudes, q in [1, inf].
/// q = inf yields the largest magnitude.
double dual_ksup_q_norm(const DenseVector& u, const KSupportParams& kp, double q);

/// Primal (k, inf)-norm: max(||w||_inf, ||w||_1 / k).
double ksup_inf_norm(const DenseVector& w, const KSupportParams& kp);

/// Dual norm of a polyhedral Theta set given by its vertices:
///   ||u||_* = max_l sqrt( sum_i gamma^l_i u_i^2 ).
double polyhedral_dual_norm(const DenseVector& u, const VertexSet& vertices);

/// Reference oracle for norms with an infimal-convolution representation:
///   inf { sum_g ||v_g||_2 : supp(v_g) subseteq g, sum_g v_g = w }.
/// Minimizes the smoothed objective sum_g sqrt(||v_g||^2 + eps^2), eps = 1e-8,
/// by long-horizon projected gradient with line search (up to 1e6 iterations).
/// Groups must cover {0, .., d-1}. Intended for cross-checks only; d <= 8.
double overlap_group_lasso_oracle(const DenseVector& w,
                                  const std::vector<std::vector<Index>>& groups);

}  // namespace boxnorm
