#pragma once

#include "boxnorm/prox.hpp"
#include "boxnorm/types.hpp"

namespace boxnorm {

/// Thin singular value decomposition W = U diag(sigma) V^T with
/// r = min(rows, cols) factors, sigma nonincreasing, and the first
/// nonzero entry of every left singular vector made nonnegative so the
/// factorization is reproducible across runs.
struct SvdFactors {
  DenseMatrix u;
  DenseVector sigma;
  DenseMatrix v;
};

SvdFactors thin_svd(const DenseMatrix& w);

/// Singular values only (nonincreasing), skipping the factor computation.
DenseVector singular_values(const DenseMatrix& w);

/// Count of singular values above sigma_1 * max(rows, cols) * machine-eps.
Index numeric_rank(const DenseMatrix& w);

/// Orthogonally invariant norm selector. `dim` pads the singular-value
/// vector with zeros up to the given length before the vector norm is
/// applied; 0 means min(d, T). Padding matters for the box norm, where
/// every coordinate holds at least `a` of the budget, and is how a d x T
/// task matrix with d < T is measured against T-dimensional cluster
/// parameters.
struct NormSelector {
  enum class Kind { box, ksup, trace, frobenius };

  Kind kind = Kind::frobenius;
  BoxParams box_params{};
  Index k = 0;
  Index dim = 0;

  static NormSelector box(const BoxParams& params, Index dim = 0);
  static NormSelector ksup(Index k, Index dim = 0);
  static NormSelector trace();
  static NormSelector frobenius();
};

double spectral_norm(const DenseMatrix& w, const NormSelector& spec);

/// Penalty selector for spectral proximity operators. The prox solves
///   argmin_X  (1/2) ||X - W||_F^2 + lambda * Phi(X)
/// with
///   sq_box:       Phi(X) = (1/2) ||X||_box^2
///   sq_ksup:      Phi(X) = (1/2) ||X||_(k)^2
///   trace:        Phi(X) = ||X||_tr
///   elastic_net:  Phi(X) = ||X||_tr + (gamma/2) ||X||_F^2
struct PenaltySelector {
  enum class Kind { sq_box, sq_ksup, trace, elastic_net };

  Kind kind = Kind::trace;
  BoxParams box_params{};
  Index k = 0;
  double gamma = 0.0;
  Index dim = 0;

  static PenaltySelector sq_box(const BoxParams& params, Index dim = 0);
  static PenaltySelector sq_ksup(Index k, Index dim = 0);
  static PenaltySelector trace();
  static PenaltySelector elastic_net(double gamma);
};

DenseMatrix spectral_prox(const DenseMatrix& w, const PenaltySelector& spec,
                          double lambda);

/// Value of Phi (the prox convention above) at W.
double spectral_penalty(const DenseMatrix& w, const PenaltySelector& spec);

/// Cluster-norm weights. eps_w >= eps_b > 0 is required; eps_m is the
/// weight of the mean penalty added on top of the cluster norm and plays
/// no role in the box mapping itself.
struct ClusterParams {
  double eps_b = 0.0;
  double eps_w = 0.0;
  Index q = 0;
  double eps_m = 0.0;

  void validate(Index t) const;
};

/// Box parameters of the equivalent spectral box-norm over T tasks:
/// a = 1/eps_w, b = 1/eps_b, c = (T - Q + 1)/eps_w + (Q - 1)/eps_b.
/// The implied sparsity level is k = Q - 1.
BoxParams cluster_to_box(const ClusterParams& cp, Index t);

/// Matrix counterpart of moreau_split: W = U_part + Z where Z is the
/// spectral prox of the squared spectral k-support norm at
/// rho = a / (2(b - a)), sharing ordered singular vectors with W, and
///   (1/a) ||U_part||_F^2 + (1/(b-a)) ||Z||_(k)^2 = ||W||_box^2.
struct SpectralSplit {
  DenseMatrix u_part;
  DenseMatrix z;
};

SpectralSplit spectral_box_split(const DenseMatrix& w, const BoxParams& params,
                                 Index dim = 0);

}  // namespace boxnorm
