#include "boxnorm/spectral.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "boxnorm/vecnorm.hpp"

namespace boxnorm {

namespace {

void require_matrix(const DenseMatrix& w) {
  if (w.rows() == 0 || w.cols() == 0) throw InputError("empty matrix");
  detail::require_finite(w, "W");
}

Index resolve_dim(Index dim, Index r) {
  if (dim == 0) return r;
  if (dim < r) throw ParameterError("selector dim must be at least min(d, T)");
  return dim;
}

DenseVector pad_to(const DenseVector& sigma, Index n) {
  if (sigma.size() == n) return sigma;
  DenseVector out = DenseVector::Zero(n);
  out.head(sigma.size()) = sigma;
  return out;
}

DenseVector soft_threshold(const DenseVector& sigma, double tau) {
  return (sigma.array() - tau).cwiseMax(0.0).matrix();
}

}  // namespace

SvdFactors thin_svd(const DenseMatrix& w) {
  require_matrix(w);
  SvdFactors f;
  if (std::max(w.rows(), w.cols()) <= 32) {
    Eigen::JacobiSVD<DenseMatrix> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
    f.u = svd.matrixU();
    f.sigma = svd.singularValues();
    f.v = svd.matrixV();
  } else {
    Eigen::BDCSVD<DenseMatrix> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
    f.u = svd.matrixU();
    f.sigma = svd.singularValues();
    f.v = svd.matrixV();
  }
  for (Index j = 0; j < f.u.cols(); ++j) {
    for (Index i = 0; i < f.u.rows(); ++i) {
      const double e = f.u(i, j);
      if (std::abs(e) > 1e-12) {
        if (e < 0.0) {
          f.u.col(j) = -f.u.col(j);
          f.v.col(j) = -f.v.col(j);
        }
        break;
      }
    }
  }
  return f;
}

DenseVector singular_values(const DenseMatrix& w) {
  require_matrix(w);
  if (std::max(w.rows(), w.cols()) <= 32)
    return Eigen::JacobiSVD<DenseMatrix>(w).singularValues();
  return Eigen::BDCSVD<DenseMatrix>(w).singularValues();
}

Index numeric_rank(const DenseMatrix& w) {
  const DenseVector sigma = singular_values(w);
  if (sigma.size() == 0 || !(sigma(0) > 0.0)) return 0;
  const double cutoff = sigma(0) *
                        static_cast<double>(std::max(w.rows(), w.cols())) *
                        std::numeric_limits<double>::epsilon();
  Index rank = 0;
  for (Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > cutoff) ++rank;
  return rank;
}

NormSelector NormSelector::box(const BoxParams& params, Index dim) {
  NormSelector s;
  s.kind = Kind::box;
  s.box_params = params;
  s.dim = dim;
  return s;
}

NormSelector NormSelector::ksup(Index k, Index dim) {
  NormSelector s;
  s.kind = Kind::ksup;
  s.k = k;
  s.dim = dim;
  return s;
}

NormSelector NormSelector::trace() {
  NormSelector s;
  s.kind = Kind::trace;
  return s;
}

NormSelector NormSelector::frobenius() {
  NormSelector s;
  s.kind = Kind::frobenius;
  return s;
}

double spectral_norm(const DenseMatrix& w, const NormSelector& spec) {
  require_matrix(w);
  const Index r = std::min(w.rows(), w.cols());
  switch (spec.kind) {
    case NormSelector::Kind::frobenius:
      return w.norm();
    case NormSelector::Kind::trace:
      return singular_values(w).sum();
    case NormSelector::Kind::box: {
      const Index n = resolve_dim(spec.dim, r);
      return box_norm(pad_to(singular_values(w), n), spec.box_params).value;
    }
    case NormSelector::Kind::ksup: {
      const Index n = resolve_dim(spec.dim, r);
      return k_support_norm(pad_to(singular_values(w), n), KSupportParams{spec.k})
          .value;
    }
  }
  throw ParameterError("unknown norm selector");
}

PenaltySelector PenaltySelector::sq_box(const BoxParams& params, Index dim) {
  PenaltySelector s;
  s.kind = Kind::sq_box;
  s.box_params = params;
  s.dim = dim;
  return s;
}

PenaltySelector PenaltySelector::sq_ksup(Index k, Index dim) {
  PenaltySelector s;
  s.kind = Kind::sq_ksup;
  s.k = k;
  s.dim = dim;
  return s;
}

PenaltySelector PenaltySelector::trace() {
  PenaltySelector s;
  s.kind = Kind::trace;
  return s;
}

PenaltySelector PenaltySelector::elastic_net(double gamma) {
  if (!std::isfinite(gamma) || gamma < 0.0)
    throw ParameterError("elastic net gamma must be finite and nonnegative");
  PenaltySelector s;
  s.kind = Kind::elastic_net;
  s.gamma = gamma;
  return s;
}

DenseMatrix spectral_prox(const DenseMatrix& w, const PenaltySelector& spec,
                          double lambda) {
  require_matrix(w);
  if (!std::isfinite(lambda) || lambda < 0.0)
    throw ParameterError("prox lambda must be finite and nonnegative");
  const Index r = std::min(w.rows(), w.cols());
  const SvdFactors f = thin_svd(w);

  DenseVector x;
  switch (spec.kind) {
    case PenaltySelector::Kind::sq_box: {
      const Index n = resolve_dim(spec.dim, r);
      ProxConfig cfg;
      cfg.lambda = lambda;
      x = prox_sq_box(pad_to(f.sigma, n), spec.box_params, cfg).x;
      break;
    }
    case PenaltySelector::Kind::sq_ksup: {
      const Index n = resolve_dim(spec.dim, r);
      ProxConfig cfg;
      cfg.lambda = lambda;
      x = prox_sq_ksup(pad_to(f.sigma, n), KSupportParams{spec.k}, cfg).x;
      break;
    }
    case PenaltySelector::Kind::trace:
      x = soft_threshold(f.sigma, lambda);
      break;
    case PenaltySelector::Kind::elastic_net:
      x = soft_threshold(f.sigma, lambda) / (1.0 + lambda * spec.gamma);
      break;
    default:
      throw ParameterError("unknown penalty selector");
  }
  return f.u * x.head(r).asDiagonal() * f.v.transpose();
}

double spectral_penalty(const DenseMatrix& w, const PenaltySelector& spec) {
  require_matrix(w);
  switch (spec.kind) {
    case PenaltySelector::Kind::sq_box: {
      const double v =
          spectral_norm(w, NormSelector::box(spec.box_params, spec.dim));
      return 0.5 * v * v;
    }
    case PenaltySelector::Kind::sq_ksup: {
      const double v = spectral_norm(w, NormSelector::ksup(spec.k, spec.dim));
      return 0.5 * v * v;
    }
    case PenaltySelector::Kind::trace:
      return singular_values(w).sum();
    case PenaltySelector::Kind::elastic_net:
      return singular_values(w).sum() + 0.5 * spec.gamma * w.squaredNorm();
  }
  throw ParameterError("unknown penalty selector");
}

void ClusterParams::validate(Index t) const {
  if (!std::isfinite(eps_b) || !std::isfinite(eps_w) || !std::isfinite(eps_m))
    throw ParameterError("cluster parameters must be finite");
  if (!(eps_b > 0.0)) throw ParameterError("eps_b must be positive");
  if (!(eps_w >= eps_b)) throw ParameterError("eps_w >= eps_b is required");
  if (eps_m < 0.0) throw ParameterError("eps_m must be nonnegative");
  if (q < 1 || q > t) throw ParameterError("cluster count Q must lie in [1, T]");
}

BoxParams cluster_to_box(const ClusterParams& cp, Index t) {
  cp.validate(t);
  BoxParams p;
  p.a = 1.0 / cp.eps_w;
  p.b = 1.0 / cp.eps_b;
  p.c = static_cast<double>(t - cp.q + 1) / cp.eps_w +
        static_cast<double>(cp.q - 1) / cp.eps_b;
  p.validate(t);
  return p;
}

SpectralSplit spectral_box_split(const DenseMatrix& w, const BoxParams& params,
                                 Index dim) {
  require_matrix(w);
  const Index r = std::min(w.rows(), w.cols());
  const Index n = resolve_dim(dim, r);
  const SvdFactors f = thin_svd(w);
  const MoreauSplit ms = moreau_split(pad_to(f.sigma, n), params);
  SpectralSplit out;
  out.z = f.u * ms.z.head(r).asDiagonal() * f.v.transpose();
  out.u_part = w - out.z;
  return out;
}

}  // namespace boxnorm
