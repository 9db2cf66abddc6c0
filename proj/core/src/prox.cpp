#include "boxnorm/prox.hpp"

#include <algorithm>
#include <cmath>

#include "boxnorm/vecnorm.hpp"
#include "clamp_sum.hpp"

namespace boxnorm {

namespace {

constexpr double kSumGuard = 1e-8;

// Shared path of the two proxes: solve sum clamp(alpha z_i - lambda, lo, hi) =
// budget over the positive magnitudes, then assemble x and the certificate.
// Entries with w_i = 0 sit at theta = lo and map to x_i = 0. Requires
// lo + lambda > 0 so that every breakpoint is strictly positive.
ProxResult clamp_prox(const DenseVector& w, double lambda, double lo, double hi,
                      double budget, double interp_tol) {
  const Index d = w.size();
  ProxResult res;

  static thread_local detail::SortedMags m;
  detail::sort_magnitudes_into(w, false, m);
  const auto n = static_cast<Index>(m.z.size());
  // Dense inputs overwrite every coordinate below; pre-fill only for zeros.
  res.x.resize(d);
  res.cert.theta.resize(d);
  if (m.zeros > 0) {
    res.x.setZero();
    res.cert.theta.setConstant(lo);
  }
  if (n == 0) {
    res.cert.q = 0;
    res.cert.ell = d;
    res.cert.p_res = budget - static_cast<double>(d) * lo;
    return res;
  }

  const double target = budget - static_cast<double>(m.zeros) * lo;
  const detail::ClampSumRoot root =
      detail::solve_clamp_sum(m, lambda, lo, hi, target, interp_tol);
  const Index mid = root.t - root.q;

  if (!root.all_hi && !root.all_lo) {
    const double s_at = detail::clamp_sum_at(m, root.alpha, lambda, lo, hi) +
                        static_cast<double>(m.zeros) * lo;
    if (std::abs(s_at - budget) > kSumGuard * std::max(1.0, std::abs(budget)))
      throw NumericError("prox: interpolated multiplier misses the budget", 0);
  }

  res.cert.q = root.q;
  res.cert.ell = (n - root.t) + m.zeros;
  res.cert.p_res = budget - static_cast<double>(root.q) * hi -
                   static_cast<double>(res.cert.ell) * lo;
  if (mid == 0) res.cert.p_res = std::max(res.cert.p_res, 0.0);
  if (mid > 0 && !(res.cert.p_res > 0.0))
    throw NumericError("prox: middle segment with vanished budget", 0);

  // Exact multiplier for the middle block: sum_mid (alpha z_j - lambda) = p_res.
  const double mid_sum = m.mid_sum(root.q, root.t);
  res.cert.alpha =
      mid > 0 ? (res.cert.p_res + static_cast<double>(mid) * lambda) / mid_sum
              : root.alpha;

  double value_sq = 0.0;
  for (Index j = 0; j < n; ++j) {
    double theta;
    if (j < root.q)
      theta = hi;
    else if (j < root.t)
      theta = std::clamp(res.cert.alpha * m.z[j] - lambda, lo, hi);
    else
      theta = lo;
    const Index i = m.order[j];
    res.cert.theta[i] = theta;
    if (theta > 0.0) {
      res.x[i] = theta * w[i] / (theta + lambda);
      value_sq += res.x[i] * res.x[i] / theta;
    } else {
      res.x[i] = 0.0;
    }
  }
  res.cert.value = std::sqrt(value_sq);
  return res;
}

Index integer_rho(const DenseVector& w, const BoxParams& params) {
  const double rho = params.rho(w.size());
  const double k = std::round(rho);
  if (std::abs(rho - k) > 1e-9 * std::max(1.0, std::abs(rho)))
    throw ParameterError("box parameters must satisfy rho = k integer (use from_k)");
  return static_cast<Index>(k);
}

}  // namespace

ProxResult prox_sq_box(const DenseVector& w, const BoxParams& params,
                       const ProxConfig& cfg) {
  const Index d = w.size();
  if (d == 0) throw InputError("prox_sq_box: empty input");
  detail::require_finite(w, "w");
  params.validate(d);
  cfg.validate();
  // lambda = 0 is the identity map; the certificate is the norm's theta.
  ProxResult res = clamp_prox(w, cfg.lambda, params.a, params.b, params.c,
                              cfg.interp_tol);
  if (cfg.lambda == 0.0) res.x = w;
  return res;
}

ProxResult prox_sq_ksup(const DenseVector& w, const KSupportParams& kp,
                        const ProxConfig& cfg) {
  const Index d = w.size();
  if (d == 0) throw InputError("prox_sq_ksup: empty input");
  detail::require_finite(w, "w");
  kp.validate(d);
  cfg.validate();
  if (cfg.lambda == 0.0) {
    // Identity map. The certificate theta is the norm's minimizer over
    // {0 <= theta <= 1, sum theta <= k}: ones on the top-q block, then
    // (k - q) z_i / tail on the rest of the support, zero off support.
    ProxResult res;
    res.x = w;
    const detail::SortedMags m = detail::sort_magnitudes(w, false);
    const KSupportResult ks = k_support_norm(w, kp);
    res.cert.value = ks.value;
    res.cert.q = ks.q;
    res.cert.ell = m.zeros;
    res.cert.theta = DenseVector::Zero(d);
    const auto n = static_cast<Index>(m.z.size());
    const double tail = m.ss[std::min(ks.q, n)];
    res.cert.p_res = static_cast<double>(kp.k - ks.q);
    res.cert.alpha = tail > 0.0 ? res.cert.p_res / tail : 0.0;
    for (Index j = 0; j < n; ++j)
      res.cert.theta[m.order[j]] =
          j < ks.q ? 1.0 : std::clamp(res.cert.alpha * m.z[j], 0.0, 1.0);
    return res;
  }
  return clamp_prox(w, cfg.lambda, 0.0, 1.0, static_cast<double>(kp.k),
                    cfg.interp_tol);
}

DenseVector grad_sq_box(const DenseVector& w, const BoxParams& params,
                        const ProxConfig& cfg) {
  const Index d = w.size();
  if (d == 0) throw InputError("grad_sq_box: empty input");
  detail::require_finite(w, "w");
  params.validate(d);
  cfg.validate();
  if (params.a == params.b) return (2.0 / params.a) * w;

  const Index k = integer_rho(w, params);
  if (k == 0) return (2.0 / params.a) * w;  // c = d*a: the norm is ||.||_2 / sqrt(a)
  KSupportParams kp{k};
  ProxConfig inner{params.a / (params.b - params.a), cfg.interp_tol};
  const ProxResult p = prox_sq_ksup(w, kp, inner);
  return (2.0 / params.a) * (w - p.x);
}

MoreauSplit moreau_split(const DenseVector& w, const BoxParams& params) {
  const Index d = w.size();
  if (d == 0) throw InputError("moreau_split: empty input");
  detail::require_finite(w, "w");
  params.validate(d);
  if (!(params.a < params.b))
    throw ParameterError("moreau_split: requires a < b");

  const Index k = integer_rho(w, params);
  MoreauSplit sp;
  if (k == 0) {  // c = d*a: the k-support component vanishes
    sp.z = DenseVector::Zero(d);
    sp.u = w;
    return sp;
  }
  KSupportParams kp{k};
  ProxConfig inner{params.a / (params.b - params.a), 1e-12};
  sp.z = prox_sq_ksup(w, kp, inner).x;
  sp.u = w - sp.z;
  return sp;
}

}  // namespace boxnorm
