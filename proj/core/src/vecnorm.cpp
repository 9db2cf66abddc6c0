#include "boxnorm/vecnorm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "clamp_sum.hpp"

namespace boxnorm {

namespace {

constexpr double kInterpRelTol = 1e-12;
constexpr double kSumGuard = 1e-8;

NormDecomposition uniform_theta(const DenseVector& w, const BoxParams& params) {
  NormDecomposition dec;
  dec.theta = DenseVector::Constant(w.size(), params.a);
  dec.q = 0;
  dec.ell = w.size();
  dec.p_res = params.c - static_cast<double>(w.size()) * params.a;
  dec.alpha = 0.0;
  dec.value = w.norm() / std::sqrt(params.a);
  return dec;
}

}  // namespace

NormDecomposition box_norm(const DenseVector& w, const BoxParams& params) {
  const Index d = w.size();
  if (d == 0) throw InputError("box_norm: empty input");
  detail::require_finite(w, "w");
  params.validate(d);
  const double a = params.a, b = params.b, c = params.c;

  if (a == b) return uniform_theta(w, params);

  const detail::SortedMags m = detail::sort_magnitudes(w);
  const auto n = static_cast<Index>(m.z.size());
  if (n == 0) return uniform_theta(w, params);  // w = 0: theta = a by convention

  const double target = c - static_cast<double>(m.zeros) * a;
  const detail::ClampSumRoot root =
      detail::solve_clamp_sum(m, 0.0, a, b, target, kInterpRelTol);

  NormDecomposition dec;
  dec.theta = DenseVector::Constant(d, a);
  dec.q = root.q;
  dec.ell = (n - root.t) + m.zeros;
  dec.p_res = c - static_cast<double>(dec.q) * b - static_cast<double>(dec.ell) * a;
  const Index mid = root.t - root.q;

  if (!root.all_hi && !root.all_lo) {
    const double s_at = detail::clamp_sum_at(m, root.alpha, 0.0, a, b) +
                        static_cast<double>(m.zeros) * a;
    if (std::abs(s_at - c) > kSumGuard * std::max(1.0, std::abs(c)))
      throw NumericError("box_norm: interpolated multiplier misses the budget", 0);
  }

  double mid_sum = m.mid_sum(root.q, root.t);
  if (mid == 0 && !(dec.p_res > 0.0)) dec.p_res = 0.0;
  if (mid > 0 && !(dec.p_res > 0.0))
    throw NumericError("box_norm: middle segment with vanished budget", 0);

  double value_sq = m.ps2[root.q] / b + (m.ps2[n] - m.ps2[root.t]) / a;
  if (mid > 0) value_sq += mid_sum * mid_sum / dec.p_res;
  dec.value = std::sqrt(value_sq);
  dec.alpha = mid > 0 ? dec.p_res / mid_sum : root.alpha;

  for (Index j = 0; j < root.q; ++j) dec.theta[m.order[j]] = b;
  for (Index j = root.q; j < root.t; ++j)
    dec.theta[m.order[j]] = std::clamp(dec.alpha * m.z[j], a, b);
  return dec;
}

KSupportResult k_support_norm(const DenseVector& w, const KSupportParams& kp) {
  const Index d = w.size();
  if (d == 0) throw InputError("k_support_norm: empty input");
  detail::require_finite(w, "w");
  kp.validate(d);

  const detail::SortedMags m = detail::sort_magnitudes(w);
  const auto n = static_cast<Index>(m.z.size());
  if (n == 0) return {0.0, 0};

  const auto z_at = [&](Index j) { return j < n ? m.z[j] : 0.0; };  // |w|_[j+1]
  for (Index q = 0; q < kp.k; ++q) {
    const double tail = m.ss[std::min(q, n)];
    const double ratio = tail / static_cast<double>(kp.k - q);
    const bool left_ok = q == 0 || z_at(q - 1) >= ratio * (1.0 - 1e-12);
    // ">=" with relative slack: adjacent splits agree exactly at the boundary,
    // and the slack also admits all-zero tails (ratio == next magnitude == 0).
    const bool right_ok = ratio >= z_at(q) * (1.0 - 1e-12);
    if (left_ok && right_ok) {
      const double value_sq =
          m.ps2[std::min(q, n)] + ratio * ratio * static_cast<double>(kp.k - q);
      return {std::sqrt(value_sq), q};
    }
  }
  throw NumericError("k_support_norm: no valid split found", 0);
}

double dual_box_norm(const DenseVector& u, const BoxParams& params) {
  const Index d = u.size();
  if (d == 0) throw InputError("dual_box_norm: empty input");
  detail::require_finite(u, "u");
  params.validate(d);
  const double a = params.a, b = params.b;
  if (a == b) return std::sqrt(a) * u.norm();

  double rho = params.rho(d);
  rho = std::clamp(rho, 0.0, static_cast<double>(d));
  auto k = static_cast<Index>(std::floor(rho + 1e-9));
  if (k > d) k = d;
  const double frac = std::max(rho - static_cast<double>(k), 0.0);

  std::vector<double> z(u.size());
  for (Index i = 0; i < d; ++i) z[static_cast<size_t>(i)] = std::abs(u[i]);
  std::sort(z.begin(), z.end(), std::greater<>());

  double topk_sq = 0.0;
  for (Index i = 0; i < k; ++i) topk_sq += z[static_cast<size_t>(i)] * z[static_cast<size_t>(i)];
  const double next_sq = k < d ? z[static_cast<size_t>(k)] * z[static_cast<size_t>(k)] : 0.0;
  return std::sqrt(a * u.squaredNorm() + (b - a) * (topk_sq + frac * next_sq));
}

double dual_k_support_norm(const DenseVector& u, const KSupportParams& kp) {
  const Index d = u.size();
  if (d == 0) throw InputError("dual_k_support_norm: empty input");
  detail::require_finite(u, "u");
  kp.validate(d);
  std::vector<double> z(u.size());
  for (Index i = 0; i < d; ++i) z[static_cast<size_t>(i)] = std::abs(u[i]);
  std::nth_element(z.begin(), z.begin() + (kp.k - 1), z.end(), std::greater<>());
  double s = 0.0;
  for (Index i = 0; i < kp.k; ++i) s += z[static_cast<size_t>(i)] * z[static_cast<size_t>(i)];
  return std::sqrt(s);
}

double dual_ksup_q_norm(const DenseVector& u, const KSupportParams& kp, double q) {
  const Index d = u.size();
  if (d == 0) throw InputError("dual_ksup_q_norm: empty input");
  detail::require_finite(u, "u");
  kp.validate(d);
  if (!(q >= 1.0)) throw ParameterError("dual_ksup_q_norm: q must lie in [1, inf]");

  std::vector<double> z(u.size());
  for (Index i = 0; i < d; ++i) z[static_cast<size_t>(i)] = std::abs(u[i]);
  std::sort(z.begin(), z.end(), std::greater<>());
  if (std::isinf(q) || z[0] == 0.0) return z[0];

  double s = 0.0;
  for (Index i = 0; i < kp.k; ++i) s += std::pow(z[static_cast<size_t>(i)] / z[0], q);
  return z[0] * std::pow(s, 1.0 / q);
}

double ksup_inf_norm(const DenseVector& w, const KSupportParams& kp) {
  const Index d = w.size();
  if (d == 0) throw InputError("ksup_inf_norm: empty input");
  detail::require_finite(w, "w");
  kp.validate(d);
  return std::max(w.lpNorm<Eigen::Infinity>(),
                  w.lpNorm<1>() / static_cast<double>(kp.k));
}

double polyhedral_dual_norm(const DenseVector& u, const VertexSet& vertices) {
  const Index d = u.size();
  if (d == 0) throw InputError("polyhedral_dual_norm: empty input");
  detail::require_finite(u, "u");
  vertices.validate(d);
  double best = 0.0;
  const DenseVector u2 = u.array().square();
  for (const auto& g : vertices.vertices) best = std::max(best, g.dot(u2));
  return std::sqrt(best);
}

double overlap_group_lasso_oracle(const DenseVector& w,
                                  const std::vector<std::vector<Index>>& groups) {
  const Index d = w.size();
  if (d == 0) throw InputError("overlap_group_lasso_oracle: empty input");
  if (d > 8) throw ScaleError("overlap_group_lasso_oracle: supported only for d <= 8");
  detail::require_finite(w, "w");
  if (groups.empty()) throw ParameterError("overlap_group_lasso_oracle: no groups");

  std::vector<Index> cover_count(static_cast<size_t>(d), 0);
  for (const auto& g : groups) {
    if (g.empty()) throw ParameterError("overlap_group_lasso_oracle: empty group");
    for (Index i : g) {
      if (i < 0 || i >= d)
        throw ParameterError("overlap_group_lasso_oracle: group index out of range");
      ++cover_count[static_cast<size_t>(i)];
    }
  }
  for (Index i = 0; i < d; ++i)
    if (cover_count[static_cast<size_t>(i)] == 0)
      throw ParameterError("overlap_group_lasso_oracle: groups must cover all coordinates");

  // Quadratic variational form of the infimal convolution:
  //   Omega(w)^2 = min over the simplex {lambda >= 0, sum = 1} of
  //                sum_i w_i^2 / eta_i,   eta_i = sum over groups containing i.
  // Solved by projected gradient over the simplex, multiple starts.
  const size_t ng = groups.size();
  const DenseVector wsq = w.array().square();

  const auto eta_of = [&](const DenseVector& lam) {
    DenseVector eta = DenseVector::Zero(d);
    for (size_t g = 0; g < ng; ++g)
      for (Index i : groups[g]) eta[i] += lam[static_cast<Index>(g)];
    return eta;
  };
  const auto value = [&](const DenseVector& lam) {
    const DenseVector eta = eta_of(lam);
    double f = 0.0;
    for (Index i = 0; i < d; ++i) {
      if (wsq[i] == 0.0) continue;
      if (eta[i] <= 0.0) return std::numeric_limits<double>::infinity();
      f += wsq[i] / eta[i];
    }
    return f;
  };
  const auto project_simplex = [&](DenseVector lam) {
    std::vector<double> u(lam.data(), lam.data() + lam.size());
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cssv = 0.0;
    size_t rho = 0;
    double rho_sum = 0.0;
    for (size_t j = 0; j < u.size(); ++j) {
      cssv += u[j];
      if (u[j] - (cssv - 1.0) / static_cast<double>(j + 1) > 0.0) {
        rho = j + 1;
        rho_sum = cssv;
      }
    }
    const double tau = (rho_sum - 1.0) / static_cast<double>(rho);
    return (lam.array() - tau).cwiseMax(0.0).matrix().eval();
  };

  double best = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::exponential_distribution<double> expo(1.0);
  for (int start = 0; start < 5; ++start) {
    DenseVector lam(static_cast<Index>(ng));
    if (start == 0) {
      lam.setConstant(1.0 / static_cast<double>(ng));
    } else {
      for (Index g = 0; g < lam.size(); ++g) lam[g] = expo(rng);
      lam /= lam.sum();
    }
    double f = value(lam);
    double step = 1.0 / static_cast<double>(ng);
    for (long it = 0; it < 200000; ++it) {
      const DenseVector eta = eta_of(lam);
      DenseVector grad = DenseVector::Zero(static_cast<Index>(ng));
      for (size_t g = 0; g < ng; ++g) {
        double s = 0.0;
        for (Index i : groups[g])
          if (wsq[i] != 0.0) s -= wsq[i] / (eta[i] * eta[i]);
        grad[static_cast<Index>(g)] = s;
      }
      bool accepted = false;
      for (int bt = 0; bt < 60; ++bt) {
        const DenseVector trial = project_simplex(lam - step * grad);
        const double ft = value(trial);
        if (ft < f - 1e-16 * std::max(1.0, std::abs(f))) {
          lam = trial;
          f = ft;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
      step = std::min(step * 1.5, 1e6);
    }
    best = std::min(best, f);
  }
  return std::sqrt(best);
}

}  // namespace boxnorm
