#include "boxnorm/prox_reference.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace boxnorm {

DenseVector prox_sq_ksup_reference(const DenseVector& w, const KSupportParams& kp,
                                   double lambda) {
  const Index d = w.size();
  if (d == 0) throw InputError("prox_sq_ksup_reference: empty input");
  if (!w.allFinite()) throw InputError("w has non-finite entries");
  kp.validate(d);
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw ParameterError("prox_sq_ksup_reference: lambda must be nonnegative");
  if (lambda == 0.0) return w;

  // Sorted magnitudes with original positions; ties keep input order.
  std::vector<std::pair<double, Index>> zi(static_cast<size_t>(d));
  for (Index i = 0; i < d; ++i) zi[static_cast<size_t>(i)] = {std::abs(w[i]), i};
  std::stable_sort(zi.begin(), zi.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });

  Index n = d;
  while (n > 0 && zi[static_cast<size_t>(n - 1)].first == 0.0) --n;

  DenseVector x = DenseVector::Zero(d);
  if (n == 0) return x;

  const auto z = [&](Index j) { return zi[static_cast<size_t>(j)].first; };

  if (kp.k >= n) {  // budget covers the whole support: pure scaling
    for (Index j = 0; j < n; ++j) {
      const Index i = zi[static_cast<size_t>(j)].second;
      x[i] = w[i] / (1.0 + lambda);
    }
    return x;
  }

  std::vector<double> ps(static_cast<size_t>(n) + 1, 0.0);
  for (Index j = 0; j < n; ++j) ps[static_cast<size_t>(j) + 1] = ps[static_cast<size_t>(j)] + z(j);

  const double kd = static_cast<double>(kp.k);
  const double tol = 1e-10;

  // Full scan over every candidate split, validating each; the valid split
  // must be unique up to boundary ties that yield the same point.
  struct Split {
    Index q;
    Index zn;
    double alpha;
  };
  std::vector<Split> valid;
  for (Index q = 0; q <= std::min<Index>(kp.k, n); ++q) {
    for (Index zn = 0; zn <= n - q; ++zn) {  // zn entries of the support at zero
      const Index m = n - q - zn;
      double alpha;
      if (m == 0) {
        if (q != kp.k) continue;
        // theta is exactly (1,..,1,0,..,0); need a separating multiplier.
        const double left = (1.0 + lambda) / z(q - 1);
        if (zn > 0 && left * z(q) - lambda > tol) continue;
        alpha = left;
      } else {
        const double mid_sum = ps[static_cast<size_t>(n - zn)] - ps[static_cast<size_t>(q)];
        if (!(mid_sum > 0.0)) continue;
        alpha = (kd - static_cast<double>(q) + static_cast<double>(m) * lambda) / mid_sum;
        if (q > 0 && alpha * z(q - 1) - lambda < 1.0 - tol) continue;
        if (alpha * z(q) - lambda >= 1.0 + tol) continue;
        if (alpha * z(n - zn - 1) - lambda <= -tol) continue;
        if (zn > 0 && alpha * z(n - zn) - lambda > tol) continue;
      }
      valid.push_back({q, zn, alpha});
    }
  }
  if (valid.empty())
    throw NumericError("prox_sq_ksup_reference: no valid split found", 0);

  const auto build = [&](const Split& s) {
    DenseVector out = DenseVector::Zero(d);
    for (Index j = 0; j < n - s.zn; ++j) {
      const Index i = zi[static_cast<size_t>(j)].second;
      const double theta =
          j < s.q ? 1.0 : std::clamp(s.alpha * z(j) - lambda, 0.0, 1.0);
      out[i] = theta * w[i] / (theta + lambda);
    }
    return out;
  };
  x = build(valid.front());
  for (size_t s = 1; s < valid.size(); ++s)
    if ((build(valid[s]) - x).cwiseAbs().maxCoeff() > 1e-9)
      throw NumericError("prox_sq_ksup_reference: ambiguous split", 0);
  return x;
}

}  // namespace boxnorm
