#pragma once

// Internal engine shared by box_norm, prox_sq_box and prox_sq_ksup.
//
// All three reduce to solving, over alpha >= 0,
//     S(alpha) = sum_i clamp(alpha * z_i - shift, lo, hi) = target
// where z holds the strictly positive input magnitudes. S is continuous,
// piecewise linear and nondecreasing, with breakpoints (lo+shift)/z_i and
// (hi+shift)/z_i. Both breakpoint families are already sorted when z is
// sorted descending, so a linear merge replaces a second sort; the root is
// bracketed by binary search over the merged grid and recovered by linear
// interpolation inside the bracket (left endpoint on flat segments).

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

#include "boxnorm/types.hpp"

namespace boxnorm::detail {

struct SortedMags {
  std::vector<double> z;    // input magnitudes, descending, zeros dropped
  std::vector<double> ps2;  // ps2[i] = z[0]^2 + .. + z[i-1]^2 (norm paths only)
  std::vector<double> ss;   // ss[i] = z[i] + .. + z[n-1] (backward accumulation)
  std::vector<Index> order; // original index of z[j]
  Index zeros = 0;

  // Sum of the middle segment z[q..t). Suffix sums keep this well
  // conditioned: a prefix-sum difference ps[t] - ps[q] carries the rounding
  // error of the large leading entries, which can exceed a tiny middle
  // segment outright, while everything below the middle is smaller than the
  // middle itself.
  double mid_sum(Index q, Index t) const { return ss[q] - ss[t]; }
};

// In-place variant so hot callers can reuse the vectors' capacity across
// calls; the pair scratch is thread-local for the same reason.
inline void sort_magnitudes_into(const DenseVector& w, bool with_squares,
                                 SortedMags& m) {
  const Index d = w.size();
  static thread_local std::vector<std::pair<double, Index>> zi;
  zi.clear();
  zi.reserve(static_cast<size_t>(d));
  for (Index i = 0; i < d; ++i)
    if (w[i] != 0.0) zi.emplace_back(std::abs(w[i]), i);
  m.zeros = d - static_cast<Index>(zi.size());
  // descending magnitude, ties in input order (as a stable sort would keep)
  std::sort(zi.begin(), zi.end(), [](const auto& x, const auto& y) {
    return x.first != y.first ? x.first > y.first : x.second < y.second;
  });
  const size_t n = zi.size();
  m.z.resize(n);
  m.order.resize(n);
  m.ss.resize(n + 1);
  for (size_t j = 0; j < n; ++j) {
    m.z[j] = zi[j].first;
    m.order[j] = zi[j].second;
  }
  if (with_squares) {
    m.ps2.resize(n + 1);
    m.ps2[0] = 0.0;
    for (size_t j = 0; j < n; ++j) m.ps2[j + 1] = m.ps2[j] + m.z[j] * m.z[j];
  } else {
    m.ps2.clear();
  }
  m.ss[n] = 0.0;
  for (size_t j = n; j-- > 0;) m.ss[j] = m.ss[j + 1] + m.z[j];
}

inline SortedMags sort_magnitudes(const DenseVector& w, bool with_squares = true) {
  SortedMags m;
  sort_magnitudes_into(w, with_squares, m);
  return m;
}

struct ClampSumRoot {
  double alpha = 0.0;  // root of S(alpha) = target (left endpoint if flat there)
  Index q = 0;         // entries of z clamped at hi
  Index t = 0;         // entries of z not clamped at lo (q <= t); middle = t - q
  bool all_hi = false; // target >= n*hi: budget slack, every entry at hi
  bool all_lo = false; // target <= n*lo: every entry at lo
};

// S(alpha) restricted to the positive magnitudes, via prefix sums: O(log n).
inline double clamp_sum_at(const SortedMags& m, double alpha, double shift, double lo,
                           double hi) {
  const auto n = static_cast<Index>(m.z.size());
  const double hi_thr = (hi + shift) / alpha;
  const double lo_thr = (lo + shift) / alpha;
  // z descending: first q entries >= hi_thr, first t entries > lo_thr.
  const Index q = std::lower_bound(m.z.begin(), m.z.end(), hi_thr,
                                   [](double zi, double v) { return zi >= v; }) -
                  m.z.begin();
  const Index t = std::lower_bound(m.z.begin(), m.z.end(), lo_thr,
                                   [](double zi, double v) { return zi > v; }) -
                  m.z.begin();
  return static_cast<double>(q) * hi + alpha * m.mid_sum(q, t) -
         static_cast<double>(t - q) * shift + static_cast<double>(n - t) * lo;
}

// Solves S(alpha) = target. Requires n >= 1, 0 <= lo <= hi, lo + shift > 0 or
// hi + shift > 0, and n*lo <= target <= n*hi up to the caller's tolerance.
inline ClampSumRoot solve_clamp_sum(const SortedMags& m, double shift, double lo,
                                    double hi, double target, double rel_tol) {
  const auto n = static_cast<Index>(m.z.size());
  const double nd = static_cast<double>(n);
  ClampSumRoot root;
  const double scale = std::max({1.0, std::abs(target), nd * hi});
  const double tol = rel_tol * scale;

  if (target >= nd * hi - tol) {
    root.all_hi = true;
    root.q = n;
    root.t = n;
    root.alpha = (hi + shift) / m.z[n - 1];  // smallest alpha with S = n*hi
    return root;
  }
  if (target <= nd * lo + tol) {
    root.all_lo = true;
    root.q = 0;
    root.t = 0;
    root.alpha = 0.0;
    return root;
  }

  // Bracket the root between adjacent breakpoints of the merged grid without
  // materializing the merge: both families ascend as z descends, so a binary
  // search per family finds the smallest breakpoint with S >= target and the
  // largest with S < target.
  const auto blo = [&](Index i) { return (lo + shift) / m.z[static_cast<size_t>(i)]; };
  const auto bhi = [&](Index j) { return (hi + shift) / m.z[static_cast<size_t>(j)]; };
  const auto s_at = [&](double alpha) {
    return clamp_sum_at(m, alpha, shift, lo, hi);
  };
  const auto first_ge = [&](const auto& b) {
    Index lo_i = 0, hi_i = n;  // returns n when every S(b(i)) < target
    while (lo_i < hi_i) {
      const Index mid = (lo_i + hi_i) / 2;
      if (s_at(b(mid)) >= target)
        hi_i = mid;
      else
        lo_i = mid + 1;
    }
    return lo_i;
  };
  // S(blo(0)) = n*lo < target and S(bhi(n-1)) = n*hi >= target after the
  // boundary branches above, so i_r >= 1 and j_r <= n - 1.
  const Index i_r = first_ge(blo);
  const Index j_r = first_ge(bhi);
  assert(i_r >= 1 && j_r <= n - 1);
  const double right = i_r < n ? std::min(blo(i_r), bhi(j_r)) : bhi(j_r);
  const double s_right = s_at(right);
  if (s_right <= target + tol && s_right >= target - tol) {
    root.alpha = right;  // exact hit: left endpoint of any flat run
  } else {
    double aL = blo(i_r - 1);
    if (j_r > 0) aL = std::max(aL, bhi(j_r - 1));
    const double sL = s_at(aL);
    if (s_right <= sL + tol) {
      root.alpha = aL;  // flat segment: take the left endpoint
    } else {
      root.alpha = aL + (target - sL) / (s_right - sL) * (right - aL);
    }
  }

  const double hi_thr = (hi + shift) / root.alpha;
  const double lo_thr = (lo + shift) / root.alpha;
  const double ztol = 1.0 + 1e-12;
  root.q = std::lower_bound(m.z.begin(), m.z.end(), hi_thr / ztol,
                            [](double zi, double v) { return zi >= v; }) -
           m.z.begin();
  root.t = std::lower_bound(m.z.begin(), m.z.end(), lo_thr * ztol,
                            [](double zi, double v) { return zi > v; }) -
           m.z.begin();
  if (root.t < root.q) root.t = root.q;
  return root;
}

}  // namespace boxnorm::detail
