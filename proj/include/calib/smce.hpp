#pragma once

// smooth weighted calibration error: the exact value of
//
//   max  sum_i z_i w_i
//   s.t. |w_i| <= 1             for every distinct prediction p_i
//        |w_{i+1} - w_i| <= p_{i+1} - p_i
//
// where z_i = weight_i * (ybar_i - p_i) are the grouped residuals.  this is
// the restriction of 1-Lipschitz [-1,1]-valued weight functions to the
// support of the data.
//
// the value is computed through the LP dual.  introducing a multiplier g_i
// for each slack constraint (g_0 = g_k = 0) gives
//
//   min_g  sum_i d_i |g_i| + sum_i | z_i + g_{i-1} - g_i |
//
// a convex piecewise-linear problem.  at an optimal vertex every g_i equals
// S_i - S_c for some anchor c, where S are the prefix sums of z (each
// coordinate is either pinned at zero or chained to a neighbor through a
// tight |z_i + g_{i-1} - g_i| = 0 kink, and the chains telescope to prefix-sum
// differences).  maintaining the best anchor per position with a sorted
// prefix/suffix minimum scan solves the dual exactly in O(k^2) using only
// sums, absolute values and comparisons -- no feasibility tolerance enters.
//
// the witness weight vector is recovered from complementary slackness:
//   t_i = z_i + g_{i-1} - g_i != 0  pins  w_i = sign(t_i)
//   g_i > 0                        forces w_{i+1} = w_i - d_i
//   g_i < 0                        forces w_{i+1} = w_i + d_i
// remaining coordinates are filled by feasible-interval propagation; any
// feasible completion attains the optimum, and the result is re-verified
// against the dual value to 1e-9 before it is returned.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "calib/common.hpp"
#include "calib/samples.hpp"

namespace calib {

struct SmceResult {
  double value = 0.0;
  std::vector<double> weights;  // optimal w, one per distinct prediction
};

namespace detail {

struct SmceDual {
  double value = 0.0;
  std::vector<double> g;  // optimal multipliers, size k-1 (k = #groups)
};

inline SmceDual solve_smce_dual(const std::vector<double>& z, const std::vector<double>& d) {
  const std::size_t k = z.size();
  SmceDual out;
  if (k == 0) return out;
  std::vector<double> S(k + 1, 0.0);
  for (std::size_t i = 0; i < k; ++i) S[i + 1] = S[i] + z[i];
  if (k == 1) {
    out.value = std::fabs(z[0]);
    return out;
  }

  // anchors sorted by prefix-sum value; dp[c] = best cost with g_i = S_i - S[c]
  std::vector<std::size_t> order(k + 1);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return S[a] < S[b]; });

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dp(k + 1), ndp(k + 1);
  // anchor indices fit in 16 bits because smce() caps the group count
  std::vector<std::vector<std::uint16_t>> back(k, std::vector<std::uint16_t>(k + 1, 0));

  // layer i = 1: transition from the forced boundary g_0 = 0 (anchor 0)
  for (std::size_t c = 0; c <= k; ++c)
    dp[c] = std::fabs(S[c] - S[0]) + d[0] * std::fabs(S[1] - S[c]);
  for (std::size_t c = 0; c <= k; ++c) back[0][c] = 0;

  for (std::size_t i = 2; i <= k - 1; ++i) {
    // best[c'] = min over c of dp[c] + |S[c'] - S[c]|, via two sorted sweeps
    std::vector<double> best(k + 1, inf);
    std::vector<std::size_t> arg(k + 1, 0);
    double run = inf;
    std::size_t run_arg = 0;
    for (std::size_t idx = 0; idx <= k; ++idx) {  // S ascending: c with S[c] <= S[c']
      const std::size_t c = order[idx];
      if (dp[c] - S[c] < run) {
        run = dp[c] - S[c];
        run_arg = c;
      }
      if (run + S[c] < best[c]) {
        best[c] = run + S[c];
        arg[c] = run_arg;
      }
    }
    run = inf;
    run_arg = 0;
    for (std::size_t idx = k + 1; idx-- > 0;) {  // S descending: c with S[c] >= S[c']
      const std::size_t c = order[idx];
      if (dp[c] + S[c] < run) {
        run = dp[c] + S[c];
        run_arg = c;
      }
      if (run - S[c] < best[c]) {
        best[c] = run - S[c];
        arg[c] = run_arg;
      }
    }
    for (std::size_t c = 0; c <= k; ++c) {
      ndp[c] = best[c] + d[i - 1] * std::fabs(S[i] - S[c]);
      back[i - 1][c] = static_cast<std::uint16_t>(arg[c]);
    }
    dp.swap(ndp);
  }

  // close with the forced boundary g_k = 0: cost |S[k] - S[c]|
  double bestv = inf;
  std::size_t bestc = 0;
  for (std::size_t c = 0; c <= k; ++c) {
    const double v = dp[c] + std::fabs(S[k] - S[c]);
    if (v < bestv) {
      bestv = v;
      bestc = c;
    }
  }
  out.value = bestv;
  out.g.assign(k - 1, 0.0);
  std::size_t c = bestc;
  for (std::size_t i = k - 1; i >= 1; --i) {
    out.g[i - 1] = S[i] - S[c];
    c = back[i - 1][c];
    if (i == 1) break;
  }
  return out;
}

}  // namespace detail

// exact smooth weighted calibration error with witness weights.
// input: grouped data with strictly increasing predictions.
inline SmceResult smce(const GroupedData& data) {
  const std::size_t k = data.size();
  SmceResult res;
  if (k == 0) return res;
  if (k > 4096) throw unsupported_error("smce witness recovery is capped at 4096 groups");
  std::vector<double> z(k), d(k > 1 ? k - 1 : 0);
  for (std::size_t i = 0; i < k; ++i) {
    z[i] = data[i].w * (data[i].ybar - data[i].p);
    if (i + 1 < k) {
      d[i] = data[i + 1].p - data[i].p;
      if (!(d[i] > 0.0)) throw input_error("grouped predictions must be strictly increasing");
    }
  }

  const detail::SmceDual dual = detail::solve_smce_dual(z, d);
  res.value = dual.value;

  // ---- witness recovery ----
  constexpr double pin_tol = 1e-12;
  std::vector<double> lo(k, -1.0), hi(k, 1.0);
  const auto g_at = [&](std::size_t i) {  // g_0 = g_k = 0 conventions
    return (i == 0 || i >= k) ? 0.0 : dual.g[i - 1];
  };
  for (std::size_t i = 0; i < k; ++i) {
    const double t = z[i] + g_at(i) - g_at(i + 1);
    if (t > pin_tol) lo[i] = hi[i] = 1.0;
    else if (t < -pin_tol) lo[i] = hi[i] = -1.0;
  }
  // forward feasible-interval propagation through the increment constraints,
  // with the tight ones forced by the sign of g
  for (std::size_t i = 0; i + 1 < k; ++i) {
    const double g = g_at(i + 1);
    double a = -d[i], b = d[i];
    if (g > pin_tol) a = b = -d[i];
    else if (g < -pin_tol) a = b = d[i];
    lo[i + 1] = std::max(lo[i + 1], lo[i] + a);
    hi[i + 1] = std::min(hi[i + 1], hi[i] + b);
  }
  for (std::size_t i = k - 1; i-- > 0;) {
    const double g = g_at(i + 1);
    double a = -d[i], b = d[i];
    if (g > pin_tol) a = b = -d[i];
    else if (g < -pin_tol) a = b = d[i];
    lo[i] = std::max(lo[i], lo[i + 1] - b);
    hi[i] = std::min(hi[i], hi[i + 1] - a);
  }
  // assign left to right: each coordinate is chosen inside its propagated
  // interval intersected with the increment window around the previous pick
  // (independent endpoint picks could break the smoothness constraint
  // between two unpinned coordinates).  path consistency guarantees the
  // window is nonempty up to rounding.
  res.weights.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    double wlo = lo[i], whi = hi[i];
    if (i > 0) {
      const double g = g_at(i);
      double a = -d[i - 1], b = d[i - 1];
      if (g > pin_tol) a = b = -d[i - 1];
      else if (g < -pin_tol) a = b = d[i - 1];
      wlo = std::max(wlo, res.weights[i - 1] + a);
      whi = std::min(whi, res.weights[i - 1] + b);
    }
    if (wlo > whi) wlo = whi = 0.5 * (wlo + whi);  // rounding squeeze
    res.weights[i] = z[i] >= 0.0 ? whi : wlo;
  }
  // re-verify: the primal witness must reproduce the dual optimum
  double primal = 0.0;
  for (std::size_t i = 0; i < k; ++i) primal += z[i] * res.weights[i];
  if (std::fabs(primal - res.value) > kDefaultTol)
    throw internal_error("smce witness drifted from the optimal value");
  for (std::size_t i = 0; i + 1 < k; ++i)
    if (std::fabs(res.weights[i + 1] - res.weights[i]) > d[i] + 1e-9)
      throw internal_error("smce witness violates the smoothness constraint");
  return res;
}

inline SmceResult smce(const LabeledSampleSet& data) { return smce(grouped_view(data)); }
inline SmceResult smce(const FiniteJointDistribution& dist) { return smce(grouped_view(dist)); }

}  // namespace calib
