#pragma once

// agnostic learning over threshold hypotheses supported on interval unions.
//
// the core routine maximizes the sum of a real-valued score sequence over
// unions of at most r contiguous index intervals in one dynamic-programming
// sweep.  with Z the prefix sums, the tableau rows are
//
//   M(s, j) = max over l < j of ( Q(s-1, l) - Z(l) )     best place to open
//                                                        the s-th interval
//   B(s, j) = Z(j) + M(s, j)                             best value with an
//                                                        interval ending at j
//   Q(s, n) = max( Q(s, n-1), Q(s-1, n), B(s, n) )       best with <= s
//                                                        intervals in prefix n
//
// Q(0, .) = Q(., 0) = 0 (the empty union is allowed), so every entry is
// nonnegative and rows are pointwise nondecreasing in s.  O(n r) time and
// memory, with argmax bookkeeping for support reconstruction.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "calib/common.hpp"
#include "calib/postprocess.hpp"
#include "calib/samples.hpp"

namespace calib {

struct DpTableau {
  std::vector<double> Z;               // prefix sums, size n+1
  std::vector<std::vector<double>> Q;  // (r+1) x (n+1)
  std::vector<std::vector<double>> M;  // (r+1) x (n+1); row 0 unused
  std::vector<std::vector<double>> B;  // (r+1) x (n+1); row 0 unused
};

struct UnionMaxResult {
  double value = 0.0;
  // chosen index intervals, 0-based inclusive [lo, hi], in increasing order
  std::vector<std::pair<std::size_t, std::size_t>> intervals;
  DpTableau tableau;
};

inline UnionMaxResult dp_max_union(const std::vector<double>& z, int r) {
  if (r < 1) throw input_error("interval budget must be at least 1");
  const std::size_t n = z.size();
  const double neg = -std::numeric_limits<double>::infinity();

  UnionMaxResult res;
  auto& T = res.tableau;
  T.Z.assign(n + 1, 0.0);
  for (std::size_t i = 1; i <= n; ++i) T.Z[i] = T.Z[i - 1] + z[i - 1];
  const std::size_t rows = static_cast<std::size_t>(r) + 1;
  T.Q.assign(rows, std::vector<double>(n + 1, 0.0));
  T.M.assign(rows, std::vector<double>(n + 1, neg));
  T.B.assign(rows, std::vector<double>(n + 1, neg));
  // argmax l for each M(s, j), for reconstructing where an interval opened
  std::vector<std::vector<std::size_t>> open_at(rows, std::vector<std::size_t>(n + 1, 0));

  for (std::size_t s = 1; s < rows; ++s) {
    double run = neg;
    std::size_t run_arg = 0;
    for (std::size_t j = 1; j <= n; ++j) {
      const double cand = T.Q[s - 1][j - 1] - T.Z[j - 1];
      if (cand > run) {
        run = cand;
        run_arg = j - 1;
      }
      T.M[s][j] = run;
      open_at[s][j] = run_arg;
      T.B[s][j] = T.Z[j] + run;
      T.Q[s][j] = std::max({T.Q[s][j - 1], T.Q[s - 1][j], T.B[s][j]});
    }
  }
  res.value = T.Q[r][n];

  // walk back: prefer trimming the prefix, then dropping unused budget, and
  // only then closing an interval, so the reported support is minimal
  std::size_t s = static_cast<std::size_t>(r), j = n;
  while (s > 0 && j > 0 && T.Q[s][j] > 0.0) {
    if (T.Q[s][j] == T.Q[s][j - 1]) {
      --j;
    } else if (T.Q[s][j] == T.Q[s - 1][j]) {
      --s;
    } else {
      const std::size_t l = open_at[s][j];
      res.intervals.emplace_back(l, j - 1);  // 0-based inclusive
      j = l;
      --s;
    }
  }
  std::reverse(res.intervals.begin(), res.intervals.end());
  return res;
}

enum class LabelMode { pm1, y_minus_v };

struct LearnedHypothesis {
  ThresholdHypothesis support;
  double objective = 0.0;   // sum over samples of label * hypothesis(p)
  double error_rate = 0.0;  // only meaningful for +-1 labels
  std::vector<std::pair<std::size_t, std::size_t>> index_intervals;
};

// best threshold hypothesis with at most r positive intervals for labeled
// data: maximizes sum_i label_i * h(p_i), where label is 2y-1 (pm1 mode) or
// y - v.  for +-1 labels the objective determines the error rate exactly:
// err = 1/2 - objective / (2m).
inline LearnedHypothesis agnostic_learn(const LabeledSampleSet& data, int r, LabelMode mode,
                                        double v = 0.0) {
  data.validate();
  const auto groups = data.grouped();
  std::vector<double> z;
  z.reserve(groups.size());
  double total = 0.0;
  for (const auto& g : groups) {
    const double zg = mode == LabelMode::pm1
                          ? 2.0 * g.ysum - static_cast<double>(g.count)
                          : g.ysum - v * static_cast<double>(g.count);
    z.push_back(zg);
    total += zg;
  }

  LearnedHypothesis out;
  if (groups.empty()) return out;
  const UnionMaxResult dp = dp_max_union(z, r);
  out.objective = 2.0 * dp.value - total;
  out.index_intervals = dp.intervals;
  for (const auto& [lo, hi] : dp.intervals)
    out.support.support.parts.push_back({groups[lo].p, groups[hi].p, true, true});
  if (mode == LabelMode::pm1) {
    const double m = static_cast<double>(data.size());
    out.error_rate = 0.5 - out.objective / (2.0 * m);
  } else {
    out.error_rate = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

struct CfdlEstimate {
  double value = 0.0;
  double direct = 0.0;    // expected v-shaped loss of the predictions themselves
  double transfer = 0.0;  // learned hypothesis applied to held-out residuals
  LearnedHypothesis hypothesis;
};

// fixed-threshold decision-loss estimate through the learner: fit the best
// interval-union hypothesis on the residuals y - v of the training half, then
// evaluate both the direct term and the hypothesis term on the second sample.
// with train == eval this reproduces the fixed-threshold metric exactly.
inline CfdlEstimate cfdl_estimate(const LabeledSampleSet& train, const LabeledSampleSet& eval,
                                  double v, int r) {
  CfdlEstimate est;
  est.hypothesis = agnostic_learn(train, r, LabelMode::y_minus_v, v);
  const GroupedData g = grouped_view(eval);
  for (const auto& pt : g) {
    est.direct += pt.w * (-sign_with_tie(pt.p - v, +1)) * (pt.ybar - v);
    est.transfer += pt.w * est.hypothesis.support(pt.p) * (pt.ybar - v);
  }
  est.value = est.direct + est.transfer;
  return est;
}

inline CfdlEstimate cfdl_estimate(const LabeledSampleSet& data, double v, int r) {
  return cfdl_estimate(data, data, v, r);
}

struct VNet {
  std::vector<double> points;
  double gamma = 0.0;
  std::size_t sampled = 0;  // how many points came from prediction draws
};

// threshold net: the uniform gamma-grid guarantees a neighbor within gamma in
// length, and O(log(1/(gamma delta)) / gamma) predictions drawn from the data
// guarantee a neighbor within gamma in probability mass with confidence
// 1 - delta.
inline VNet build_v_net(const LabeledSampleSet& data, double gamma, double delta,
                        std::uint64_t seed) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw input_error("net granularity must be in (0,1]");
  if (!(delta > 0.0 && delta < 1.0)) throw input_error("net confidence must be in (0,1)");
  VNet net;
  net.gamma = gamma;
  for (double v = 0.0; v < 1.0; v += gamma) net.points.push_back(v);
  net.points.push_back(1.0);
  if (!data.items.empty()) {
    const std::size_t s =
        static_cast<std::size_t>(std::ceil(std::log(1.0 / (gamma * delta)) / gamma));
    net.sampled = s;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, data.items.size() - 1);
    for (std::size_t i = 0; i < s; ++i) net.points.push_back(data.items[pick(rng)].p);
  }
  std::sort(net.points.begin(), net.points.end());
  net.points.erase(std::unique(net.points.begin(), net.points.end()), net.points.end());
  return net;
}

}  // namespace calib
