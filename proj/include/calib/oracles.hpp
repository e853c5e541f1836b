#pragma once

// independent brute-force reference implementations.  each oracle recomputes
// its quantity by direct enumeration, deliberately avoiding the optimized
// code paths (no shared pattern optimizers, no shared dynamic programs), so
// that agreement between the two routes is a meaningful check.  instance
// sizes are capped; exceeding a cap is an input error, not a silent fallback.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "calib/common.hpp"
#include "calib/postprocess.hpp"
#include "calib/samples.hpp"

namespace calib {

struct OracleReport {
  std::string suite;
  std::size_t cases = 0;
  std::size_t failures = 0;
  double max_gap = 0.0;
};

// ---- best union of at most r index intervals, by pure recursion ----

struct BruteUnionMax {
  double value = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> intervals;
};

namespace oracle_detail {

inline BruteUnionMax union_max_rec(const std::vector<double>& z, std::size_t i, int budget) {
  if (i >= z.size()) return {};
  // skip position i
  BruteUnionMax best = union_max_rec(z, i + 1, budget);
  if (budget > 0) {
    double sum = 0.0;
    for (std::size_t j = i; j < z.size(); ++j) {
      sum += z[j];
      // take [i, j], leave a gap, and recurse; canonical optimal unions have
      // non-adjacent intervals so the gap loses nothing
      BruteUnionMax rest = union_max_rec(z, j + 2, budget - 1);
      if (sum + rest.value > best.value) {
        best.value = sum + rest.value;
        best.intervals.clear();
        best.intervals.emplace_back(i, j);
        best.intervals.insert(best.intervals.end(), rest.intervals.begin(),
                              rest.intervals.end());
      }
    }
  }
  return best;
}

}  // namespace oracle_detail

inline BruteUnionMax brute_union_max(const std::vector<double>& z, int r) {
  if (z.size() > 14) throw input_error("brute union oracle is capped at 14 entries");
  if (r < 1 || r > 3) throw input_error("brute union oracle is capped at budget 3");
  return oracle_detail::union_max_rec(z, 0, r);
}

// ---- interval calibration error by direct interval enumeration ----

struct BruteIntervalCe {
  double indicator = 0.0;  // max |sum of residuals inside an interval|
  double pm_one = 0.0;     // max |inside - outside| over intervals (incl. empty)
};

inline BruteIntervalCe brute_interval_ce(const GroupedData& data) {
  if (data.size() > 200) throw input_error("brute interval oracle is capped at 200 groups");
  const std::size_t k = data.size();
  double total = 0.0;
  for (const auto& g : data) total += g.w * (g.ybar - g.p);
  BruteIntervalCe out;
  out.pm_one = std::fabs(total);  // empty interval: weights identically -1
  for (std::size_t a = 0; a < k; ++a) {
    double inside = 0.0;
    for (std::size_t b = a; b < k; ++b) {
      inside += data[b].w * (data[b].ybar - data[b].p);
      out.indicator = std::max(out.indicator, std::fabs(inside));
      out.pm_one = std::max(out.pm_one, std::fabs(2.0 * inside - total));
    }
  }
  return out;
}

// ---- decision loss over a threshold grid, by pattern enumeration ----

struct BruteCdl {
  double value = -std::numeric_limits<double>::infinity();
  double v = 0.0;
  int s = 0;
};

namespace oracle_detail {

// best sum of at most r disjoint index intervals within z, by explicit
// start/end enumeration composed over suffixes (structured differently from
// the prefix-anchored tableau the optimized path uses)
inline double suffix_union_best(const std::vector<double>& z, int r) {
  const std::size_t k = z.size();
  std::vector<std::vector<double>> tail(static_cast<std::size_t>(r) + 1,
                                        std::vector<double>(k + 2, 0.0));
  for (int t = 1; t <= r; ++t) {
    for (std::size_t i = k; i-- > 0;) {
      double best = tail[t][i + 1];  // skip position i
      double sum = 0.0;
      for (std::size_t j = i; j < k; ++j) {
        sum += z[j];
        const std::size_t next = j + 2 <= k ? j + 2 : k + 1;
        best = std::max(best, sum + tail[t - 1][std::min(next, k + 1)]);
      }
      tail[t][i] = best;
    }
  }
  return tail[r][0];
}

inline double pattern_best_brute(const std::vector<double>& z, const PostClass& cls) {
  const std::size_t k = z.size();
  double total = 0.0;
  for (const double zi : z) total += zi;
  switch (cls.family) {
    case PostClass::Family::all: {
      double acc = 0.0;
      for (const double zi : z) acc += zi >= 0.0 ? zi : -zi;
      return acc;
    }
    case PostClass::Family::monotone_nondecreasing: {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c <= k; ++c) {
        double val = 0.0;
        for (std::size_t i = 0; i < k; ++i) val += i >= c ? z[i] : -z[i];
        best = std::max(best, val);
      }
      return best;
    }
    case PostClass::Family::monotone_nonincreasing: {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c <= k; ++c) {
        double val = 0.0;
        for (std::size_t i = 0; i < k; ++i) val += i < c ? z[i] : -z[i];
        best = std::max(best, val);
      }
      return best;
    }
    case PostClass::Family::generalized_monotone:
      return 2.0 * suffix_union_best(z, cls.r) - total;
    case PostClass::Family::lipschitz:
      throw unsupported_error("no threshold patterns for a Lipschitz family");
  }
  throw internal_error("unhandled family");
}

}  // namespace oracle_detail

// evaluate the fixed-threshold statistic on a uniform v grid with both tie
// signs and report the maximum.  with a grid that contains every distinct
// prediction this matches the exact enumeration.
inline BruteCdl brute_cdl(const GroupedData& data, const PostClass& cls, double v_step) {
  if (data.size() > 50) throw input_error("brute decision-loss oracle is capped at 50 groups");
  if (!(v_step >= 5e-4 && v_step <= 0.5)) throw input_error("grid step out of range");
  BruteCdl out;
  const std::size_t k = data.size();
  const std::size_t steps = static_cast<std::size_t>(std::llround(1.0 / v_step));
  for (std::size_t gi = 0; gi <= steps; ++gi) {
    const double v = std::min(1.0, static_cast<double>(gi) * v_step);
    for (const int s : {+1, -1}) {
      double direct = 0.0;
      std::vector<double> z(k);
      for (std::size_t i = 0; i < k; ++i) {
        direct += data[i].w * (-sign_with_tie(data[i].p - v, s)) * (data[i].ybar - v);
        z[i] = data[i].w * (data[i].ybar - v);
      }
      const double val = direct + oracle_detail::pattern_best_brute(z, cls);
      if (val > out.value) {
        out.value = val;
        out.v = v;
        out.s = s;
      }
    }
  }
  return out;
}

inline BruteCdl brute_cdl(const LabeledSampleSet& d, const PostClass& c, double v_step) {
  return brute_cdl(grouped_view(d), c, v_step);
}
inline BruteCdl brute_cdl(const FiniteJointDistribution& d, const PostClass& c, double v_step) {
  return brute_cdl(grouped_view(d), c, v_step);
}

// ---- exact isotonic squared error by feasible-partition enumeration ----

namespace oracle_detail {

struct IsoGroup {
  double count, ysum;
};

inline double isotonic_rec(const std::vector<IsoGroup>& g, std::size_t start, double prev_mean) {
  if (start >= g.size()) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  double cnt = 0.0, ys = 0.0;
  for (std::size_t end = start; end < g.size(); ++end) {
    cnt += g[end].count;
    ys += g[end].ysum;
    const double mean = ys / cnt;
    if (mean < prev_mean) continue;  // fitted values must be nondecreasing
    // squared error of the block against its mean, summed over 0/1 labels
    double sse = 0.0;
    for (std::size_t i = start; i <= end; ++i)
      sse += g[i].ysum * (1.0 - mean) * (1.0 - mean) +
             (g[i].count - g[i].ysum) * mean * mean;
    const double rest = isotonic_rec(g, end + 1, mean);
    best = std::min(best, sse + rest);
  }
  return best;
}

}  // namespace oracle_detail

// minimum squared error of any nondecreasing fit, by enumerating every block
// partition with nondecreasing block means
inline double brute_isotonic(const LabeledSampleSet& data) {
  if (data.size() > 12) throw input_error("brute isotonic oracle is capped at 12 samples");
  std::vector<oracle_detail::IsoGroup> g;
  for (const auto& grp : data.grouped())
    g.push_back({static_cast<double>(grp.count), grp.ysum});
  if (g.empty()) return 0.0;
  return oracle_detail::isotonic_rec(g, 0, -std::numeric_limits<double>::infinity());
}

// ---- exact smooth weighted metric by vertex enumeration ----

namespace oracle_detail {

struct SmceBrute {
  const std::vector<double>* z = nullptr;
  const std::vector<double>* d = nullptr;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> best_w;
  std::vector<double> cur;

  // segments are maximal runs where the smoothness constraint is tight; each
  // carries one coordinate anchored at -1 or +1 and a sign per tight edge.
  // every vertex of the feasible polytope has this shape, so exhausting the
  // shapes exhausts the vertices.
  void run(std::size_t i, bool has_prev, double prev) {
    const std::size_t k = z->size();
    if (i == k) {
      double val = 0.0;
      for (std::size_t t = 0; t < k; ++t) val += (*z)[t] * cur[t];
      if (val > best) {
        best = val;
        best_w = cur;
      }
      return;
    }
    for (std::size_t e = i; e < k; ++e) {
      const std::size_t edges = e - i;
      for (std::size_t mask = 0; mask < (1u << edges); ++mask) {
        for (std::size_t c = i; c <= e; ++c) {
          for (const double sigma : {-1.0, 1.0}) {
            bool ok = true;
            cur[c] = sigma;
            for (std::size_t j = c; j-- > i;) {
              const double step = (mask >> (j - i)) & 1 ? (*d)[j] : -(*d)[j];
              cur[j] = cur[j + 1] - step;
              if (std::fabs(cur[j]) > 1.0 + 1e-12) ok = false;
            }
            for (std::size_t j = c + 1; j <= e && ok; ++j) {
              const double step = (mask >> (j - 1 - i)) & 1 ? (*d)[j - 1] : -(*d)[j - 1];
              cur[j] = cur[j - 1] + step;
              if (std::fabs(cur[j]) > 1.0 + 1e-12) ok = false;
            }
            if (!ok) continue;
            if (has_prev && std::fabs(cur[i] - prev) > (*d)[i - 1] + 1e-12) continue;
            run(e + 1, true, cur[e]);
          }
        }
      }
    }
  }
};

}  // namespace oracle_detail

struct BruteSmce {
  double value = 0.0;
  std::vector<double> weights;
};

inline BruteSmce brute_smce(const GroupedData& data) {
  if (data.size() > 8) throw input_error("brute smooth-metric oracle is capped at 8 groups");
  BruteSmce out;
  const std::size_t k = data.size();
  if (k == 0) return out;
  std::vector<double> z(k), d(k > 1 ? k - 1 : 0);
  for (std::size_t i = 0; i < k; ++i) {
    z[i] = data[i].w * (data[i].ybar - data[i].p);
    if (i + 1 < k) d[i] = data[i + 1].p - data[i].p;
  }
  oracle_detail::SmceBrute b;
  b.z = &z;
  b.d = &d;
  b.cur.assign(k, 0.0);
  b.run(0, false, 0.0);
  out.value = b.best;
  out.weights = b.best_w;
  return out;
}

inline BruteSmce brute_smce(const LabeledSampleSet& d) { return brute_smce(grouped_view(d)); }
inline BruteSmce brute_smce(const FiniteJointDistribution& d) {
  return brute_smce(grouped_view(d));
}

}  // namespace calib
