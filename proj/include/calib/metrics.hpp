#pragma once

// calibration metrics built on the grouped view: expected calibration error,
// weighted calibration error over several weight families, and the
// calibration decision loss (the value a decision maker could gain by
// post-processing the predictions before thresholding).
//
// fixed-threshold decision loss.  for a threshold v, tie sign s and a
// post-processing family K, translation invariance of the v-shaped loss
// reduces the best post-processing gain to a threshold-pattern problem on the
// grouped residuals z_i = w_i (ybar_i - v): the optimum over K equals the
// optimum over the +-1 patterns the family can realize at level v, and adding
// back the expected loss of the raw predictions gives the metric.  the
// pattern optimum is computed exactly per family:
//   All                      pick the sign of each z_i
//   MonotoneNondecreasing    best suffix-positive cut
//   MonotoneNonincreasing    best prefix-positive cut
//   GeneralizedMonotone(r)   best union of at most r index intervals (dp)
//
// global decision loss.  between consecutive distinct predictions the
// fixed-threshold statistic is piecewise-linear in v for every fixed pattern,
// so its supremum over v is attained at a data value or one of its one-sided
// limits; the limits are exactly the opposite-tie-sign evaluations at the
// data values, and fractional tie signs are dominated by the extremes.
// enumerating v over the distinct predictions plus {0,1} with both tie signs
// is therefore exact, not an approximation.
//
// every estimate carries a witness map which is re-evaluated through the
// actual loss before being returned; a drift beyond 1e-9 is a hard error.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "calib/common.hpp"
#include "calib/learner.hpp"
#include "calib/losses.hpp"
#include "calib/postprocess.hpp"
#include "calib/samples.hpp"
#include "calib/smce.hpp"

namespace calib {

// ---- threshold-pattern optimizers on a residual sequence ----

struct PatternResult {
  double value = 0.0;
  std::vector<int> pattern;  // +-1 per group
};

namespace detail {

inline PatternResult best_pattern_all(const std::vector<double>& z) {
  PatternResult res;
  res.pattern.reserve(z.size());
  for (const double zi : z) {
    res.pattern.push_back(zi >= 0.0 ? +1 : -1);
    res.value += std::fabs(zi);
  }
  return res;
}

// best pattern that is -1 on a prefix and +1 on the rest
inline PatternResult best_pattern_nondecreasing(const std::vector<double>& z) {
  const std::size_t k = z.size();
  double run = 0.0, best_prefix = 0.0, total = 0.0;
  std::size_t cut = 0;
  for (std::size_t i = 0; i < k; ++i) {
    total += z[i];
    run += z[i];
    if (run < best_prefix) {
      best_prefix = run;
      cut = i + 1;
    }
  }
  PatternResult res;
  res.value = total - 2.0 * best_prefix;
  res.pattern.assign(k, -1);
  for (std::size_t i = cut; i < k; ++i) res.pattern[i] = +1;
  return res;
}

// best pattern that is +1 on a prefix and -1 on the rest
inline PatternResult best_pattern_nonincreasing(const std::vector<double>& z) {
  const std::size_t k = z.size();
  double run = 0.0, best_prefix = 0.0, total = 0.0;
  std::size_t cut = 0;
  for (std::size_t i = 0; i < k; ++i) {
    total += z[i];
    run += z[i];
    if (run > best_prefix) {
      best_prefix = run;
      cut = i + 1;
    }
  }
  PatternResult res;
  res.value = 2.0 * best_prefix - total;
  res.pattern.assign(k, -1);
  for (std::size_t i = 0; i < cut; ++i) res.pattern[i] = +1;
  return res;
}

// best pattern whose positive part is a union of at most r index intervals
inline PatternResult best_pattern_runs(const std::vector<double>& z, int r) {
  double total = 0.0;
  for (const double zi : z) total += zi;
  const UnionMaxResult dp = dp_max_union(z, r);
  PatternResult res;
  res.value = 2.0 * dp.value - total;
  res.pattern.assign(z.size(), -1);
  for (const auto& [lo, hi] : dp.intervals)
    for (std::size_t i = lo; i <= hi; ++i) res.pattern[i] = +1;
  return res;
}

inline PatternResult best_pattern(const std::vector<double>& z, const PostClass& cls) {
  switch (cls.family) {
    case PostClass::Family::all: return best_pattern_all(z);
    case PostClass::Family::monotone_nondecreasing: return best_pattern_nondecreasing(z);
    case PostClass::Family::monotone_nonincreasing: return best_pattern_nonincreasing(z);
    case PostClass::Family::generalized_monotone: return best_pattern_runs(z, cls.r);
    case PostClass::Family::lipschitz:
      throw unsupported_error(
          "threshold patterns of a Lipschitz family are not finite; "
          "use the smooth weighted metric instead");
  }
  throw internal_error("unhandled family");
}

// 0/1 step map taking value 1 exactly on the +1 groups of the pattern, with
// cell boundaries at midpoints between adjacent distinct predictions
inline PostProcessingMap pattern_step_map(const GroupedData& data,
                                          const std::vector<int>& pattern) {
  PostProcessingMap map;
  map.kind = MapKind::piecewise_constant;
  map.interpolate = false;
  map.breakpoints.push_back(0.0);
  map.values.push_back(pattern.empty() ? 0.0 : (pattern.front() > 0 ? 1.0 : 0.0));
  for (std::size_t i = 1; i < pattern.size(); ++i) {
    if (pattern[i] == pattern[i - 1]) continue;
    double cut = 0.5 * (data[i - 1].p + data[i].p);
    if (!(cut > data[i - 1].p)) cut = std::nextafter(data[i - 1].p, 2.0);  // fp guard
    map.breakpoints.push_back(cut);
    map.values.push_back(pattern[i] > 0 ? 1.0 : 0.0);
  }
  return map;
}

}  // namespace detail

// ---- expected calibration error ----

inline double ece(const GroupedData& data) {
  double acc = 0.0;
  for (const auto& g : data) acc += g.w * std::fabs(g.ybar - g.p);
  return acc;
}
inline double ece(const LabeledSampleSet& data) { return ece(grouped_view(data)); }
inline double ece(const FiniteJointDistribution& dist) { return ece(grouped_view(dist)); }

// ---- weighted calibration error ----

struct WeightClassSpec {
  enum class Kind { all_bounded, signed_intervals, thr_prime, lipschitz1 };
  Kind kind = Kind::all_bounded;
  PostClass base;  // only read for thr_prime

  static WeightClassSpec AllBounded() { return {Kind::all_bounded, PostClass::All()}; }
  static WeightClassSpec SignedIntervals() { return {Kind::signed_intervals, PostClass::All()}; }
  static WeightClassSpec ThrPrime(const PostClass& cls) { return {Kind::thr_prime, cls}; }
  static WeightClassSpec Lipschitz1() { return {Kind::lipschitz1, PostClass::Lipschitz(1.0)}; }
};

enum class IntervalConvention { indicator, pm_one };

struct CeReport {
  double value = 0.0;
  std::vector<double> weights;  // witness weight per group
  std::string witness;          // short description of the maximizing weights
};

inline CeReport ce_weighted(const GroupedData& data, const WeightClassSpec& spec,
                            IntervalConvention convention = IntervalConvention::indicator) {
  const std::size_t k = data.size();
  std::vector<double> z(k);
  for (std::size_t i = 0; i < k; ++i) z[i] = data[i].w * (data[i].ybar - data[i].p);

  CeReport rep;
  switch (spec.kind) {
    case WeightClassSpec::Kind::all_bounded: {
      const PatternResult pr = detail::best_pattern_all(z);
      rep.value = pr.value;
      rep.weights.assign(pr.pattern.begin(), pr.pattern.end());
      rep.witness = "per-group signs";
      return rep;
    }
    case WeightClassSpec::Kind::signed_intervals: {
      std::vector<double> S(k + 1, 0.0);
      for (std::size_t i = 0; i < k; ++i) S[i + 1] = S[i] + z[i];
      double best = 0.0;
      std::size_t ba = 0, bb = 0;  // chosen [a, b) in group indices; empty when ba == bb
      double bsign = 1.0;
      for (std::size_t a = 0; a <= k; ++a) {
        for (std::size_t b = a; b <= k; ++b) {
          const double inside = S[b] - S[a];
          const double val = convention == IntervalConvention::indicator
                                 ? std::fabs(inside)
                                 : std::fabs(2.0 * inside - S[k]);
          if (val > best) {
            best = val;
            ba = a;
            bb = b;
            const double raw = convention == IntervalConvention::indicator
                                   ? inside
                                   : 2.0 * inside - S[k];
            bsign = raw >= 0.0 ? 1.0 : -1.0;
          }
        }
      }
      rep.value = best;
      rep.weights.assign(k, convention == IntervalConvention::indicator ? 0.0 : -bsign);
      for (std::size_t i = ba; i < bb; ++i) rep.weights[i] = bsign;
      rep.witness = convention == IntervalConvention::indicator
                        ? "signed indicator of one interval"
                        : "+-1 weights constant off one interval";
      return rep;
    }
    case WeightClassSpec::Kind::thr_prime: {
      if (spec.base.family == PostClass::Family::lipschitz)
        throw unsupported_error(
            "threshold weight family of a Lipschitz class is not finite; "
            "use the smooth weighted metric instead");
      PatternResult pr = detail::best_pattern(z, spec.base);
      // the class also carries every negated threshold of the identity map:
      // +1 below a cutoff, -1 at or above it.  families whose patterns allow
      // a leading positive run already contain these; the nondecreasing
      // family genuinely gains them
      const PatternResult idthr = detail::best_pattern_nonincreasing(z);
      if (idthr.value > pr.value) pr = idthr;
      rep.value = pr.value;
      rep.weights.assign(pr.pattern.begin(), pr.pattern.end());
      rep.witness = "threshold pattern over " + spec.base.name();
      return rep;
    }
    case WeightClassSpec::Kind::lipschitz1: {
      const SmceResult s = smce(data);
      rep.value = s.value;
      rep.weights = s.weights;
      rep.witness = "1-lipschitz weight function";
      return rep;
    }
  }
  throw internal_error("unhandled weight family");
}

inline CeReport ce_weighted(const LabeledSampleSet& data, const WeightClassSpec& spec,
                            IntervalConvention convention = IntervalConvention::indicator) {
  return ce_weighted(grouped_view(data), spec, convention);
}
inline CeReport ce_weighted(const FiniteJointDistribution& dist, const WeightClassSpec& spec,
                            IntervalConvention convention = IntervalConvention::indicator) {
  return ce_weighted(grouped_view(dist), spec, convention);
}

// ---- calibration decision loss ----

struct CdlEstimate {
  double value = 0.0;
  double witness_v = 0.0;
  int witness_sign = 0;
  PostProcessingMap witness_kappa;
};

inline CdlEstimate cdl_fixed(const GroupedData& data, double v, int s, const PostClass& cls) {
  if (!(v >= 0.0 && v <= 1.0)) throw input_error("threshold outside [0,1]");
  if (s != -1 && s != 1) throw input_error("tie sign must be -1 or +1");
  if (cls.family == PostClass::Family::lipschitz)
    throw unsupported_error("decision loss over a Lipschitz family is not supported");

  const std::size_t k = data.size();
  std::vector<double> z(k);
  double direct = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    direct += data[i].w * (-sign_with_tie(data[i].p - v, s)) * (data[i].ybar - v);
    z[i] = data[i].w * (data[i].ybar - v);
  }
  PatternResult pr = k == 0 ? PatternResult{} : detail::best_pattern(z, cls);

  CdlEstimate est;
  est.value = direct + pr.value;
  est.witness_v = v;
  est.witness_sign = s;

  // witness map.  a +1 group needs kappa >= v (strict when s == -1), a -1
  // group needs kappa <= v (strict when s == +1); the 0/1 step map realizes
  // every pattern except at the two boundary combinations, where all
  // residuals share one sign and the constant map achieves the same value.
  if (v == 0.0 && s == +1) {
    est.witness_kappa = detail::pattern_step_map(data, std::vector<int>(k, +1));
  } else if (v == 1.0 && s == -1) {
    est.witness_kappa = detail::pattern_step_map(data, std::vector<int>(k, -1));
  } else {
    est.witness_kappa = detail::pattern_step_map(data, pr.pattern);
  }
  est.witness_kappa.validate();

  // re-evaluate the estimate through the loss and the witness map
  const VShapedLoss loss{v, s};
  double reeval = 0.0;
  for (const auto& g : data)
    reeval += g.w * (eval_loss(loss, g.p, g.ybar) - eval_loss(loss, est.witness_kappa(g.p), g.ybar));
  if (std::fabs(reeval - est.value) > kDefaultTol)
    throw internal_error("decision-loss witness drifted from the computed value");
  return est;
}

inline CdlEstimate cdl(const GroupedData& data, const PostClass& cls) {
  std::vector<double> candidates{0.0, 1.0};
  for (const auto& g : data) candidates.push_back(g.p);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  bool have = false;
  CdlEstimate best;
  for (const double v : candidates) {
    for (const int s : {+1, -1}) {
      CdlEstimate est = cdl_fixed(data, v, s, cls);
      if (!have || est.value > best.value) {
        best = std::move(est);
        have = true;
      }
    }
  }
  if (!have) return cdl_fixed(data, 0.5, +1, cls);
  return best;
}

inline CdlEstimate cdl_fixed(const LabeledSampleSet& d, double v, int s, const PostClass& c) {
  return cdl_fixed(grouped_view(d), v, s, c);
}
inline CdlEstimate cdl_fixed(const FiniteJointDistribution& d, double v, int s,
                             const PostClass& c) {
  return cdl_fixed(grouped_view(d), v, s, c);
}
inline CdlEstimate cdl(const LabeledSampleSet& d, const PostClass& c) {
  return cdl(grouped_view(d), c);
}
inline CdlEstimate cdl(const FiniteJointDistribution& d, const PostClass& c) {
  return cdl(grouped_view(d), c);
}

// ---- small-interval miscalibration bound ----

struct SmallIntervalReport {
  double lhs = 0.0;    // |E[ 1[p in I] (y - p) ]|
  double bound = 0.0;  // |I| Pr[p in I] + cdl/2 + 1e-9
  bool holds = false;
  CdlEstimate cdl_est;
};

// the residual mass inside a short interval is controlled by the interval
// length and half the decision loss of any family containing the clipped
// shifts of the identity
inline SmallIntervalReport small_interval_check(const GroupedData& data, const Interval& iv,
                                                const PostClass& cls) {
  const bool has_shifts = cls.family == PostClass::Family::all ||
                          cls.family == PostClass::Family::monotone_nondecreasing ||
                          cls.family == PostClass::Family::generalized_monotone;
  if (!has_shifts)
    throw unsupported_error("family does not contain the clipped identity shifts");
  SmallIntervalReport rep;
  double inside = 0.0, prob = 0.0;
  for (const auto& g : data) {
    if (!iv.contains(g.p)) continue;
    inside += g.w * (g.ybar - g.p);
    prob += g.w;
  }
  rep.lhs = std::fabs(inside);
  rep.cdl_est = cdl(data, cls);
  rep.bound = (iv.hi - iv.lo) * prob + 0.5 * rep.cdl_est.value + 1e-9;
  rep.holds = rep.lhs <= rep.bound;
  return rep;
}

inline SmallIntervalReport small_interval_check(const LabeledSampleSet& d, const Interval& iv,
                                                const PostClass& c) {
  return small_interval_check(grouped_view(d), iv, c);
}
inline SmallIntervalReport small_interval_check(const FiniteJointDistribution& d,
                                                const Interval& iv, const PostClass& c) {
  return small_interval_check(grouped_view(d), iv, c);
}

}  // namespace calib
