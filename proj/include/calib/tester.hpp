#pragma once

// decision procedures: given a sample, an accuracy target alpha and a slack
// eps, accept or reject the hypothesis that the calibration-decision loss is
// below alpha.
//
//   test_empirical       evaluates the plug-in statistic on the sample and
//                        rejects when it exceeds alpha - eps/2.
//
//   audit_via_learner    splits the sample in half, builds a threshold net
//                        from the first half (grid of pitch eps/4 plus a few
//                        sampled predictions), learns the best interval-union
//                        hypothesis per threshold on the first half, and
//                        evaluates the resulting statistics on the held-out
//                        half.  rejects when the supremum exceeds
//                        alpha - 3*eps/2.  the wider margin covers both the
//                        net discretization and the transfer between halves.
//
//   test_strongly_proper mixes each fixed-threshold statistic with a mu
//                        fraction of the squared-loss improvement of its
//                        witness map, which makes the statistic strictly
//                        proper while staying within O(mu) of the original.
//
// every route can run as a median-of-folds procedure: the sample is split
// into k interleaved folds, each fold votes, and the majority verdict is
// returned together with the median statistic.  with independent samples the
// failure probability of the majority drops exponentially in k.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "calib/common.hpp"
#include "calib/learner.hpp"
#include "calib/losses.hpp"
#include "calib/metrics.hpp"
#include "calib/samples.hpp"

namespace calib {

struct TestVerdict {
  bool reject = false;
  double statistic = 0.0;  // median over folds
  double threshold = 0.0;
  std::string route;
  int folds = 1;
  std::size_t sample_size = 0;
  std::vector<double> fold_statistics;
  VNet net;  // thresholds used by the audit route (empty otherwise)
};

namespace detail {

inline void check_test_params(double alpha, double eps, int folds) {
  if (!(eps > 0.0 && alpha > 0.0 && alpha <= 2.0))
    throw input_error("test needs alpha in (0,2] and eps > 0");
  if (!(eps <= alpha)) throw input_error("test slack eps cannot exceed alpha");
  if (folds < 1 || folds % 2 == 0) throw input_error("fold count must be odd");
}

inline std::vector<LabeledSampleSet> interleaved_folds(const LabeledSampleSet& data, int folds) {
  std::vector<LabeledSampleSet> out(static_cast<std::size_t>(folds));
  for (std::size_t i = 0; i < data.items.size(); ++i)
    out[i % static_cast<std::size_t>(folds)].items.push_back(data.items[i]);
  for (const auto& f : out)
    if (f.items.empty()) throw input_error("not enough samples for the requested fold count");
  return out;
}

inline TestVerdict verdict_from_folds(std::vector<double> stats, double threshold,
                                      std::string route, std::size_t m, int folds) {
  TestVerdict v;
  v.fold_statistics = stats;
  int rejections = 0;
  for (const double s : stats)
    if (s > threshold) ++rejections;
  std::nth_element(stats.begin(), stats.begin() + stats.size() / 2, stats.end());
  v.statistic = stats[stats.size() / 2];
  v.threshold = threshold;
  v.reject = rejections * 2 > folds;
  v.route = std::move(route);
  v.folds = folds;
  v.sample_size = m;
  return v;
}

}  // namespace detail

inline TestVerdict test_empirical(const LabeledSampleSet& data, const PostClass& cls,
                                  double alpha, double eps, int folds = 1) {
  data.validate();
  detail::check_test_params(alpha, eps, folds);
  std::vector<double> stats;
  for (const auto& fold : detail::interleaved_folds(data, folds))
    stats.push_back(cdl(fold, cls).value);
  return detail::verdict_from_folds(std::move(stats), alpha - eps / 2.0, "empirical",
                                    data.size(), folds);
}

inline TestVerdict audit_via_learner(const LabeledSampleSet& data, const PostClass& cls,
                                     double alpha, double eps, std::uint64_t seed,
                                     double delta = 1.0 / 3.0, int folds = 1) {
  data.validate();
  detail::check_test_params(alpha, eps, folds);
  if (cls.family != PostClass::Family::generalized_monotone)
    throw unsupported_error("the audit route learns interval-union hypotheses");
  if (!(alpha > 1.5 * eps))
    throw input_error("audit route needs alpha > 3*eps/2 for a positive threshold");
  const double gamma = eps / 4.0;

  TestVerdict out;
  std::vector<double> stats;
  const auto fold_sets = detail::interleaved_folds(data, folds);
  for (std::size_t f = 0; f < fold_sets.size(); ++f) {
    auto items = fold_sets[f].items;
    std::mt19937_64 rng(seed + f);
    std::shuffle(items.begin(), items.end(), rng);
    const std::size_t half = (items.size() + 1) / 2;
    LabeledSampleSet s1, s2;
    s1.items.assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(half));
    s2.items.assign(items.begin() + static_cast<std::ptrdiff_t>(half), items.end());
    if (s2.items.empty()) throw input_error("audit route needs at least two samples per fold");

    const VNet net = build_v_net(s1, gamma, delta, seed * 2 + 1 + f);
    if (f == 0) out.net = net;
    double sup = 0.0;
    for (const double v : net.points)
      sup = std::max(sup, cfdl_estimate(s1, s2, v, cls.r).value);
    stats.push_back(sup);
  }
  TestVerdict v = detail::verdict_from_folds(std::move(stats), alpha - 1.5 * eps, "audit",
                                             data.size(), folds);
  v.net = std::move(out.net);
  return v;
}

// squared-loss improvement of a post-processing map over the identity
inline double squared_gain(const GroupedData& data, const PostProcessingMap& map) {
  double gain = 0.0;
  for (const auto& g : data) {
    const double kp = map(g.p);
    const double before = g.ybar * (1.0 - g.p) * (1.0 - g.p) + (1.0 - g.ybar) * g.p * g.p;
    const double after = g.ybar * (1.0 - kp) * (1.0 - kp) + (1.0 - g.ybar) * kp * kp;
    gain += g.w * (before - after);
  }
  return gain;
}

inline TestVerdict test_strongly_proper(const LabeledSampleSet& data, const PostClass& cls,
                                        double alpha, double eps, double mu, int folds = 1) {
  data.validate();
  detail::check_test_params(alpha, eps, folds);
  if (!(mu > 0.0 && mu < 1.0 / 16.0))
    throw input_error("strict-propriety weight mu must lie in (0, 1/16)");

  std::vector<double> stats;
  for (const auto& fold : detail::interleaved_folds(data, folds)) {
    const GroupedData g = grouped_view(fold);
    std::vector<double> candidates{0.0, 1.0};
    for (const auto& gp : g) candidates.push_back(gp.p);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    double best = 0.0;
    bool first = true;
    for (const double v : candidates) {
      for (const int s : {+1, -1}) {
        const CdlEstimate est = cdl_fixed(g, v, s, cls);
        const double mixed = (1.0 - mu) * est.value + mu * squared_gain(g, est.witness_kappa);
        if (first || mixed > best) {
          best = mixed;
          first = false;
        }
      }
    }
    stats.push_back(best);
  }
  return detail::verdict_from_folds(std::move(stats), alpha - eps / 2.0, "strongly-proper",
                                    data.size(), folds);
}

}  // namespace calib
