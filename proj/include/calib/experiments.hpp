#pragma once

// synthetic-distribution generators and the experiment harness that checks
// the library's quantitative relationships end to end.
//
//   gen_lowerbound          a calibrated distribution J0 and a randomized
//                           hard instance J1 on the same support: d/2
//                           equispaced points in [1/4, 3/4], with J1's
//                           conditional rates realized as Bernoulli draws.
//                           against interval-union post-processings with
//                           r = ceil(d/4) every sign pattern on the support
//                           is realizable, so the witness side of the
//                           decision-loss split is exactly 1/2 per trial.
//
//   gen_tightness           the two regimes where the decision loss meets
//                           its bounds: a single miscalibrated point mass
//                           (linear regime) and a uniformly shifted grid
//                           (quadratic regime).
//
//   gen_separation_mminus   two atoms for which the threshold-weighted
//                           calibration error is large yet no nonincreasing
//                           post-processing improves any decision loss.
//
//   run_relation_suite      random exact distributions pushed through every
//                           sandwich inequality the metrics guarantee,
//                           plus the clipped-shift construction that turns a
//                           smooth-calibration witness into a squared-loss
//                           improvement.
//
// every run is reproducible bit for bit from (config, seed): trial t uses
// its own generator seeded with seed + t.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "calib/common.hpp"
#include "calib/metrics.hpp"
#include "calib/postprocess.hpp"
#include "calib/samples.hpp"
#include "calib/smce.hpp"

namespace calib {

struct ExperimentConfig {
  std::string id;
  double eps = 0.1;
  int d = 100;
  int r = 2;
  double mu = 0.01;
  std::size_t trials = 300;
  int grid = 100;
  std::size_t sample_size = 5000;
  std::uint64_t seed = 0;
  std::string out;

  void validate() const {
    if (id.empty()) throw input_error("experiment id must be set");
    if (!(eps > 0.0 && eps < 0.5)) throw input_error("experiment eps must be in (0, 0.5)");
    if (d < 4 || d % 2 != 0) throw input_error("ensemble size d must be even and at least 4");
    if (r < 1) throw input_error("interval budget r must be positive");
    if (!(mu > 0.0 && mu < 1.0 / 16.0)) throw input_error("mixing weight mu must be in (0, 1/16)");
    if (grid < 2) throw input_error("grid must have at least 2 atoms");
  }
};

// support points for the hard ensemble: strictly increasing, inside [1/4, 3/4]
struct EnsembleSpec {
  std::vector<double> q;

  void validate() const {
    if (q.empty()) throw input_error("ensemble needs at least one point");
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (!(q[i] >= 0.25 && q[i] <= 0.75))
        throw input_error("ensemble points must lie in [1/4, 3/4]");
      if (i > 0 && !(q[i] > q[i - 1]))
        throw input_error("ensemble points must be strictly increasing");
    }
  }

  static EnsembleSpec equispaced(int d) {
    if (d < 4 || d % 2 != 0) throw input_error("ensemble size d must be even and at least 4");
    EnsembleSpec spec;
    const int n = d / 2;
    for (int i = 0; i < n; ++i)
      spec.q.push_back(0.25 + 0.5 * static_cast<double>(i) / static_cast<double>(n - 1));
    spec.validate();
    return spec;
  }
};

inline std::pair<FiniteJointDistribution, FiniteJointDistribution> gen_lowerbound(
    int d, std::uint64_t seed) {
  const EnsembleSpec spec = EnsembleSpec::equispaced(d);
  const double mass = 1.0 / static_cast<double>(spec.q.size());
  FiniteJointDistribution calibrated, realized;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (const double qi : spec.q) {
    calibrated.atoms.push_back({qi, mass, qi});
    realized.atoms.push_back({qi, mass, unif(rng) < qi ? 1.0 : 0.0});
  }
  calibrated.validate();
  realized.validate();
  return {std::move(calibrated), std::move(realized)};
}

struct LowerBoundTrial {
  double cdl_value = 0.0;
  double witness_value = 0.0;  // best realizable sign pattern against the residuals
  double alignment = 0.0;      // signed agreement between rates and the 1/2 cutoff
  bool hit = false;
};

struct LowerBoundReport {
  int d = 0;
  std::uint64_t seed = 0;
  double frequency = 0.0;  // fraction of trials with decision loss >= 1/8
  std::vector<LowerBoundTrial> trial_results;
};

inline LowerBoundReport run_lowerbound_experiment(int d, std::size_t trials,
                                                  std::uint64_t seed) {
  if (d < 100) throw input_error("lower-bound experiment needs d >= 100");
  if (trials < 100) throw input_error("lower-bound experiment needs at least 100 trials");
  const PostClass cls = PostClass::GeneralizedMonotone((d + 3) / 4);

  LowerBoundReport rep;
  rep.d = d;
  rep.seed = seed;
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto [calibrated, realized] = gen_lowerbound(d, seed + t);
    const GroupedData g = grouped_view(realized);

    LowerBoundTrial trial;
    trial.cdl_value = cdl(g, cls).value;
    std::vector<double> z(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) z[i] = g[i].w * (g[i].ybar - 0.5);
    trial.witness_value = detail::best_pattern(z, cls).value;
    for (std::size_t i = 0; i < g.size(); ++i)
      trial.alignment += z[i] * sign_with_tie(g[i].p - 0.5, +1);
    // by construction the pattern route is a lower bound on the exact value
    if (trial.cdl_value < trial.witness_value - trial.alignment - 1e-9)
      throw internal_error("decision loss fell below its own witness bound");
    trial.hit = trial.cdl_value >= 0.125 - 1e-12;
    hits += trial.hit ? 1 : 0;
    rep.trial_results.push_back(trial);
  }
  rep.frequency = static_cast<double>(hits) / static_cast<double>(trials);
  return rep;
}

enum class TightnessVariant { point_mass, shifted_grid };

inline FiniteJointDistribution gen_tightness(TightnessVariant which, double eps, int grid) {
  if (!(eps > 0.0 && eps < 0.5)) throw input_error("tightness eps must be in (0, 0.5)");
  FiniteJointDistribution dist;
  if (which == TightnessVariant::point_mass) {
    dist.atoms.push_back({1.0 - eps, 1.0, 1.0});
  } else {
    if (grid < 2) throw input_error("grid must have at least 2 atoms");
    const double mass = 1.0 / static_cast<double>(grid);
    for (int j = 0; j < grid; ++j) {
      const double p = std::min(
          (1.0 - eps) * static_cast<double>(j) / static_cast<double>(grid - 1), 1.0 - eps);
      dist.atoms.push_back({p, mass, std::min(p + eps, 1.0)});
    }
  }
  dist.validate();
  return dist;
}

inline FiniteJointDistribution gen_separation_mminus() {
  FiniteJointDistribution dist;
  dist.atoms.push_back({0.0, 0.5, 0.0});
  dist.atoms.push_back({0.5, 0.5, 1.0});
  dist.validate();
  return dist;
}

// ---- randomized relation suite ----

struct RelationCheck {
  std::string name;
  std::size_t instance = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

struct AuditReport {
  std::string version = kLibraryVersion;
  std::uint64_t seed = 0;
  std::size_t instances = 0;
  std::vector<RelationCheck> checks;
  bool all_pass = true;
};

inline FiniteJointDistribution random_distribution(std::mt19937_64& rng,
                                                   std::size_t max_atoms = 20) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t k = 1 + rng() % max_atoms;
  std::vector<double> ps;
  while (ps.size() < k) {
    ps.push_back(unif(rng));
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
  }
  FiniteJointDistribution dist;
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double w = 0.05 + unif(rng);
    dist.atoms.push_back({ps[i], w, unif(rng)});
    total += w;
  }
  for (auto& a : dist.atoms) a.mass /= total;
  dist.validate();
  return dist;
}

// random piecewise-constant map with at most four segments; any such map has
// superlevel sets made of at most two intervals
inline PostProcessingMap random_step_map(std::mt19937_64& rng, int max_segments = 4) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int segments = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_segments));
  std::vector<double> cuts{0.0};
  while (static_cast<int>(cuts.size()) < segments) {
    cuts.push_back(unif(rng));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  }
  PostProcessingMap map;
  map.kind = MapKind::piecewise_constant;
  map.interpolate = false;
  map.breakpoints = cuts;
  for (std::size_t i = 0; i < cuts.size(); ++i) map.values.push_back(unif(rng));
  map.validate();
  return map;
}

namespace detail {

inline double squared_risk(const GroupedData& data, const std::vector<double>& fitted) {
  double risk = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double c = fitted[i];
    risk += data[i].w *
            (data[i].ybar * (1.0 - c) * (1.0 - c) + (1.0 - data[i].ybar) * c * c);
  }
  return risk;
}

}  // namespace detail

inline AuditReport run_relation_suite(std::size_t instances, std::uint64_t seed) {
  if (instances < 1) throw input_error("relation suite needs at least one instance");
  AuditReport rep;
  rep.seed = seed;
  rep.instances = instances;
  const auto add = [&](std::string name, std::size_t inst, double lhs, double rhs, bool pass) {
    rep.checks.push_back({std::move(name), inst, lhs, rhs, pass});
    rep.all_pass = rep.all_pass && pass;
  };

  const std::vector<std::pair<std::string, PostClass>> classes = {
      {"all", PostClass::All()},
      {"nondecreasing", PostClass::MonotoneNondecreasing()},
      {"union2", PostClass::GeneralizedMonotone(2)},
  };

  for (std::size_t inst = 0; inst < instances; ++inst) {
    std::mt19937_64 rng(seed + inst);
    const FiniteJointDistribution dist = random_distribution(rng);
    const GroupedData g = grouped_view(dist);

    const double e = ece(g);
    const double cdl_all = cdl(g, PostClass::All()).value;
    add("ece_squared_le_cdl_all", inst, e * e, cdl_all, e * e <= cdl_all + 1e-9);
    add("cdl_all_le_two_ece", inst, cdl_all, 2.0 * e, cdl_all <= 2.0 * e + 1e-9);
    const double ce_bounded = ce_weighted(g, WeightClassSpec::AllBounded()).value;
    add("ece_equals_bounded_ce", inst, e, ce_bounded, std::fabs(e - ce_bounded) <= 1e-12);

    for (const auto& [label, cls] : classes) {
      const double c = cdl(g, cls).value;
      const double w = ce_weighted(g, WeightClassSpec::ThrPrime(cls)).value;
      add("cdl_nonnegative_" + label, inst, c, 0.0, c >= -1e-12);
      add("cdl_le_two_ce_" + label, inst, c, 2.0 * w, c <= 2.0 * w + 1e-9);
      const bool quad_ok = c <= 1e-12 || w <= 14.0 * std::sqrt(c) + 1e-9;
      add("ce_le_14_sqrt_cdl_" + label, inst, w, 14.0 * std::sqrt(std::max(c, 0.0)), quad_ok);
    }
    const double c_m1 = cdl(g, PostClass::GeneralizedMonotone(1)).value;
    const double c_m2 = cdl(g, PostClass::GeneralizedMonotone(2)).value;
    const double c_mp = cdl(g, PostClass::MonotoneNondecreasing()).value;
    add("cdl_chain_nondecreasing_le_union1", inst, c_mp, c_m1, c_mp <= c_m1 + 1e-12);
    add("cdl_chain_union1_le_union2", inst, c_m1, c_m2, c_m1 <= c_m2 + 1e-12);
    add("cdl_chain_union2_le_all", inst, c_m2, cdl_all, c_m2 <= cdl_all + 1e-12);

    // clipped shift along the smooth-calibration witness lowers squared risk
    const SmceResult sm = smce(dist);
    std::vector<double> identity(g.size()), shifted(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      identity[i] = g[i].p;
      shifted[i] = clip01(g[i].p + sm.value * sm.weights[i]);
    }
    const double before = detail::squared_risk(g, identity);
    const double after = detail::squared_risk(g, shifted);
    add("smce_shift_improvement", inst, after, before - sm.value * sm.value,
        after <= before - sm.value * sm.value + 1e-9);
  }

  // tightness regimes: the decision loss is linear in the calibration error
  // for a miscalibrated point mass, quadratic for a uniformly shifted grid
  {
    const FiniteJointDistribution j1 = gen_tightness(TightnessVariant::point_mass, 0.1, 100);
    const double c = cdl(j1, PostClass::MonotoneNondecreasing()).value;
    const double w = ce_weighted(j1, WeightClassSpec::SignedIntervals()).value;
    add("point_mass_linear_ratio", instances, c, 0.5 * w, c >= 0.5 * w - 1e-9);

    const FiniteJointDistribution j2 = gen_tightness(TightnessVariant::shifted_grid, 0.1, 100);
    const double c2 = cdl(j2, PostClass::MonotoneNondecreasing()).value;
    const double w2 = ce_weighted(j2, WeightClassSpec::SignedIntervals()).value;
    add("shifted_grid_quadratic_ratio", instances, c2, 3.0 * w2 * w2, c2 <= 3.0 * w2 * w2 + 1e-9);
  }
  return rep;
}

}  // namespace calib
