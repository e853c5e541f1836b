#pragma once

// randomized cross-checks of each optimized computation against its
// brute-force oracle.  the oracle implementations live in oracles.hpp and
// share no code with the optimized paths.
//
// the interval-union suite draws multiples of 1/64 so that every partial sum
// is exact in double precision; the two routes must then agree bitwise.  the
// other suites compare within the documented tolerances.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "calib/common.hpp"
#include "calib/metrics.hpp"
#include "calib/oracles.hpp"
#include "calib/recalibrate.hpp"
#include "calib/samples.hpp"
#include "calib/smce.hpp"

namespace calib {

namespace verify_detail {

inline GroupedData random_grouped(std::mt19937_64& rng, std::size_t max_groups,
                                  bool grid_predictions) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t k = 1 + rng() % max_groups;
  std::vector<double> ps;
  while (ps.size() < k) {
    double p = grid_predictions ? 0.02 * static_cast<double>(rng() % 51) : unif(rng);
    ps.push_back(p);
    std::sort(ps.begin(), ps.end());
    ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
  }
  GroupedData g;
  double total = 0.0;
  for (const double p : ps) {
    const double w = 0.05 + unif(rng);
    g.push_back({p, w, unif(rng)});
    total += w;
  }
  for (auto& gp : g) gp.w /= total;
  return g;
}

}  // namespace verify_detail

inline OracleReport verify_union_suite(std::size_t cases, std::uint64_t seed) {
  OracleReport rep{"union", cases, 0, 0.0};
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < cases; ++t) {
    const std::size_t n = 1 + rng() % 14;
    const int r = 1 + static_cast<int>(rng() % 3);
    std::vector<double> z(n);
    for (auto& x : z) x = static_cast<double>(static_cast<int>(rng() % 257) - 128) / 64.0;
    const double a = dp_max_union(z, r).value;
    const double b = brute_union_max(z, r).value;
    const double gap = std::fabs(a - b);
    rep.max_gap = std::max(rep.max_gap, gap);
    if (gap != 0.0) ++rep.failures;
  }
  return rep;
}

inline OracleReport verify_cdl_suite(std::size_t cases, std::uint64_t seed) {
  OracleReport rep{"cdl", cases, 0, 0.0};
  std::mt19937_64 rng(seed);
  const PostClass classes[] = {PostClass::All(), PostClass::MonotoneNondecreasing(),
                               PostClass::GeneralizedMonotone(2)};
  for (std::size_t t = 0; t < cases; ++t) {
    const GroupedData g = verify_detail::random_grouped(rng, 50, true);
    bool ok = true;
    for (const auto& cls : classes) {
      const double a = cdl(g, cls).value;
      const double b = brute_cdl(g, cls, 0.01).value;
      const double gap = std::fabs(a - b);
      rep.max_gap = std::max(rep.max_gap, gap);
      ok = ok && gap <= 1e-9;
    }
    if (!ok) ++rep.failures;
  }
  return rep;
}

inline OracleReport verify_ce_suite(std::size_t cases, std::uint64_t seed) {
  OracleReport rep{"ce", cases, 0, 0.0};
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < cases; ++t) {
    const GroupedData g = verify_detail::random_grouped(rng, 60, false);
    const BruteIntervalCe b = brute_interval_ce(g);
    const double ind = ce_weighted(g, WeightClassSpec::SignedIntervals(),
                                   IntervalConvention::indicator)
                           .value;
    const double pm = ce_weighted(g, WeightClassSpec::SignedIntervals(),
                                  IntervalConvention::pm_one)
                          .value;
    const double gap = std::max(std::fabs(ind - b.indicator), std::fabs(pm - b.pm_one));
    rep.max_gap = std::max(rep.max_gap, gap);
    if (gap > 1e-12) ++rep.failures;
  }
  return rep;
}

inline OracleReport verify_isotonic_suite(std::size_t cases, std::uint64_t seed) {
  OracleReport rep{"isotonic", cases, 0, 0.0};
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < cases; ++t) {
    LabeledSampleSet s;
    const std::size_t m = 1 + rng() % 12;
    for (std::size_t i = 0; i < m; ++i)
      s.items.push_back({0.05 * static_cast<double>(rng() % 21),
                         static_cast<int>(rng() % 2)});
    const double a = pav(s).sse;
    const double b = brute_isotonic(s);
    const double gap = std::fabs(a - b);
    rep.max_gap = std::max(rep.max_gap, gap);
    if (gap > 1e-12) ++rep.failures;
  }
  return rep;
}

inline OracleReport verify_smce_suite(std::size_t cases, std::uint64_t seed) {
  OracleReport rep{"smce", cases, 0, 0.0};
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < cases; ++t) {
    const GroupedData g = verify_detail::random_grouped(rng, 8, false);
    const double a = smce(g).value;
    const double b = brute_smce(g).value;
    const double gap = std::fabs(a - b);
    rep.max_gap = std::max(rep.max_gap, gap);
    if (gap > 1e-9) ++rep.failures;
  }
  return rep;
}

inline std::vector<OracleReport> run_oracle_suites(const std::string& which, std::size_t cases,
                                                   std::uint64_t seed) {
  std::vector<OracleReport> out;
  const bool all = which == "all";
  if (all || which == "union") out.push_back(verify_union_suite(cases, seed));
  if (all || which == "cdl") out.push_back(verify_cdl_suite(cases, seed + 1));
  if (all || which == "ce") out.push_back(verify_ce_suite(cases, seed + 2));
  if (all || which == "isotonic") out.push_back(verify_isotonic_suite(cases, seed + 3));
  if (all || which == "smce") out.push_back(verify_smce_suite(cases, seed + 4));
  if (out.empty())
    throw input_error("unknown oracle suite '" + which +
                      "' (expected ce, union, cdl, isotonic, smce, or all)");
  return out;
}

}  // namespace calib
