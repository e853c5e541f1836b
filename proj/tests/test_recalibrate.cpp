#include "calib/recalibrate.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "calib/experiments.hpp"
#include "calib/oracles.hpp"

namespace calib {
namespace {

LabeledSampleSet random_samples(std::mt19937_64& rng, std::size_t m) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  LabeledSampleSet data;
  for (std::size_t i = 0; i < m; ++i) {
    const double p = 0.05 * static_cast<double>(rng() % 21);
    data.items.push_back({p, unif(rng) < p * 0.6 + 0.2 ? 1 : 0});
  }
  return data;
}

TEST(Pav, FitsAStrictlyIncreasingStaircase) {
  LabeledSampleSet data;
  // groups 0.1 -> mean 0, 0.5 -> mean 1, 0.9 -> mean 0.5: the violator pair
  // (0.5, 0.9) pools to 0.75
  data.items = {{0.1, 0}, {0.1, 0}, {0.5, 1}, {0.5, 1}, {0.9, 1}, {0.9, 0}};
  const PavResult res = pav(data);
  ASSERT_EQ(res.fitted.size(), 3u);
  EXPECT_DOUBLE_EQ(res.fitted[0], 0.0);
  EXPECT_DOUBLE_EQ(res.fitted[1], 0.75);
  EXPECT_DOUBLE_EQ(res.fitted[2], 0.75);
  ASSERT_EQ(res.block_values.size(), 2u);
  for (std::size_t i = 1; i < res.block_values.size(); ++i)
    ASSERT_LT(res.block_values[i - 1], res.block_values[i]);  // ties merge
}

TEST(Pav, MatchesTheExhaustivePartitionOracle) {
  std::mt19937_64 rng(61);
  for (int t = 0; t < 150; ++t) {
    LabeledSampleSet data = random_samples(rng, 4 + rng() % 9);
    const PavResult fast = pav(data);
    const double slow = brute_isotonic(data);
    ASSERT_NEAR(fast.sse, slow, 1e-12) << "t=" << t;
  }
}

TEST(Pav, FittedMapReproducesTheFittedValuesAtTheData) {
  std::mt19937_64 rng(67);
  for (int t = 0; t < 50; ++t) {
    LabeledSampleSet data = random_samples(rng, 30);
    const PavResult res = pav(data);
    const auto groups = data.grouped();
    for (std::size_t i = 0; i < groups.size(); ++i)
      ASSERT_NEAR(res.kappa(groups[i].p), res.fitted[i], 1e-15);
    EXPECT_TRUE(membership(res.kappa, PostClass::MonotoneNondecreasing()).member);
  }
}

TEST(Umb, PartitionTilesTheUnitIntervalWithinTheCellBudget) {
  std::mt19937_64 rng(71);
  for (const double eps_prime : {0.5, 0.2, 0.05, 0.0125}) {
    LabeledSampleSet data = random_samples(rng, 400);
    const UmbPartition part = umb_partition(data, eps_prime);  // validates internally
    EXPECT_LT(static_cast<double>(part.cells.size()), 2.0 / eps_prime + 1.0);
    // every sample lands in exactly one cell
    for (const auto& it : data.items) {
      std::size_t hits = 0;
      for (const auto& cell : part.cells) hits += cell.iv.contains(it.p) ? 1 : 0;
      ASSERT_EQ(hits, 1u);
    }
  }
}

TEST(Umb, HeavyValuesBecomeSingletonCells) {
  LabeledSampleSet data;
  for (int i = 0; i < 50; ++i) data.items.push_back({0.5, i % 2});
  for (int i = 0; i < 10; ++i)
    data.items.push_back({0.1 + 0.01 * static_cast<double>(i), 1});
  const UmbPartition part = umb_partition(data, 0.2);  // cap = 12 points
  bool found = false;
  for (const auto& cell : part.cells) {
    if (!cell.overflow) continue;
    found = true;
    EXPECT_TRUE(cell.iv.is_singleton());
    EXPECT_DOUBLE_EQ(cell.iv.lo, 0.5);
    EXPECT_EQ(cell.count, 50u);
  }
  EXPECT_TRUE(found);
}

TEST(Umb, ExportedMapAgreesWithTheCellFitsOnEveryInput) {
  std::mt19937_64 rng(73);
  for (int t = 0; t < 30; ++t) {
    LabeledSampleSet data = random_samples(rng, 200);
    const UmbResult res = umb_recalibrate(data, 0.1);
    for (const auto& cell : res.partition.cells) {
      // probe the closed endpoint, the midpoint and the sample values inside
      for (const double x : {cell.iv.lo, 0.5 * (cell.iv.lo + cell.iv.hi), cell.iv.hi}) {
        if (!cell.iv.contains(x)) continue;
        ASSERT_DOUBLE_EQ(res.kappa(x), clip01(cell.fitted))
            << "t=" << t << " cell=" << interval_to_string(cell.iv);
      }
    }
  }
}

TEST(Umb, EpsilonOverloadDividesTheBudgetAcrossIntervals) {
  std::mt19937_64 rng(79);
  LabeledSampleSet data = random_samples(rng, 500);
  const UmbResult a = umb_recalibrate(data, 0.2, 2);
  const UmbResult b = umb_recalibrate(data, 0.2 / 16.0);
  EXPECT_EQ(a.partition.cells.size(), b.partition.cells.size());
  EXPECT_DOUBLE_EQ(a.partition.eps_prime, 0.0125);
  EXPECT_THROW(umb_recalibrate(LabeledSampleSet{}, 0.1), input_error);
  EXPECT_THROW(umb_recalibrate(data, 0.0), input_error);
}

TEST(Calma, ConvergesToACalibratedMultiaccurateMap) {
  std::mt19937_64 rng(83);
  for (int t = 0; t < 20; ++t) {
    LabeledSampleSet data = random_samples(rng, 300);
    const PostClass cls = PostClass::GeneralizedMonotone(2);
    const CalmaResult res = calibrated_multiaccuracy(data, cls, 0.1);
    ASSERT_TRUE(res.converged);
    ASSERT_LE(res.final_violation, 0.05 + 1e-12);
    const CalmaCheck chk = check_calma(data, res.kappa, cls, 0.1);
    ASSERT_TRUE(chk.ok) << "miscal=" << chk.level_miscalibration
                        << " violation=" << chk.violation;
    // the recorded potential trace is strictly decreasing
    for (std::size_t i = 1; i < res.potential_trace.size(); ++i)
      ASSERT_LT(res.potential_trace[i], res.potential_trace[i - 1]);
  }
}

TEST(Calma, RejectsUnsupportedFamiliesAndBadParameters) {
  LabeledSampleSet data;
  data.items = {{0.2, 0}, {0.8, 1}};
  EXPECT_THROW(calibrated_multiaccuracy(data, PostClass::Lipschitz(1.0), 0.1),
               unsupported_error);
  EXPECT_THROW(calibrated_multiaccuracy(data, PostClass::MonotoneNonincreasing(), 0.1),
               unsupported_error);
  EXPECT_THROW(calibrated_multiaccuracy(data, PostClass::GeneralizedMonotone(1), 0.0),
               input_error);
}

TEST(OmniGap, IdentityAgainstItselfIsZeroAndMembershipIsEnforced) {
  std::mt19937_64 rng(89);
  LabeledSampleSet data = random_samples(rng, 100);
  PostProcessingMap identity;
  identity.kind = MapKind::piecewise_linear;
  identity.interpolate = true;
  identity.breakpoints = {0.0, 1.0};
  identity.values = {0.0, 1.0};
  const OmniGapReport rep =
      omni_gap(data, identity, {identity}, PostClass::GeneralizedMonotone(2));
  EXPECT_NEAR(rep.gap, 0.0, 1e-15);

  // a zigzag baseline needs three intervals, so the class check must fire
  PostProcessingMap zigzag;
  zigzag.kind = MapKind::piecewise_constant;
  zigzag.breakpoints = {0.0, 0.2, 0.4, 0.6, 0.8};
  zigzag.values = {0.9, 0.1, 0.9, 0.1, 0.9};
  EXPECT_THROW(omni_gap(data, identity, {zigzag}, PostClass::GeneralizedMonotone(2)),
               input_error);
  EXPECT_THROW(omni_gap(data, identity, {}, PostClass::All()), input_error);
}

TEST(OmniGap, RecalibratedMapsBeatTheirBaselinesOnCalibratedData) {
  // draw from an exactly calibrated distribution, recalibrate with each
  // method, and compare against random two-interval baselines on the
  // distribution itself
  std::mt19937_64 rng(97);
  FiniteJointDistribution dist;
  dist.atoms = {{0.1, 0.25, 0.1}, {0.4, 0.25, 0.4}, {0.6, 0.25, 0.6}, {0.9, 0.25, 0.9}};
  const LabeledSampleSet data = sample_from(dist, 5000, 11);
  std::vector<PostProcessingMap> baselines;
  for (int b = 0; b < 10; ++b) baselines.push_back(random_step_map(rng));
  const PostClass cls = PostClass::GeneralizedMonotone(2);

  const UmbResult umb = umb_recalibrate(data, 0.2, 2);
  EXPECT_LE(omni_gap(dist, umb.kappa, baselines, cls).gap, 0.2);
  const CalmaResult cal = calibrated_multiaccuracy(data, cls, 0.2);
  EXPECT_LE(omni_gap(dist, cal.kappa, baselines, cls).gap, 0.2);
}

}  // namespace
}  // namespace calib
