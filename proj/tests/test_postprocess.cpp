#include "calib/postprocess.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "calib/experiments.hpp"

namespace calib {
namespace {

PostProcessingMap step_map(std::vector<double> starts, std::vector<double> values) {
  PostProcessingMap m;
  m.kind = MapKind::piecewise_constant;
  m.interpolate = false;
  m.breakpoints = std::move(starts);
  m.values = std::move(values);
  m.validate();
  return m;
}

PostProcessingMap linear_map(std::vector<double> bps, std::vector<double> values) {
  PostProcessingMap m;
  m.kind = MapKind::piecewise_linear;
  m.interpolate = true;
  m.breakpoints = std::move(bps);
  m.values = std::move(values);
  m.validate();
  return m;
}

TEST(PostProcessingMap, PiecewiseConstantHoldsRightOpenSegments) {
  const PostProcessingMap m = step_map({0.0, 0.4, 0.8}, {0.1, 0.6, 0.3});
  EXPECT_DOUBLE_EQ(m(0.0), 0.1);
  EXPECT_DOUBLE_EQ(m(0.39), 0.1);
  EXPECT_DOUBLE_EQ(m(0.4), 0.6);  // new segment starts at its own start point
  EXPECT_DOUBLE_EQ(m(0.79), 0.6);
  EXPECT_DOUBLE_EQ(m(0.8), 0.3);
  EXPECT_DOUBLE_EQ(m(1.0), 0.3);
}

TEST(PostProcessingMap, SingletonCellViaSuccessorDouble) {
  // {0.5} |-> 1 exactly, everything else 0: start the next segment at the
  // smallest double above 0.5
  const double next = std::nextafter(0.5, 2.0);
  const PostProcessingMap m = step_map({0.0, 0.5, next}, {0.0, 1.0, 0.0});
  EXPECT_DOUBLE_EQ(m(0.5), 1.0);
  EXPECT_DOUBLE_EQ(m(next), 0.0);
  EXPECT_DOUBLE_EQ(m(std::nextafter(0.5, 0.0)), 0.0);
}

TEST(PostProcessingMap, PiecewiseLinearInterpolatesAndClampsOutside) {
  const PostProcessingMap m = linear_map({0.2, 0.6}, {0.0, 1.0});
  EXPECT_DOUBLE_EQ(m(0.0), 0.0);  // constant left of the first breakpoint
  EXPECT_DOUBLE_EQ(m(0.4), 0.5);
  EXPECT_DOUBLE_EQ(m(1.0), 1.0);  // constant right of the last breakpoint
}

TEST(PostProcessingMap, ValidateRejectsMalformedMaps) {
  PostProcessingMap m;
  m.kind = MapKind::piecewise_constant;
  m.breakpoints = {0.1};  // must start at 0
  m.values = {0.5};
  EXPECT_THROW(m.validate(), input_error);
  m.breakpoints = {0.0, 0.0};  // not strictly increasing
  m.values = {0.5, 0.6};
  EXPECT_THROW(m.validate(), input_error);
  m.breakpoints = {0.0};
  m.values = {1.5};  // value outside [0,1]
  EXPECT_THROW(m.validate(), input_error);
}

TEST(SuperlevelSet, MergesAdjacentSelectedSegments) {
  const PostProcessingMap m = step_map({0.0, 0.3, 0.6}, {0.8, 0.9, 0.1});
  const IntervalUnion u = superlevel_set(m, 0.5);
  ASSERT_EQ(u.count(), 1u);
  EXPECT_DOUBLE_EQ(u.parts[0].lo, 0.0);
  EXPECT_DOUBLE_EQ(u.parts[0].hi, 0.6);
  EXPECT_TRUE(u.parts[0].lo_closed);
  EXPECT_FALSE(u.parts[0].hi_closed);
}

TEST(SuperlevelSet, SolvesWithinLinearPieces) {
  const PostProcessingMap m = linear_map({0.0, 0.5, 1.0}, {0.0, 1.0, 0.0});
  const IntervalUnion u = superlevel_set(m, 0.5);
  ASSERT_EQ(u.count(), 1u);
  EXPECT_NEAR(u.parts[0].lo, 0.25, 1e-15);
  EXPECT_NEAR(u.parts[0].hi, 0.75, 1e-15);
}

TEST(SuperlevelSet, CanonicalizesSingletonCells) {
  const double next = std::nextafter(0.5, 2.0);
  const PostProcessingMap m = step_map({0.0, 0.5, next}, {0.0, 1.0, 0.0});
  const IntervalUnion u = superlevel_set(m, 0.75);
  ASSERT_EQ(u.count(), 1u);
  EXPECT_DOUBLE_EQ(u.parts[0].lo, 0.5);
  EXPECT_DOUBLE_EQ(u.parts[0].hi, 0.5);
  EXPECT_TRUE(u.parts[0].hi_closed);
}

TEST(Membership, ChecksEachFamilyStructurally) {
  const PostProcessingMap up = step_map({0.0, 0.5}, {0.2, 0.8});
  const PostProcessingMap down = step_map({0.0, 0.5}, {0.8, 0.2});
  const PostProcessingMap zigzag = step_map({0.0, 0.25, 0.5, 0.75}, {0.9, 0.1, 0.9, 0.1});

  EXPECT_TRUE(membership(up, PostClass::All()).member);
  EXPECT_TRUE(membership(up, PostClass::MonotoneNondecreasing()).member);
  EXPECT_FALSE(membership(up, PostClass::MonotoneNonincreasing()).member);
  EXPECT_TRUE(membership(down, PostClass::MonotoneNonincreasing()).member);
  EXPECT_FALSE(membership(down, PostClass::MonotoneNondecreasing()).member);

  // the zigzag needs two intervals at the middle level
  EXPECT_FALSE(membership(zigzag, PostClass::GeneralizedMonotone(1)).member);
  EXPECT_TRUE(membership(zigzag, PostClass::GeneralizedMonotone(2)).member);

  // jumps break the Lipschitz family; a gentle linear map belongs to it
  EXPECT_FALSE(membership(up, PostClass::Lipschitz(1.0)).member);
  EXPECT_TRUE(membership(linear_map({0.0, 1.0}, {0.2, 0.8}), PostClass::Lipschitz(1.0)).member);
  EXPECT_FALSE(membership(linear_map({0.0, 1.0}, {0.0, 1.0}), PostClass::Lipschitz(0.5)).member);
}

TEST(Membership, EveryMonotoneStepMapHasOneIntervalSuperlevels) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    PostProcessingMap m = random_step_map(rng, 5);
    std::sort(m.values.begin(), m.values.end());
    EXPECT_TRUE(membership(m, PostClass::GeneralizedMonotone(1)).member);
  }
}

TEST(CrossingNumber, CountsAlternationsAtTheWorstLevel) {
  EXPECT_EQ(crossing_number(step_map({0.0}, {0.7})), 0u);
  EXPECT_EQ(crossing_number(step_map({0.0, 0.5}, {0.2, 0.8})), 1u);
  EXPECT_EQ(crossing_number(step_map({0.0, 0.25, 0.5, 0.75}, {0.9, 0.1, 0.9, 0.1})), 3u);
}

TEST(TotalVariation, SumsJumpsAndSlopes) {
  EXPECT_DOUBLE_EQ(total_variation(step_map({0.0, 0.5}, {0.2, 0.8})), 0.6);
  EXPECT_DOUBLE_EQ(total_variation(linear_map({0.0, 0.5, 1.0}, {0.0, 1.0, 0.0})), 2.0);
}

TEST(TotalVariation, NeverExceedsTheCrossingNumber) {
  // with values in [0,1], every unit of variation has to recross some level,
  // so total variation is bounded by the worst-level alternation count
  std::mt19937_64 rng(23);
  for (int t = 0; t < 200; ++t) {
    const PostProcessingMap m = random_step_map(rng, 6);
    EXPECT_LE(total_variation(m), static_cast<double>(crossing_number(m)) + 1e-12);
  }
}

TEST(Translate, MatchesThePointwiseCompositionExactly) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const PostProcessingMap m = random_step_map(rng, 5);
    const double s = 2.0 * unif(rng) - 1.0;
    const double shift = 2.0 * unif(rng) - 1.0;
    const PostProcessingMap moved = translate(m, s, shift);
    for (int i = 0; i <= 400; ++i) {
      const double p = static_cast<double>(i) / 400.0;
      const double want = clip01(m(clip01(p + s)) + shift);
      ASSERT_NEAR(moved(p), want, 1e-12) << "t=" << t << " p=" << p;
    }
  }
}

TEST(Translate, HandlesPiecewiseLinearMapsWithClipping) {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    // random increasing breakpoints with random values
    std::vector<double> bps;
    const int n = 2 + static_cast<int>(rng() % 4);
    while (static_cast<int>(bps.size()) < n) {
      bps.push_back(unif(rng));
      std::sort(bps.begin(), bps.end());
      bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
    }
    std::vector<double> vals;
    for (int i = 0; i < n; ++i) vals.push_back(unif(rng));
    const PostProcessingMap m = linear_map(bps, vals);
    const double s = 2.0 * unif(rng) - 1.0;
    const double shift = 2.0 * unif(rng) - 1.0;
    const PostProcessingMap moved = translate(m, s, shift);
    for (int i = 0; i <= 400; ++i) {
      const double p = static_cast<double>(i) / 400.0;
      const double want = clip01(m(clip01(p + s)) + shift);
      ASSERT_NEAR(moved(p), want, 1e-9) << "t=" << t << " p=" << p;
    }
  }
}

TEST(ShatteringWitness, IntervalBudgetShattersTwiceItsSizeAndNoMore) {
  for (const int r : {1, 2, 3}) {
    const ShatteringWitness w = build_shattering_witness(PostClass::GeneralizedMonotone(r));
    EXPECT_EQ(w.points.size(), static_cast<std::size_t>(2 * r));
    EXPECT_TRUE(w.all_realized);
    EXPECT_EQ(w.labelings_checked, 1u << (2 * r));
    ASSERT_EQ(w.infeasible_labeling.size(), static_cast<std::size_t>(2 * r + 1));
    // the alternating labeling starts and ends positive: r+1 positive runs
    std::size_t runs = 0;
    for (std::size_t i = 0; i < w.infeasible_labeling.size(); ++i)
      if (w.infeasible_labeling[i] > 0 && (i == 0 || w.infeasible_labeling[i - 1] < 0)) ++runs;
    EXPECT_EQ(runs, static_cast<std::size_t>(r + 1));
  }
}

TEST(ShatteringWitness, MonotoneFamiliesStopAtTwoPoints) {
  const ShatteringWitness up = build_shattering_witness(PostClass::MonotoneNondecreasing());
  EXPECT_TRUE(up.all_realized);
  EXPECT_EQ(up.infeasible_labeling, (std::vector<int>{+1, -1}));
  const ShatteringWitness down = build_shattering_witness(PostClass::MonotoneNonincreasing());
  EXPECT_TRUE(down.all_realized);
  EXPECT_EQ(down.infeasible_labeling, (std::vector<int>{-1, +1}));
}

TEST(ShatteringWitness, LipschitzFamilyShattersTheSpacedGrid) {
  const ShatteringWitness w = build_shattering_witness(PostClass::Lipschitz(1.0));
  EXPECT_TRUE(w.all_realized);
  EXPECT_EQ(w.labelings_checked, 32u);
  EXPECT_TRUE(w.infeasible_labeling.empty());
}

}  // namespace
}  // namespace calib
