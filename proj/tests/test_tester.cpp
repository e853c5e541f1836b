#include "calib/tester.hpp"

#include <gtest/gtest.h>

#include <random>

#include "calib/experiments.hpp"

namespace calib {
namespace {

LabeledSampleSet calibrated_draw(std::size_t m, std::uint64_t seed) {
  FiniteJointDistribution dist;
  dist.atoms = {{0.1, 0.2, 0.1}, {0.3, 0.2, 0.3}, {0.5, 0.2, 0.5},
                {0.7, 0.2, 0.7}, {0.9, 0.2, 0.9}};
  return sample_from(dist, m, seed);
}

LabeledSampleSet miscalibrated_draw(std::size_t m, std::uint64_t seed) {
  // one point mass at 0.7 whose outcomes are always 1: decision loss 0.6
  return sample_from(gen_tightness(TightnessVariant::point_mass, 0.3, 2), m, seed);
}

TEST(TestEmpirical, AcceptsCalibratedAndRejectsMiscalibratedData) {
  const PostClass cls = PostClass::GeneralizedMonotone(2);
  const TestVerdict ok = test_empirical(calibrated_draw(4000, 1), cls, 0.2, 0.1, 3);
  EXPECT_FALSE(ok.reject);
  EXPECT_EQ(ok.route, "empirical");
  EXPECT_EQ(ok.folds, 3);
  EXPECT_NEAR(ok.threshold, 0.15, 1e-12);

  const TestVerdict bad = test_empirical(miscalibrated_draw(4000, 2), cls, 0.2, 0.1, 3);
  EXPECT_TRUE(bad.reject);
  EXPECT_GT(bad.statistic, 0.5);  // the point mass is off by 0.3, doubled
}

TEST(TestEmpirical, ValidatesItsParameters) {
  const LabeledSampleSet data = calibrated_draw(100, 3);
  const PostClass cls = PostClass::All();
  EXPECT_THROW(test_empirical(data, cls, 0.2, 0.1, 2), input_error);   // even folds
  EXPECT_THROW(test_empirical(data, cls, 0.2, 0.0, 1), input_error);   // eps = 0
  EXPECT_THROW(test_empirical(data, cls, 0.0, 0.1, 1), input_error);   // alpha = 0
  EXPECT_THROW(test_empirical(data, cls, 0.1, 0.2, 1), input_error);   // eps > alpha
}

TEST(TestEmpirical, MajorityOfFoldsDecides) {
  const TestVerdict v = test_empirical(calibrated_draw(3000, 5),
                                       PostClass::MonotoneNondecreasing(), 0.2, 0.1, 5);
  ASSERT_EQ(v.fold_statistics.size(), 5u);
  std::size_t rejections = 0;
  for (const double s : v.fold_statistics) rejections += s > v.threshold ? 1 : 0;
  EXPECT_EQ(v.reject, rejections * 2 > 5);
}

TEST(AuditViaLearner, AgreesWithTheEmpiricalRouteOnClearInstances) {
  const PostClass cls = PostClass::GeneralizedMonotone(2);
  const TestVerdict ok =
      audit_via_learner(calibrated_draw(4000, 7), cls, 0.2, 0.1, 99, 1.0 / 3.0, 3);
  EXPECT_FALSE(ok.reject);
  EXPECT_EQ(ok.route, "audit");
  EXPECT_FALSE(ok.net.points.empty());

  const TestVerdict bad =
      audit_via_learner(miscalibrated_draw(4000, 8), cls, 0.2, 0.1, 99, 1.0 / 3.0, 3);
  EXPECT_TRUE(bad.reject);
}

TEST(AuditViaLearner, RequiresAnIntervalFamilyAndWideLevels) {
  const LabeledSampleSet data = calibrated_draw(200, 9);
  EXPECT_THROW(audit_via_learner(data, PostClass::All(), 0.2, 0.1, 1), unsupported_error);
  // alpha <= 3 eps / 2 leaves no positive acceptance threshold
  EXPECT_THROW(audit_via_learner(data, PostClass::GeneralizedMonotone(1), 0.15, 0.1, 1),
               input_error);
}

TEST(SquaredGain, UsesTheExactBinaryOutcomeIdentity) {
  const GroupedData g{{0.3, 0.5, 0.6}, {0.8, 0.5, 0.4}};
  PostProcessingMap to_mean;  // map everything to the overall mean 0.5
  to_mean.kind = MapKind::piecewise_constant;
  to_mean.breakpoints = {0.0};
  to_mean.values = {0.5};
  // before: 0.5*(0.6*0.49 + 0.4*0.09) + 0.5*(0.4*0.04 + 0.6*0.64)
  // after:  0.5*(0.6*0.25 + 0.4*0.25) + 0.5*(0.4*0.25 + 0.6*0.25) = 0.25
  const double before = 0.5 * (0.6 * 0.49 + 0.4 * 0.09) + 0.5 * (0.4 * 0.04 + 0.6 * 0.64);
  EXPECT_NEAR(squared_gain(g, to_mean), before - 0.25, 1e-15);
}

TEST(TestStronglyProper, MixedObjectiveTracksTheEmpiricalRoute) {
  const PostClass cls = PostClass::GeneralizedMonotone(2);
  const TestVerdict ok =
      test_strongly_proper(calibrated_draw(4000, 13), cls, 0.2, 0.1, 0.01, 3);
  EXPECT_FALSE(ok.reject);
  EXPECT_EQ(ok.route, "strongly-proper");

  const TestVerdict bad =
      test_strongly_proper(miscalibrated_draw(4000, 14), cls, 0.2, 0.1, 0.01, 3);
  EXPECT_TRUE(bad.reject);

  EXPECT_THROW(
      test_strongly_proper(calibrated_draw(100, 15), cls, 0.2, 0.1, 0.2, 1),
      input_error);  // mu outside (0, 1/16)
}

TEST(TestRoutes, StatisticsStayCloseAcrossRoutesOnTheSameData) {
  // on a grossly miscalibrated instance all three statistics see most of the
  // huge decision loss, staying far above their thresholds
  const PostClass cls = PostClass::GeneralizedMonotone(1);
  const LabeledSampleSet data = miscalibrated_draw(2000, 17);
  const double emp = test_empirical(data, cls, 0.5, 0.2, 1).statistic;
  const double aud = audit_via_learner(data, cls, 0.5, 0.2, 5, 1.0 / 3.0, 1).statistic;
  const double prop = test_strongly_proper(data, cls, 0.5, 0.2, 0.01, 1).statistic;
  EXPECT_NEAR(emp, 0.6, 0.05);
  EXPECT_GT(aud, 0.4);
  EXPECT_NEAR(prop, emp, 0.1);
}

TEST(InterleavedFolds, EveryFoldSeesEveryHeavyAtom) {
  // fold f takes items i with i % folds == f, so a large iid draw gives each
  // fold a representative share of each prediction value
  const LabeledSampleSet data = calibrated_draw(3000, 19);
  const TestVerdict v = test_empirical(data, PostClass::All(), 1.0, 0.5, 5);
  ASSERT_EQ(v.fold_statistics.size(), 5u);
  for (const double s : v.fold_statistics) EXPECT_LT(s, 0.2);  // all folds calibrated-ish
}

}  // namespace
}  // namespace calib
