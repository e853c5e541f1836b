#include "calib/losses.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace calib {
namespace {

TEST(VShapedLoss, EvaluatesTheSignedDistanceToTheThreshold) {
  const VShapedLoss loss{0.4, +1};
  // p above v: loss is -(y - v)
  EXPECT_DOUBLE_EQ(eval_loss(loss, 0.9, 1.0), -0.6);
  EXPECT_DOUBLE_EQ(eval_loss(loss, 0.9, 0.0), 0.4);
  // p below v: loss is +(y - v)
  EXPECT_DOUBLE_EQ(eval_loss(loss, 0.1, 1.0), 0.6);
  EXPECT_DOUBLE_EQ(eval_loss(loss, 0.1, 0.0), -0.4);
  // tie sign decides p == v
  EXPECT_DOUBLE_EQ(eval_loss(VShapedLoss{0.4, +1}, 0.4, 1.0), -0.6);
  EXPECT_DOUBLE_EQ(eval_loss(VShapedLoss{0.4, -1}, 0.4, 1.0), 0.6);
  EXPECT_DOUBLE_EQ(eval_loss(VShapedLoss{0.4, 0}, 0.4, 1.0), 0.0);
}

TEST(VShapedLoss, DiscreteDerivativeIsTheNegatedSign) {
  const VShapedLoss loss{0.5, +1};
  EXPECT_DOUBLE_EQ(discrete_derivative(loss, 0.2), 1.0);
  EXPECT_DOUBLE_EQ(discrete_derivative(loss, 0.5), -1.0);
  EXPECT_DOUBLE_EQ(discrete_derivative(loss, 0.8), -1.0);
}

TEST(VShapedLoss, IsProperOnAGrid) {
  for (const double v : {0.0, 0.25, 0.5, 0.9, 1.0}) {
    for (const int s : {-1, 0, +1}) {
      const ProprietyReport rep = check_propriety(VShapedLoss{v, s}, 0.01);
      EXPECT_TRUE(rep.proper) << "v=" << v << " s=" << s << " gap=" << rep.worst_gap;
    }
  }
}

TEST(Propriety, FlagsTheAbsoluteLossAsImproper) {
  // |p - y| rewards predicting the majority label, not the probability
  const auto absolute = [](double p, double y) { return std::fabs(p - y); };
  const ProprietyReport rep = check_propriety(absolute, 0.05);
  EXPECT_FALSE(rep.proper);
  EXPECT_LT(rep.worst_gap, -1e-3);
}

ConcavePotentialLoss tent_potential() {
  // phi rises at slope 1 to (0.5, 0.5) and falls at slope -1; superderivative
  // 0 at the kink
  ConcavePotentialLoss loss;
  loss.breakpoints = {0.0, 0.5, 1.0};
  loss.values = {0.0, 0.5, 0.0};
  loss.superderivs = {1.0, 0.0, -1.0};
  return loss;
}

TEST(ConcavePotentialLoss, ValidatesShapeAndSlopes) {
  EXPECT_NO_THROW(tent_potential().validate());

  ConcavePotentialLoss steep = tent_potential();
  steep.values = {0.0, 0.8, 0.0};  // slope 1.6
  EXPECT_THROW(steep.validate(), input_error);

  ConcavePotentialLoss convex = tent_potential();
  convex.values = {0.5, 0.0, 0.5};  // slopes -1 then +1
  convex.superderivs = {-1.0, 0.0, 1.0};
  EXPECT_THROW(convex.validate(), input_error);

  ConcavePotentialLoss bad_super = tent_potential();
  bad_super.superderivs = {1.0, 0.9, -1.0};  // 0.9 above the left slope? no:
  // at an interior breakpoint the superderivative must lie between the
  // adjacent slopes [-1, 1]; 0.9 is fine, so this one validates
  EXPECT_NO_THROW(bad_super.validate());
  bad_super.superderivs = {0.5, 0.0, -1.0};  // 0.5 below the first slope 1? the
  // boundary allows [slope(0), 1] = [1, 1] only when the next slope is 1;
  // here slope(0) = 1 so 0.5 violates the lower bound
  EXPECT_THROW(bad_super.validate(), input_error);
}

TEST(ConcavePotentialLoss, IsProperOnAGrid) {
  const ProprietyReport rep = check_propriety(tent_potential(), 0.01);
  EXPECT_TRUE(rep.proper) << rep.worst_gap;
}

TEST(ExpectedLoss, IsLinearInTheOutcomeProbability) {
  const VShapedLoss loss{0.3, +1};
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const double p = unif(rng), q = unif(rng);
    const double direct = q * eval_loss(loss, p, 1.0) + (1.0 - q) * eval_loss(loss, p, 0.0);
    EXPECT_DOUBLE_EQ(expected_loss(loss, p, q), direct);
  }
}

TEST(MixtureLoss, ValidatesWeightBudget) {
  MixtureLoss mix;
  mix.atoms = {{VShapedLoss{0.3, +1}, 0.6}, {VShapedLoss{0.7, +1}, 0.6}};
  EXPECT_THROW(mix.validate(), input_error);  // weights sum to 1.2
  mix.atoms[1].weight = 0.4;
  EXPECT_NO_THROW(mix.validate());
  mix.atoms[1].weight = -0.1;
  EXPECT_THROW(mix.validate(), input_error);
}

TEST(ToMixture, ReproducesThePotentialLossEverywhere) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int t = 0; t < 40; ++t) {
    // random concave potential: pick decreasing slopes in [-1, 1] and integrate
    const int segs = 1 + static_cast<int>(rng() % 4);
    std::vector<double> bps{0.0};
    while (static_cast<int>(bps.size()) < segs + 1) {
      bps.push_back(unif(rng));
      std::sort(bps.begin(), bps.end());
      bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
    }
    bps.back() = 1.0;
    std::vector<double> slopes(bps.size() - 1);
    for (auto& s : slopes) s = 2.0 * unif(rng) - 1.0;
    std::sort(slopes.rbegin(), slopes.rend());
    ConcavePotentialLoss loss;
    loss.breakpoints = bps;
    loss.values.assign(bps.size(), 0.0);
    for (std::size_t i = 1; i < bps.size(); ++i)
      loss.values[i] = loss.values[i - 1] + slopes[i - 1] * (bps[i] - bps[i - 1]);
    // right-segment superderivative convention matches the mixture exactly
    for (std::size_t i = 0; i < bps.size(); ++i)
      loss.superderivs.push_back(i + 1 < bps.size() ? slopes[i] : slopes.back());
    loss.validate();

    const MixtureLoss mix = to_mixture(loss);
    for (int i = 0; i <= 200; ++i) {
      const double p = static_cast<double>(i) / 200.0;
      for (const double y : {0.0, 1.0}) {
        EXPECT_NEAR(eval_loss(mix, p, y), eval_loss(loss, p, y), 1e-6)
            << "t=" << t << " p=" << p << " y=" << y;
      }
    }
  }
}

TEST(StronglyProperMix, RequiresASmallPositiveWeight) {
  const LossSpec base = VShapedLoss{0.5, +1};
  EXPECT_THROW(mix_strongly_proper(base, 0.0), input_error);
  EXPECT_THROW(mix_strongly_proper(base, 0.0625), input_error);  // 1/16 excluded
  const StronglyProperMix mix = mix_strongly_proper(base, 0.01);
  // mixing in the squared loss keeps propriety and makes it strict
  const ProprietyReport rep = check_propriety(mix, 0.02);
  EXPECT_TRUE(rep.proper);
  const double truthful = expected_loss(mix, 0.3, 0.3);
  const double off = expected_loss(mix, 0.31, 0.3);
  EXPECT_GT(off, truthful);  // strictly worse even on the same decision side
}

}  // namespace
}  // namespace calib
