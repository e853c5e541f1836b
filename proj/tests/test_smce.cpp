#include "calib/smce.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "calib/experiments.hpp"
#include "calib/oracles.hpp"
#include "calib/postprocess.hpp"

namespace calib {
namespace {

TEST(Smce, SingleGroupIsTheAbsoluteResidual) {
  const GroupedData g{{0.3, 1.0, 0.8}};
  const SmceResult res = smce(g);
  EXPECT_NEAR(res.value, 0.5, 1e-15);
  ASSERT_EQ(res.weights.size(), 1u);
  EXPECT_DOUBLE_EQ(res.weights[0], 1.0);
}

TEST(Smce, CloseGroupsWithOpposingResidualsCancel) {
  // two groups 0.1 apart with residuals +-0.25: a 1-Lipschitz weight can move
  // by at most 0.1 between them, so it cannot collect both residuals fully
  const GroupedData g{{0.4, 0.5, 0.9}, {0.5, 0.5, 0.0}};  // z = {+0.25, -0.25}
  const SmceResult res = smce(g);
  // optimum: w = (+1, +0.9) gives 0.25 - 0.225 = 0.025; w = (+0.05, -0.05)
  // gives 0.025; the cap |w|<=1 and step 0.1 limit every choice to 0.025
  EXPECT_NEAR(res.value, 0.025, 1e-12);
}

TEST(Smce, MatchesTheVertexEnumerationOracle) {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 120; ++t) {
    const FiniteJointDistribution dist = random_distribution(rng, 6);
    const GroupedData g = grouped_view(dist);
    const SmceResult fast = smce(g);
    const BruteSmce slow = brute_smce(g);
    ASSERT_NEAR(fast.value, slow.value, 1e-9)
        << "t=" << t << " groups=" << g.size();
  }
}

TEST(Smce, WitnessWeightsAreFeasibleAndAttainTheValue) {
  std::mt19937_64 rng(43);
  for (int t = 0; t < 60; ++t) {
    const FiniteJointDistribution dist = random_distribution(rng, 15);
    const GroupedData g = grouped_view(dist);
    const SmceResult res = smce(g);
    ASSERT_EQ(res.weights.size(), g.size());
    double attained = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      ASSERT_LE(std::fabs(res.weights[i]), 1.0 + 1e-12);
      if (i > 0) {
        ASSERT_LE(std::fabs(res.weights[i] - res.weights[i - 1]),
                  g[i].p - g[i - 1].p + 1e-12);
      }
      attained += res.weights[i] * g[i].w * (g[i].ybar - g[i].p);
    }
    ASSERT_NEAR(attained, res.value, 1e-9);
  }
}

TEST(Smce, IsNonnegativeAndBoundedByEce) {
  std::mt19937_64 rng(47);
  for (int t = 0; t < 60; ++t) {
    const FiniteJointDistribution dist = random_distribution(rng, 15);
    const SmceResult res = smce(dist);
    ASSERT_GE(res.value, -1e-12);  // the zero weight function is feasible
    double e = 0.0;
    for (const auto& a : dist.atoms) e += a.mass * std::fabs(a.q - a.p);
    ASSERT_LE(res.value, e + 1e-12);  // |w| <= 1 caps every group's contribution
  }
}

TEST(Smce, ClippedShiftAlongTheWitnessImprovesSquaredLoss) {
  // moving predictions by alpha * w(p) with the optimal smooth weights lowers
  // the squared risk by at least alpha^2 when alpha <= smce value
  std::mt19937_64 rng(53);
  for (int t = 0; t < 40; ++t) {
    const FiniteJointDistribution dist = random_distribution(rng, 12);
    const GroupedData g = grouped_view(dist);
    const SmceResult res = smce(g);
    if (res.value <= 1e-9) continue;
    const double alpha = std::min(res.value, 1.0);
    double before = 0.0, after = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double moved = clip01(g[i].p + alpha * res.weights[i]);
      before += g[i].w * (g[i].ybar * (1.0 - g[i].p) * (1.0 - g[i].p) +
                          (1.0 - g[i].ybar) * g[i].p * g[i].p);
      after += g[i].w * (g[i].ybar * (1.0 - moved) * (1.0 - moved) +
                         (1.0 - g[i].ybar) * moved * moved);
    }
    ASSERT_LE(after, before - alpha * alpha + 1e-9)
        << "t=" << t << " smce=" << res.value;
  }
}

TEST(Smce, HandlesEmptyAndLargeInputs) {
  EXPECT_DOUBLE_EQ(smce(GroupedData{}).value, 0.0);
  // a long calibrated sequence stays at zero
  GroupedData g;
  for (int i = 0; i < 500; ++i) {
    const double p = static_cast<double>(i + 1) / 501.0;
    g.push_back({p, 1.0 / 500.0, p});
  }
  EXPECT_NEAR(smce(g).value, 0.0, 1e-12);
}

}  // namespace
}  // namespace calib
