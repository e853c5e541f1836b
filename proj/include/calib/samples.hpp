#pragma once

// labeled prediction/outcome samples, finite joint distributions over
// (prediction, outcome), and the grouped view both reduce to.
//
// everything downstream works on the grouped view: distinct predictions in
// increasing order, each carrying a probability weight and the conditional
// outcome mean.  for an empirical sample the weight is count/m and the mean is
// the observed label average; for a finite distribution it is the atom mass
// and the conditional success probability.  all the metrics in this library
// are linear in the outcome given the prediction, so computing them on the
// grouped view is exact for both kinds of data.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "calib/common.hpp"

namespace calib {

struct LabeledSample {
  double p = 0.0;  // prediction in [0,1]
  int y = 0;       // outcome in {0,1}
};

struct LabeledSampleSet {
  std::vector<LabeledSample> items;

  struct Group {
    double p = 0.0;
    std::size_t count = 0;
    double ysum = 0.0;
  };

  std::size_t size() const { return items.size(); }

  void validate() const {
    for (const auto& s : items) {
      if (!(s.p >= 0.0 && s.p <= 1.0))
        throw input_error("sample prediction outside [0,1]");
      if (s.y != 0 && s.y != 1) throw input_error("sample outcome not in {0,1}");
    }
  }

  // distinct predictions in increasing order with counts and label sums
  std::vector<Group> grouped() const {
    std::vector<LabeledSample> sorted = items;
    std::sort(sorted.begin(), sorted.end(),
              [](const LabeledSample& a, const LabeledSample& b) { return a.p < b.p; });
    std::vector<Group> out;
    for (const auto& s : sorted) {
      if (out.empty() || out.back().p != s.p) out.push_back({s.p, 0, 0.0});
      out.back().count += 1;
      out.back().ysum += s.y;
    }
    return out;
  }
};

struct DistributionAtom {
  double p = 0.0;     // prediction value
  double mass = 0.0;  // probability of this prediction
  double q = 0.0;     // conditional probability of outcome 1
};

struct FiniteJointDistribution {
  std::vector<DistributionAtom> atoms;  // strictly increasing prediction values

  void validate() const {
    if (atoms.empty()) throw input_error("distribution needs at least one atom");
    double total = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const auto& a = atoms[i];
      if (!(a.p >= 0.0 && a.p <= 1.0)) throw input_error("atom prediction outside [0,1]");
      if (!(a.q >= 0.0 && a.q <= 1.0)) throw input_error("atom outcome rate outside [0,1]");
      if (!(a.mass > 0.0)) throw input_error("atom mass must be positive");
      if (i > 0 && !(atoms[i - 1].p < a.p))
        throw input_error("atom predictions must be strictly increasing");
      total += a.mass;
    }
    if (std::fabs(total - 1.0) > kMassTol)
      throw input_error("atom masses must sum to 1 within 1e-12");
  }

  // convenience: sort atoms by prediction and merge exact duplicates
  void normalize() {
    std::sort(atoms.begin(), atoms.end(),
              [](const DistributionAtom& a, const DistributionAtom& b) { return a.p < b.p; });
    std::vector<DistributionAtom> merged;
    for (const auto& a : atoms) {
      if (!merged.empty() && merged.back().p == a.p) {
        auto& m = merged.back();
        const double w = m.mass + a.mass;
        m.q = (m.q * m.mass + a.q * a.mass) / w;
        m.mass = w;
      } else {
        merged.push_back(a);
      }
    }
    atoms = std::move(merged);
  }
};

// the shared grouped representation described at the top of this file
struct GroupedPoint {
  double p = 0.0;
  double w = 0.0;     // probability weight, positive, sums to 1
  double ybar = 0.0;  // conditional mean outcome at this prediction
};
using GroupedData = std::vector<GroupedPoint>;

inline GroupedData grouped_view(const LabeledSampleSet& set) {
  GroupedData out;
  if (set.items.empty()) return out;
  const double m = static_cast<double>(set.size());
  for (const auto& g : set.grouped())
    out.push_back({g.p, static_cast<double>(g.count) / m, g.ysum / static_cast<double>(g.count)});
  return out;
}

inline GroupedData grouped_view(const FiniteJointDistribution& dist) {
  GroupedData out;
  out.reserve(dist.atoms.size());
  for (const auto& a : dist.atoms) out.push_back({a.p, a.mass, a.q});
  return out;
}

// exact expectation of f(p, y) under the joint distribution; f is evaluated
// only at y = 0 and y = 1 so any callable works
template <typename F>
double exact_expectation(const FiniteJointDistribution& dist, F&& f) {
  double acc = 0.0;
  for (const auto& a : dist.atoms)
    acc += a.mass * (a.q * f(a.p, 1) + (1.0 - a.q) * f(a.p, 0));
  return acc;
}

// draw m independent samples; identical (distribution, m, seed) triples give
// identical sample sets.  inverse-cdf over the atom list keeps the draw
// sequence self-contained rather than depending on library internals.
inline LabeledSampleSet sample_from(const FiniteJointDistribution& dist, std::size_t m,
                                    std::uint64_t seed) {
  dist.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> cum;
  cum.reserve(dist.atoms.size());
  double acc = 0.0;
  for (const auto& a : dist.atoms) {
    acc += a.mass;
    cum.push_back(acc);
  }
  cum.back() = 1.0;  // guard the running sum against rounding shortfall
  LabeledSampleSet out;
  out.items.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double u = unif(rng);
    const std::size_t k = static_cast<std::size_t>(
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    const std::size_t idx = std::min(k, dist.atoms.size() - 1);
    const int y = unif(rng) < dist.atoms[idx].q ? 1 : 0;
    out.items.push_back({dist.atoms[idx].p, y});
  }
  return out;
}

}  // namespace calib
