#pragma once

// proper loss families over predictions and binary outcomes.
//
// three concrete shapes:
//   * VShapedLoss          loss(p, y) = -sign_s(p - v) * (y - v)  for a
//                          decision threshold v and a tie sign s in {-1,0,+1}
//                          deciding sign(0)
//   * ConcavePotentialLoss loss(p, y) = phi(p) + phi'(p) * (y - p) for a
//                          piecewise-linear concave potential phi with
//                          superderivatives bounded by 1 in magnitude
//   * MixtureLoss          nonnegative combination of v-shaped atoms with
//                          total weight at most 1, plus a constant offset
//
// every loss here is linear in the outcome, so expected_loss(loss, p, q) with
// q = Pr[y = 1] is exact.  the discrete derivative loss(p,1) - loss(p,0)
// recovers -sign_s(p - v) for a v-shaped loss and the potential slope for a
// potential loss; it is the object the decision-theoretic machinery in the
// rest of the library consumes.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <type_traits>
#include <variant>
#include <vector>

#include "calib/common.hpp"

namespace calib {

struct VShapedLoss {
  double v = 0.5;  // threshold in [0,1]
  int s = 0;       // sign assigned at p == v, in {-1, 0, +1}

  void validate() const {
    if (!(v >= 0.0 && v <= 1.0)) throw input_error("v-shaped threshold outside [0,1]");
    if (s < -1 || s > 1) throw input_error("tie sign must be -1, 0 or +1");
  }
};

inline double eval_loss(const VShapedLoss& loss, double p, double y) {
  return -sign_with_tie(p - loss.v, loss.s) * (y - loss.v);
}

struct ConcavePotentialLoss {
  std::vector<double> breakpoints;  // increasing, first 0, last 1
  std::vector<double> values;       // potential at each breakpoint
  std::vector<double> superderivs;  // superderivative at each breakpoint

  std::size_t segments() const { return breakpoints.empty() ? 0 : breakpoints.size() - 1; }

  double slope(std::size_t seg) const {
    return (values[seg + 1] - values[seg]) / (breakpoints[seg + 1] - breakpoints[seg]);
  }

  void validate() const {
    const std::size_t k = breakpoints.size();
    if (k < 2) throw input_error("potential needs at least two breakpoints");
    if (values.size() != k || superderivs.size() != k)
      throw input_error("potential arrays must have matching lengths");
    if (breakpoints.front() != 0.0 || breakpoints.back() != 1.0)
      throw input_error("potential breakpoints must span [0,1]");
    for (std::size_t i = 0; i + 1 < k; ++i)
      if (!(breakpoints[i] < breakpoints[i + 1]))
        throw input_error("potential breakpoints must be strictly increasing");
    constexpr double tol = 1e-12;
    for (std::size_t i = 0; i + 1 < k; ++i) {
      const double sl = slope(i);
      if (sl > 1.0 + tol || sl < -1.0 - tol)
        throw input_error("potential slope outside [-1,1]");
      if (i > 0 && sl > slope(i - 1) + tol)
        throw input_error("potential must be concave (nonincreasing slopes)");
    }
    // each superderivative must lie between the adjacent segment slopes
    for (std::size_t i = 0; i < k; ++i) {
      const double hi = i == 0 ? 1.0 : slope(i - 1);
      const double lo = i + 1 == k ? -1.0 : slope(i);
      if (superderivs[i] > hi + tol || superderivs[i] < lo - tol)
        throw input_error("superderivative inconsistent with concavity");
      if (superderivs[i] > 1.0 + tol || superderivs[i] < -1.0 - tol)
        throw input_error("superderivative outside [-1,1]");
    }
  }

  // potential value at p (linear interpolation between breakpoints)
  double phi(double p) const {
    const std::size_t seg = segment_of(p);
    return values[seg] + slope(seg) * (p - breakpoints[seg]);
  }

  // superderivative at p: segment slope strictly inside a segment, the stored
  // value at a breakpoint
  double phi_deriv(double p) const {
    const auto it = std::lower_bound(breakpoints.begin(), breakpoints.end(), p);
    if (it != breakpoints.end() && *it == p)
      return superderivs[static_cast<std::size_t>(it - breakpoints.begin())];
    return slope(segment_of(p));
  }

 private:
  std::size_t segment_of(double p) const {
    // index of the segment containing p, clamping to the domain
    std::size_t seg = static_cast<std::size_t>(
        std::upper_bound(breakpoints.begin(), breakpoints.end(), p) - breakpoints.begin());
    if (seg > 0) --seg;
    if (seg >= segments()) seg = segments() - 1;
    return seg;
  }
};

inline double eval_loss(const ConcavePotentialLoss& loss, double p, double y) {
  return loss.phi(p) + loss.phi_deriv(p) * (y - p);
}

struct MixtureAtom {
  VShapedLoss loss;
  double weight = 0.0;
};

struct MixtureLoss {
  std::vector<MixtureAtom> atoms;
  double offset = 0.0;

  void validate() const {
    double total = 0.0;
    for (const auto& a : atoms) {
      a.loss.validate();
      if (a.weight < 0.0) throw input_error("mixture weights must be nonnegative");
      total += a.weight;
    }
    if (total > 1.0 + 1e-12) throw input_error("mixture weights must sum to at most 1");
  }
};

inline double eval_loss(const MixtureLoss& loss, double p, double y) {
  double acc = loss.offset;
  for (const auto& a : loss.atoms) acc += a.weight * eval_loss(a.loss, p, y);
  return acc;
}

using LossSpec = std::variant<VShapedLoss, ConcavePotentialLoss, MixtureLoss>;

inline double eval_loss(const LossSpec& loss, double p, double y) {
  return std::visit([&](const auto& l) { return eval_loss(l, p, y); }, loss);
}

// convex mixture of a base loss with the squared loss; the squared component
// makes the mixture strongly proper while keeping the base behaviour as the
// mixing weight goes to zero
struct StronglyProperMix {
  LossSpec base;
  double mu = 0.0;  // weight on the squared component, in (0, 1/16)
};

inline double eval_loss(const StronglyProperMix& loss, double p, double y) {
  return (1.0 - loss.mu) * eval_loss(loss.base, p, y) + loss.mu * (y - p) * (y - p);
}

inline StronglyProperMix mix_strongly_proper(const LossSpec& base, double mu) {
  if (!(mu > 0.0 && mu < 1.0 / 16.0))
    throw input_error("mixing weight must lie in (0, 1/16)");
  return StronglyProperMix{base, mu};
}

// loss(p,1) - loss(p,0): the slope of the loss in the outcome.  for a
// v-shaped loss this is -sign_s(p - v); for a potential loss it is phi'(p).
template <typename Loss>
double discrete_derivative(const Loss& loss, double p) {
  return eval_loss(loss, p, 1.0) - eval_loss(loss, p, 0.0);
}

// expected loss of predicting p when the true success probability is q;
// exact because every loss here is linear in the outcome
template <typename Loss>
double expected_loss(const Loss& loss, double p, double q) {
  return q * eval_loss(loss, p, 1.0) + (1.0 - q) * eval_loss(loss, p, 0.0);
}

struct ProprietyReport {
  bool proper = true;
  double worst_gap = 0.0;  // most negative value of E_q[loss(p,.) - loss(q,.)]
  double witness_p = 0.0;
  double witness_q = 0.0;
};

// grid check that truthful prediction is optimal: for all p, q on the grid,
// predicting p under truth q must not beat predicting q itself (up to 1e-12).
// accepts any callable loss(p, y) as well as the concrete loss types.
template <typename Loss>
ProprietyReport check_propriety(const Loss& loss, double grid_step) {
  if (!(grid_step > 0.0 && grid_step <= 0.5)) throw input_error("grid step must be in (0, 0.5]");
  ProprietyReport rep;
  const auto value = [&](double p, double y) {
    if constexpr (std::is_invocable_r_v<double, Loss, double, double>)
      return loss(p, y);
    else
      return eval_loss(loss, p, y);
  };
  const std::size_t n = static_cast<std::size_t>(std::ceil(1.0 / grid_step));
  std::vector<double> grid;
  for (std::size_t i = 0; i <= n; ++i) grid.push_back(std::min(1.0, i * grid_step));
  for (const double q : grid) {
    const double truthful = q * value(q, 1.0) + (1.0 - q) * value(q, 0.0);
    for (const double p : grid) {
      const double gap = q * value(p, 1.0) + (1.0 - q) * value(p, 0.0) - truthful;
      if (gap < rep.worst_gap) {
        rep.worst_gap = gap;
        rep.witness_p = p;
        rep.witness_q = q;
      }
    }
  }
  rep.proper = rep.worst_gap >= -1e-12;
  return rep;
}

// represent a piecewise-linear concave potential loss as a weighted mixture
// of v-shaped losses plus a pure-outcome term and a constant.
//
// the construction matches derivatives: a v-shaped atom at v with tie sign +1
// has discrete derivative -sign_+(p - v), which steps from +1 to -1 at v, so
// an atom of weight (slope drop)/2 at each interior breakpoint reproduces all
// the slope changes of phi.  the leftover constant derivative is realized by
// the boundary atoms: with tie sign -1 the atom at v = 1 evaluates to (y - 1)
// for every p, and with tie sign +1 the atom at v = 0 evaluates to -y, so
// either sign of residual fits.  total atom weight works out to
// max(|phi'(0+)|, |phi'(1-)|) <= 1.
//
// the mixture agrees with the input exactly at non-breakpoint predictions;
// at a breakpoint it uses the right-segment slope, so it matches inputs whose
// stored superderivatives follow that convention.
inline MixtureLoss to_mixture(const ConcavePotentialLoss& loss) {
  loss.validate();
  MixtureLoss mix;
  const std::size_t segs = loss.segments();
  double covered = 0.0;  // derivative of the atoms added so far, left of all v
  for (std::size_t j = 1; j < segs; ++j) {
    const double drop = loss.slope(j - 1) - loss.slope(j);
    if (drop > 0.0) mix.atoms.push_back({VShapedLoss{loss.breakpoints[j], +1}, drop / 2.0});
  }
  for (const auto& a : mix.atoms) covered += a.weight;
  // with only the interior atoms, derivative on segment 0 equals `covered`;
  // close the gap to phi'(0+) with a pure-outcome atom
  const double residual = loss.slope(0) - covered;
  if (residual > 0.0)
    mix.atoms.push_back({VShapedLoss{1.0, -1}, residual});  // contributes +y - 1
  else if (residual < 0.0)
    mix.atoms.push_back({VShapedLoss{0.0, +1}, -residual});  // contributes -y
  // align values: both sides are now parallel in (p, y); match at (0, 0)
  const double at_zero = eval_loss(mix, 0.0, 0.0);
  const double want = eval_loss(loss, 0.0, 0.0);
  mix.offset = want - at_zero;
  mix.validate();
  return mix;
}

}  // namespace calib
