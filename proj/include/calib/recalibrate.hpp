#pragma once

// recalibration procedures and the omniprediction gap used to judge them.
//
//   pav    pool-adjacent-violators isotonic regression.  the fitted values
//          are block means with strictly increasing values across blocks
//          (ties are merged), which makes the fit simultaneously optimal for
//          every proper loss among monotone post-processings.
//
//   umb    uniform-mass bucketing.  walks the distinct prediction values in
//          order, gives any value with multiplicity above eps'*m its own
//          singleton cell, and greedily packs the rest into cells holding at
//          most eps'*m points.  cells partition [0,1]; each is fitted with
//          its mean outcome (midpoint when empty).
//
//   calma  calibrated multiaccuracy.  alternates a multiaccuracy step (add
//          eta times the threshold hypothesis with the largest correlation
//          with the residual, clipped to [0,1]) with an exact empirical
//          recalibration (replace each fitted value by the mean outcome of
//          its level set).  each multiaccuracy step lowers the squared
//          potential by at least 3*eps^2/16 and the other steps never raise
//          it, so the loop terminates in O(1/eps^2) rounds with all
//          violations at most eps/2.
//
// omni_gap measures the worst regret of a fitted map against a list of
// baseline maps over every v-shaped loss; the candidate thresholds are the
// images of the fitted map and the baselines at the data points (plus 0, 1
// and the data points themselves), which is where the post-composition
// losses change shape, so the reported supremum is exact.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "calib/common.hpp"
#include "calib/metrics.hpp"
#include "calib/postprocess.hpp"
#include "calib/samples.hpp"

namespace calib {

// ---- pool-adjacent-violators ----

struct PavResult {
  std::vector<double> fitted;  // one value per distinct prediction, ascending order
  std::vector<std::pair<std::size_t, std::size_t>> blocks;  // group index ranges
  std::vector<double> block_values;
  PostProcessingMap kappa;
  double sse = 0.0;  // squared error of the fit over the samples
};

inline PavResult pav(const LabeledSampleSet& data) {
  data.validate();
  PavResult res;
  const auto groups = data.grouped();
  if (groups.empty()) {
    res.kappa.kind = MapKind::piecewise_constant;
    res.kappa.breakpoints = {0.0};
    res.kappa.values = {0.0};
    return res;
  }

  struct Block {
    double count, ysum;
    std::size_t lo, hi;
  };
  std::vector<Block> stack;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    Block b{static_cast<double>(groups[i].count), groups[i].ysum, i, i};
    // merge while the previous block's mean is not strictly below ours
    while (!stack.empty() &&
           stack.back().ysum * b.count >= b.ysum * stack.back().count) {
      b.ysum += stack.back().ysum;
      b.count += stack.back().count;
      b.lo = stack.back().lo;
      stack.pop_back();
    }
    stack.push_back(b);
  }

  res.fitted.assign(groups.size(), 0.0);
  for (const auto& b : stack) {
    const double value = b.ysum / b.count;
    res.blocks.emplace_back(b.lo, b.hi);
    res.block_values.push_back(value);
    for (std::size_t i = b.lo; i <= b.hi; ++i) res.fitted[i] = value;
  }
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const double f = res.fitted[i];
    res.sse += groups[i].ysum * (1.0 - f) * (1.0 - f) +
               (static_cast<double>(groups[i].count) - groups[i].ysum) * f * f;
  }
  res.kappa.kind = MapKind::piecewise_linear;
  res.kappa.interpolate = true;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    res.kappa.breakpoints.push_back(groups[i].p);
    res.kappa.values.push_back(res.fitted[i]);
  }
  res.kappa.validate();
  return res;
}

// ---- uniform-mass bucketing ----

struct UmbCell {
  Interval iv;
  std::size_t count = 0;
  double ysum = 0.0;
  bool overflow = false;  // singleton cell of one high-multiplicity value
  double fitted = 0.0;
};

struct UmbPartition {
  std::vector<UmbCell> cells;
  double eps_prime = 0.0;
  std::size_t m = 0;

  void validate() const {
    if (cells.empty()) throw internal_error("bucketing produced no cells");
    const double cap = eps_prime * static_cast<double>(m);
    if (!(cells.front().iv.lo == 0.0 && cells.front().iv.lo_closed))
      throw internal_error("bucketing must start at 0");
    if (!(cells.back().iv.hi == 1.0 && cells.back().iv.hi_closed))
      throw internal_error("bucketing must end at 1");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& c = cells[i];
      if (i > 0) {
        const auto& prev = cells[i - 1];
        if (!(prev.iv.hi == c.iv.lo && prev.iv.hi_closed != c.iv.lo_closed))
          throw internal_error("bucket cells must tile [0,1]");
      }
      if (c.overflow) {
        if (!c.iv.is_singleton() || !(static_cast<double>(c.count) > cap))
          throw internal_error("overflow cell must be a heavy singleton");
      } else if (static_cast<double>(c.count) > cap) {
        throw internal_error("small cell exceeds the point budget");
      }
    }
    // proven bound on the cell count: strictly below 2/eps' + 1
    if (!(static_cast<double>(cells.size()) < 2.0 / eps_prime + 1.0 - 1e-9))
      throw internal_error("bucket count exceeds 2/eps'");
  }
};

inline UmbPartition umb_partition(const LabeledSampleSet& data, double eps_prime) {
  data.validate();
  if (!(eps_prime > 0.0 && eps_prime <= 1.0))
    throw input_error("bucket mass fraction must be in (0,1]");
  if (data.items.empty()) throw input_error("bucketing needs a nonempty sample");
  const auto groups = data.grouped();
  const double cap = eps_prime * static_cast<double>(data.size());

  UmbPartition part;
  part.eps_prime = eps_prime;
  part.m = data.size();

  double cur_lo = 0.0;
  bool cur_lo_closed = true;
  std::size_t cur_count = 0;
  double cur_ysum = 0.0;
  double last_v = 0.0;
  const auto emit = [&](double hi, bool hi_closed, bool overflow, std::size_t count,
                        double ysum) {
    part.cells.push_back({{cur_lo, hi, cur_lo_closed, hi_closed}, count, ysum, overflow, 0.0});
    cur_lo = hi;
    cur_lo_closed = !hi_closed;
    cur_count = 0;
    cur_ysum = 0.0;
  };

  for (const auto& g : groups) {
    const double c = static_cast<double>(g.count);
    if (c > cap) {
      // flush whatever is open before the heavy value, then its singleton;
      // when the open region is [v, v) (a heavy value right at a closed
      // boundary, e.g. p = 0) it is empty and must not become a cell
      if (cur_lo < g.p) emit(g.p, false, false, cur_count, cur_ysum);
      cur_lo = g.p;
      cur_lo_closed = true;
      emit(g.p, true, true, g.count, g.ysum);
    } else if (static_cast<double>(cur_count) + c > cap) {
      // close the open cell between its last member and the new value
      double mid = 0.5 * (last_v + g.p);
      if (!(mid > last_v)) mid = std::nextafter(last_v, 2.0);
      if (!(mid <= g.p)) mid = g.p;
      emit(mid, false, false, cur_count, cur_ysum);
      cur_count = g.count;
      cur_ysum = g.ysum;
      last_v = g.p;
    } else {
      cur_count += g.count;
      cur_ysum += g.ysum;
      last_v = g.p;
    }
  }
  if (cur_lo < 1.0 || (cur_lo == 1.0 && cur_lo_closed))
    emit(1.0, true, false, cur_count, cur_ysum);
  else
    part.cells.back().iv.hi_closed = true;  // trailing singleton at 1 closes the domain

  for (auto& cell : part.cells)
    cell.fitted = cell.count > 0 ? cell.ysum / static_cast<double>(cell.count)
                                 : 0.5 * (cell.iv.lo + cell.iv.hi);
  part.validate();
  return part;
}

struct UmbResult {
  UmbPartition partition;
  PostProcessingMap kappa;
};

// export the partition as an exact piecewise-constant map: each cell becomes
// a right-open segment starting at its closed end, with open-start cells
// starting at the successor double of the boundary (exact for all double
// inputs, including singleton cells)
inline UmbResult umb_recalibrate(const LabeledSampleSet& data, double eps_prime) {
  UmbResult res;
  res.partition = umb_partition(data, eps_prime);
  res.kappa.kind = MapKind::piecewise_constant;
  res.kappa.interpolate = false;
  for (const auto& cell : res.partition.cells) {
    const double start =
        cell.iv.lo_closed ? cell.iv.lo : std::nextafter(cell.iv.lo, 2.0);
    res.kappa.breakpoints.push_back(start);
    res.kappa.values.push_back(clip01(cell.fitted));
  }
  res.kappa.validate();
  return res;
}

inline UmbResult umb_recalibrate(const LabeledSampleSet& data, double eps, int r) {
  return umb_recalibrate(data, eps / (8.0 * static_cast<double>(r)));
}

// ---- calibrated multiaccuracy ----

struct CalmaResult {
  PostProcessingMap kappa;
  std::size_t updates = 0;
  bool converged = false;
  double final_violation = 0.0;
  std::vector<double> potential_trace;  // squared potential after each update
};

namespace detail {

// best threshold hypothesis of the class, in either orientation, against the
// residuals z; returns the signed pattern and its correlation
inline std::pair<double, std::vector<int>> best_signed_pattern(const std::vector<double>& z,
                                                               const PostClass& cls) {
  PatternResult pos = best_pattern(z, cls);
  std::vector<double> neg_z(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) neg_z[i] = -z[i];
  PatternResult neg = best_pattern(neg_z, cls);
  if (neg.value > pos.value) {
    for (auto& h : neg.pattern) h = -h;
    return {neg.value, std::move(neg.pattern)};
  }
  return {pos.value, std::move(pos.pattern)};
}

// piecewise-constant map through per-group values, with cell boundaries at
// midpoints between adjacent distinct predictions
inline PostProcessingMap values_step_map(const GroupedData& data,
                                         const std::vector<double>& vals) {
  PostProcessingMap map;
  map.kind = MapKind::piecewise_constant;
  map.interpolate = false;
  map.breakpoints.push_back(0.0);
  map.values.push_back(vals.empty() ? 0.0 : vals.front());
  for (std::size_t i = 1; i < vals.size(); ++i) {
    if (vals[i] == vals[i - 1]) continue;
    double cut = 0.5 * (data[i - 1].p + data[i].p);
    if (!(cut > data[i - 1].p)) cut = std::nextafter(data[i - 1].p, 2.0);
    map.breakpoints.push_back(cut);
    map.values.push_back(vals[i]);
  }
  map.validate();
  return map;
}

}  // namespace detail

inline CalmaResult calibrated_multiaccuracy(const LabeledSampleSet& data, const PostClass& cls,
                                            double eps, std::size_t max_rounds = 0) {
  data.validate();
  if (!(eps > 0.0 && eps <= 1.0)) throw input_error("accuracy parameter must be in (0,1]");
  const bool supported = cls.family == PostClass::Family::generalized_monotone ||
                         cls.family == PostClass::Family::monotone_nondecreasing;
  if (!supported)
    throw unsupported_error("multiaccuracy loop expects a monotone or interval-union family");
  if (max_rounds == 0)
    max_rounds = static_cast<std::size_t>(std::ceil(16.0 / (3.0 * eps * eps))) + 8;

  const GroupedData g = grouped_view(data);
  const std::size_t k = g.size();
  const double eta = eps / 4.0;
  std::vector<double> kap(k, 0.5);

  const auto recalibrate = [&]() {
    // replace each fitted value by the mean outcome over its level set
    std::map<double, std::pair<double, double>> levels;  // value -> (w, w*ybar)
    for (std::size_t i = 0; i < k; ++i) {
      auto& acc = levels[kap[i]];
      acc.first += g[i].w;
      acc.second += g[i].w * g[i].ybar;
    }
    for (std::size_t i = 0; i < k; ++i) {
      const auto& acc = levels[kap[i]];
      kap[i] = acc.second / acc.first;
    }
  };
  const auto potential = [&]() {
    double phi = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      phi += g[i].w * (g[i].ybar - kap[i]) * (g[i].ybar - kap[i]);
    return phi;
  };

  CalmaResult res;
  if (k == 0) {
    res.converged = true;
    res.kappa = detail::values_step_map(g, {});
    return res;
  }
  recalibrate();  // start from the exactly calibrated constant fit
  double phi_prev = potential();
  for (std::size_t round = 0; round < max_rounds; ++round) {
    std::vector<double> z(k);
    for (std::size_t i = 0; i < k; ++i) z[i] = g[i].w * (g[i].ybar - kap[i]);
    auto [violation, pattern] = detail::best_signed_pattern(z, cls);
    res.final_violation = violation;
    if (violation <= eps / 2.0) {
      res.converged = true;
      break;
    }
    for (std::size_t i = 0; i < k; ++i)
      kap[i] = clip01(kap[i] + eta * static_cast<double>(pattern[i]));
    recalibrate();
    ++res.updates;
    const double phi = potential();
    // every update past the rejection threshold must pay for itself
    if (!(phi <= phi_prev - 3.0 * eps * eps / 16.0 + 1e-9))
      throw internal_error("multiaccuracy update failed to lower the potential");
    phi_prev = phi;
    res.potential_trace.push_back(phi);
  }
  res.kappa = detail::values_step_map(g, kap);
  return res;
}

struct CalmaCheck {
  double level_miscalibration = 0.0;  // worst |mean outcome - value| over level sets
  double violation = 0.0;             // best remaining signed-pattern correlation
  bool ok = false;
};

inline CalmaCheck check_calma(const LabeledSampleSet& data, const PostProcessingMap& kappa,
                              const PostClass& cls, double eps) {
  const GroupedData g = grouped_view(data);
  CalmaCheck chk;
  std::map<double, std::pair<double, double>> levels;
  std::vector<double> z(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double v = kappa(g[i].p);
    auto& acc = levels[v];
    acc.first += g[i].w;
    acc.second += g[i].w * g[i].ybar;
    z[i] = g[i].w * (g[i].ybar - v);
  }
  for (const auto& [value, acc] : levels)
    chk.level_miscalibration =
        std::max(chk.level_miscalibration, std::fabs(acc.second / acc.first - value));
  chk.violation = detail::best_signed_pattern(z, cls).first;
  chk.ok = chk.level_miscalibration <= 1e-9 && chk.violation <= eps / 2.0 + 1e-9;
  return chk;
}

// ---- omniprediction gap ----

struct OmniGapReport {
  double gap = 0.0;
  std::size_t worst_baseline = 0;
  double worst_v = 0.0;
  int worst_sign = 0;
};

inline OmniGapReport omni_gap(const GroupedData& data, const PostProcessingMap& kappa,
                              const std::vector<PostProcessingMap>& baselines,
                              const PostClass& cls) {
  if (baselines.empty()) throw input_error("omniprediction gap needs at least one baseline");
  for (std::size_t b = 0; b < baselines.size(); ++b) {
    const MembershipReport mem = membership(baselines[b], cls);
    if (!mem.member)
      throw input_error("baseline " + std::to_string(b) + " is outside " + cls.name() + ": " +
                        mem.reason);
  }

  std::vector<double> khat(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) khat[i] = kappa(data[i].p);

  OmniGapReport rep;
  bool first = true;
  for (std::size_t b = 0; b < baselines.size(); ++b) {
    std::vector<double> base(data.size());
    std::vector<double> candidates{0.0, 1.0};
    for (std::size_t i = 0; i < data.size(); ++i) {
      base[i] = baselines[b](data[i].p);
      candidates.push_back(base[i]);
      candidates.push_back(khat[i]);
      candidates.push_back(data[i].p);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    for (const double v : candidates) {
      for (const int s : {+1, -1}) {
        const VShapedLoss loss{v, s};
        double diff = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i)
          diff += data[i].w *
                  (eval_loss(loss, khat[i], data[i].ybar) - eval_loss(loss, base[i], data[i].ybar));
        if (first || diff > rep.gap) {
          rep.gap = diff;
          rep.worst_baseline = b;
          rep.worst_v = v;
          rep.worst_sign = s;
          first = false;
        }
      }
    }
  }
  return rep;
}

inline OmniGapReport omni_gap(const LabeledSampleSet& d, const PostProcessingMap& kappa,
                              const std::vector<PostProcessingMap>& baselines,
                              const PostClass& cls) {
  return omni_gap(grouped_view(d), kappa, baselines, cls);
}
inline OmniGapReport omni_gap(const FiniteJointDistribution& d, const PostProcessingMap& kappa,
                              const std::vector<PostProcessingMap>& baselines,
                              const PostClass& cls) {
  return omni_gap(grouped_view(d), kappa, baselines, cls);
}

}  // namespace calib
