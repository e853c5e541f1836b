#pragma once

// post-processing maps [0,1] -> [0,1], the structured families they are
// checked against, interval unions, and threshold hypotheses.
//
// maps come in two kinds.  piecewise-constant maps list segment start points
// (first one must be 0) and hold each value on the right-open segment up to
// the next start; the last segment is closed at 1.  a singleton cell {a} is
// encoded exactly for double inputs by starting the following segment at
// nextafter(a).  piecewise-linear maps list (breakpoint, value) pairs,
// interpolate between them and extend constantly outside the first/last
// breakpoint.
//
// families:
//   All                      every map
//   MonotoneNondecreasing    values never decrease
//   MonotoneNonincreasing    values never increase
//   GeneralizedMonotone(r)   every superlevel set {p : map(p) >= v} is a
//                            union of at most r intervals
//   Lipschitz(L)             continuous with slopes bounded by L
//
// threshold hypotheses are +1 on an interval union and -1 elsewhere; they are
// what the generalized-monotone families induce when cut at a level.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "calib/common.hpp"

namespace calib {

enum class MapKind { piecewise_constant, piecewise_linear };

struct PostProcessingMap {
  MapKind kind = MapKind::piecewise_constant;
  std::vector<double> breakpoints;
  std::vector<double> values;
  bool interpolate = false;  // true exactly for piecewise-linear maps

  static constexpr std::size_t kMaxBreakpoints = 10000;

  void validate() const {
    if (breakpoints.empty() || breakpoints.size() != values.size())
      throw input_error("map needs matching, nonempty breakpoint/value lists");
    if (breakpoints.size() > kMaxBreakpoints)
      throw input_error("map exceeds the breakpoint budget");
    for (std::size_t i = 0; i < breakpoints.size(); ++i) {
      if (!(breakpoints[i] >= 0.0 && breakpoints[i] <= 1.0))
        throw input_error("map breakpoint outside [0,1]");
      if (!(values[i] >= 0.0 && values[i] <= 1.0))
        throw input_error("map value outside [0,1]");
      if (i > 0 && !(breakpoints[i - 1] < breakpoints[i]))
        throw input_error("map breakpoints must be strictly increasing");
    }
    if (kind == MapKind::piecewise_constant) {
      if (breakpoints.front() != 0.0)
        throw input_error("piecewise-constant map must start its first segment at 0");
      if (interpolate) throw input_error("piecewise-constant map cannot interpolate");
    } else if (!interpolate) {
      throw input_error("piecewise-linear map must set the interpolation flag");
    }
  }

  double operator()(double p) const {
    if (kind == MapKind::piecewise_constant) {
      // last segment start <= p
      const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), p);
      const std::size_t idx = static_cast<std::size_t>(it - breakpoints.begin());
      return values[idx == 0 ? 0 : idx - 1];
    }
    if (p <= breakpoints.front()) return values.front();
    if (p >= breakpoints.back()) return values.back();
    const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), p);
    const std::size_t hi = static_cast<std::size_t>(it - breakpoints.begin());
    const std::size_t lo = hi - 1;
    const double t = (p - breakpoints[lo]) / (breakpoints[hi] - breakpoints[lo]);
    return values[lo] + t * (values[hi] - values[lo]);
  }
};

inline double apply(const PostProcessingMap& map, double p) { return map(p); }

struct Interval {
  double lo = 0.0, hi = 0.0;
  bool lo_closed = true, hi_closed = true;

  bool contains(double x) const {
    if (x < lo || x > hi) return false;
    if (x == lo && !lo_closed) return false;
    if (x == hi && !hi_closed) return false;
    return true;
  }
  bool is_singleton() const { return lo == hi; }
};

inline std::string interval_to_string(const Interval& iv) {
  std::ostringstream os;
  os.precision(17);
  os << (iv.lo_closed ? '[' : '(') << iv.lo << ", " << iv.hi << (iv.hi_closed ? ']' : ')');
  return os.str();
}

struct IntervalUnion {
  std::vector<Interval> parts;  // sorted, pairwise disjoint

  bool contains(double x) const {
    for (const auto& iv : parts) {
      if (x < iv.lo) break;
      if (iv.contains(x)) return true;
    }
    return false;
  }
  std::size_t count() const { return parts.size(); }

  void validate() const {
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const auto& iv = parts[i];
      if (!(iv.lo >= 0.0 && iv.hi <= 1.0 && iv.lo <= iv.hi))
        throw input_error("interval outside [0,1] or reversed");
      if (iv.is_singleton() && !(iv.lo_closed && iv.hi_closed))
        throw input_error("singleton interval must be closed");
      if (i > 0) {
        const auto& prev = parts[i - 1];
        const bool ordered =
            prev.hi < iv.lo || (prev.hi == iv.lo && !(prev.hi_closed && iv.lo_closed));
        if (!ordered) throw input_error("intervals must be sorted and disjoint");
      }
    }
  }
};

// +1 on the support union, -1 elsewhere
struct ThresholdHypothesis {
  IntervalUnion support;
  int operator()(double p) const { return support.contains(p) ? +1 : -1; }
};

struct PostClass {
  enum class Family {
    all,
    monotone_nondecreasing,
    monotone_nonincreasing,
    generalized_monotone,
    lipschitz
  };
  Family family = Family::all;
  int r = 0;       // interval budget for generalized_monotone
  double L = 0.0;  // slope bound for lipschitz

  static PostClass All() { return {Family::all, 0, 0.0}; }
  static PostClass MonotoneNondecreasing() { return {Family::monotone_nondecreasing, 0, 0.0}; }
  static PostClass MonotoneNonincreasing() { return {Family::monotone_nonincreasing, 0, 0.0}; }
  static PostClass GeneralizedMonotone(int r) {
    if (r < 1) throw input_error("interval budget must be at least 1");
    return {Family::generalized_monotone, r, 0.0};
  }
  static PostClass Lipschitz(double L) {
    if (!(L >= 0.0)) throw input_error("lipschitz constant must be nonnegative");
    return {Family::lipschitz, 0, L};
  }

  std::string name() const {
    switch (family) {
      case Family::all: return "All";
      case Family::monotone_nondecreasing: return "MonotoneNondecreasing";
      case Family::monotone_nonincreasing: return "MonotoneNonincreasing";
      case Family::generalized_monotone:
        return "GeneralizedMonotone(" + std::to_string(r) + ")";
      case Family::lipschitz: {
        std::ostringstream os;
        os << "Lipschitz(" << L << ")";
        return os.str();
      }
    }
    return "?";
  }
};

// ---- structural probes on maps ----

namespace detail {

// refinement of [0,1] into maximal pieces on which the map is affine
// (piecewise-linear) or constant (piecewise-constant).  each piece carries
// its endpoint x-coordinates and the map values approached at both ends.
struct Piece {
  double x0, x1;   // piece spans [x0, x1]
  double y0, y1;   // values at the two ends (limits from inside the piece)
};

inline std::vector<Piece> pieces_of(const PostProcessingMap& map) {
  std::vector<Piece> out;
  const auto& b = map.breakpoints;
  const auto& v = map.values;
  if (map.kind == MapKind::piecewise_constant) {
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double x1 = i + 1 < b.size() ? b[i + 1] : 1.0;
      if (b[i] > x1) throw input_error("map segment start beyond domain end");
      out.push_back({b[i], x1, v[i], v[i]});
    }
  } else {
    if (b.front() > 0.0) out.push_back({0.0, b.front(), v.front(), v.front()});
    for (std::size_t i = 0; i + 1 < b.size(); ++i)
      out.push_back({b[i], b[i + 1], v[i], v[i + 1]});
    if (b.back() < 1.0) out.push_back({b.back(), 1.0, v.back(), v.back()});
    if (b.size() == 1 && out.empty()) out.push_back({0.0, 1.0, v[0], v[0]});
  }
  return out;
}

// distinct values taken by the map at piece endpoints, ascending
inline std::vector<double> endpoint_values(const PostProcessingMap& map) {
  std::vector<double> vals = map.values;
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  return vals;
}

// endpoint values plus midpoints between consecutive distinct values: the
// critical levels at which superlevel structure can change
inline std::vector<double> critical_levels(const PostProcessingMap& map) {
  const std::vector<double> vals = endpoint_values(map);
  std::vector<double> out = vals;
  for (std::size_t i = 0; i + 1 < vals.size(); ++i)
    out.push_back(0.5 * (vals[i] + vals[i + 1]));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace detail

// {p in [0,1] : map(p) >= v} as a sorted union of disjoint intervals
inline IntervalUnion superlevel_set(const PostProcessingMap& map, double v) {
  map.validate();
  IntervalUnion out;
  if (map.kind == MapKind::piecewise_constant) {
    // collect segments with value >= v; merge adjacent selected segments
    const auto& b = map.breakpoints;
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (!(map.values[i] >= v)) continue;
      const double lo = b[i];
      const double hi = i + 1 < b.size() ? b[i + 1] : 1.0;
      const bool hi_closed = i + 1 == b.size();
      if (!out.parts.empty() && out.parts.back().hi == lo && !out.parts.back().hi_closed) {
        out.parts.back().hi = hi;
        out.parts.back().hi_closed = hi_closed;
      } else {
        out.parts.push_back({lo, hi, true, hi_closed});
      }
    }
  } else {
    // walk affine pieces; within a piece the solution of value >= v is a
    // closed subinterval (possibly empty or the whole piece)
    for (const auto& pc : detail::pieces_of(map)) {
      double lo = pc.x0, hi = pc.x1;
      const double dy = pc.y1 - pc.y0;
      if (dy == 0.0) {
        if (!(pc.y0 >= v)) continue;
      } else {
        // value(t) = y0 + dy * (t - x0) / (x1 - x0) >= v
        const double t = pc.x0 + (v - pc.y0) * (pc.x1 - pc.x0) / dy;
        if (dy > 0.0) {
          lo = std::max(lo, t);
          if (lo > hi) continue;
        } else {
          hi = std::min(hi, t);
          if (hi < lo) continue;
        }
      }
      if (!out.parts.empty() && out.parts.back().hi >= lo) {
        out.parts.back().hi = std::max(out.parts.back().hi, hi);
      } else {
        out.parts.push_back({lo, hi, true, true});
      }
    }
  }
  // canonicalize the nextafter encoding of singleton cells back to {a}
  for (auto& iv : out.parts) {
    if (!iv.hi_closed && iv.hi == std::nextafter(iv.lo, 2.0)) {
      iv.hi = iv.lo;
      iv.hi_closed = true;
    }
  }
  return out;
}

// largest number of sign alternations of (map - v) over the critical levels
inline std::size_t crossing_number(const PostProcessingMap& map) {
  map.validate();
  const auto pieces = detail::pieces_of(map);
  std::size_t best = 0;
  for (const double v : detail::critical_levels(map)) {
    // walk the map left to right, recording strict sign changes of map - v;
    // zeros are skipped so a level touching counts only if the sign flips
    int last = 0;
    std::size_t flips = 0;
    const auto feed = [&](double y) {
      const int s = y > v ? 1 : (y < v ? -1 : 0);
      if (s != 0) {
        if (last != 0 && s != last) ++flips;
        last = s;
      }
    };
    for (const auto& pc : pieces) {
      feed(pc.y0);
      feed(pc.y1);
    }
    best = std::max(best, flips);
  }
  return best;
}

// total variation: sum of |value changes| along the map, jumps included
inline double total_variation(const PostProcessingMap& map) {
  map.validate();
  double acc = 0.0;
  const auto pieces = detail::pieces_of(map);
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    acc += std::fabs(pieces[i].y1 - pieces[i].y0);
    if (i > 0) acc += std::fabs(pieces[i].y0 - pieces[i - 1].y1);
  }
  return acc;
}

struct MembershipReport {
  bool member = true;
  std::string reason;       // empty when member
  double witness = 0.0;     // location or level exhibiting the failure
};

inline MembershipReport membership(const PostProcessingMap& map, const PostClass& cls) {
  map.validate();
  MembershipReport rep;
  const auto fail = [&](const std::string& why, double where) {
    rep.member = false;
    rep.reason = why;
    rep.witness = where;
    return rep;
  };
  switch (cls.family) {
    case PostClass::Family::all:
      return rep;
    case PostClass::Family::monotone_nondecreasing:
      for (std::size_t i = 1; i < map.values.size(); ++i)
        if (map.values[i] < map.values[i - 1])
          return fail("value decreases", map.breakpoints[i]);
      return rep;
    case PostClass::Family::monotone_nonincreasing:
      for (std::size_t i = 1; i < map.values.size(); ++i)
        if (map.values[i] > map.values[i - 1])
          return fail("value increases", map.breakpoints[i]);
      return rep;
    case PostClass::Family::generalized_monotone: {
      for (const double v : detail::critical_levels(map)) {
        const IntervalUnion su = superlevel_set(map, v);
        if (su.count() > static_cast<std::size_t>(cls.r))
          return fail("superlevel set needs " + std::to_string(su.count()) + " intervals", v);
      }
      return rep;
    }
    case PostClass::Family::lipschitz: {
      const auto pieces = detail::pieces_of(map);
      for (std::size_t i = 0; i < pieces.size(); ++i) {
        const auto& pc = pieces[i];
        if (i > 0 && pieces[i - 1].y1 != pc.y0)
          return fail("jump discontinuity", pc.x0);
        if (pc.x1 > pc.x0) {
          const double slope = (pc.y1 - pc.y0) / (pc.x1 - pc.x0);
          if (std::fabs(slope) > cls.L + 1e-12)
            return fail("slope exceeds the bound", pc.x0);
        }
      }
      return rep;
    }
  }
  return rep;
}

// exact composed map p |-> clip(map(clip(p + s)) + t)
inline PostProcessingMap translate(const PostProcessingMap& map, double s, double t) {
  map.validate();
  const auto inner = [&](double p) { return clip01(map(clip01(p + s))); };
  const auto composed = [&](double p) { return clip01(inner(p) + t); };

  if (map.kind == MapKind::piecewise_constant) {
    // new segment starts: 0, plus every original start shifted by -s that
    // lands inside (0, 1]; the composed map stays right-continuous because
    // p -> clip(p + s) is continuous and nondecreasing.  Each segment's value
    // comes from the originating breakpoint's index rather than from
    // re-evaluating at (b - s): adding s back can round one ulp below b and
    // would pick up the previous segment's value
    std::vector<std::pair<double, double>> segs{{0.0, composed(0.0)}};
    for (std::size_t i = 0; i < map.breakpoints.size(); ++i) {
      const double x = map.breakpoints[i] - s;
      if (x > 0.0 && x <= 1.0) segs.emplace_back(x, clip01(map.values[i] + t));
    }
    std::sort(segs.begin(), segs.end());
    PostProcessingMap out;
    out.kind = MapKind::piecewise_constant;
    out.interpolate = false;
    for (const auto& [x, val] : segs) {
      if (!out.breakpoints.empty() && out.breakpoints.back() == x) {
        out.values.back() = val;  // coincident starts: the later origin wins
        continue;
      }
      if (!out.breakpoints.empty() && out.values.back() == val) continue;  // merge equal runs
      out.breakpoints.push_back(x);
      out.values.push_back(val);
    }
    out.validate();
    return out;
  }

  // piecewise-linear: breakpoints where the inner clip saturates, where the
  // shifted original breakpoints land, and where the outer clip starts or
  // stops binding within an affine piece
  std::vector<double> xs{0.0, 1.0};
  const auto push = [&](double x) {
    if (x > 0.0 && x < 1.0) xs.push_back(x);
  };
  push(-s);
  push(1.0 - s);
  for (const double b : map.breakpoints) push(b - s);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  // refine with outer-clip crossings: on each piece the pre-clip value
  // z(p) = map(clip(p+s)) + t is affine, so solve z = 0 and z = 1
  std::vector<double> refined = xs;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double x0 = xs[i], x1 = xs[i + 1];
    const double z0 = inner(x0) + t, z1 = inner(x1) + t;
    for (const double level : {0.0, 1.0}) {
      if ((z0 - level) * (z1 - level) < 0.0) {
        const double x = x0 + (level - z0) * (x1 - x0) / (z1 - z0);
        if (x > x0 && x < x1) refined.push_back(x);
      }
    }
  }
  std::sort(refined.begin(), refined.end());
  refined.erase(std::unique(refined.begin(), refined.end()), refined.end());

  PostProcessingMap out;
  out.kind = MapKind::piecewise_linear;
  out.interpolate = true;
  out.breakpoints = refined;
  out.values.reserve(refined.size());
  for (const double x : refined) out.values.push_back(composed(x));
  out.validate();
  return out;
}

// ---- shattering witnesses for threshold families ----

struct ShatteringWitness {
  std::vector<double> points;
  bool all_realized = false;
  std::size_t labelings_checked = 0;
  // a labeling of points.size()+1 alternating points that the family cannot
  // realize, together with the counting reason (empty when none applies)
  std::vector<int> infeasible_labeling;
  std::string infeasible_reason;
};

namespace detail {

// try to realize the labeling by a union of at most r intervals that is +1
// exactly on the positive points; returns the union if the run count fits
inline std::optional<IntervalUnion> realize_runs(const std::vector<double>& pts,
                                                 const std::vector<int>& labels, int r) {
  IntervalUnion u;
  std::size_t i = 0;
  while (i < pts.size()) {
    if (labels[i] < 0) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < pts.size() && labels[j + 1] > 0) ++j;
    u.parts.push_back({pts[i], pts[j], true, true});
    i = j + 1;
  }
  if (u.parts.size() > static_cast<std::size_t>(r)) return std::nullopt;
  return u;
}

}  // namespace detail

// demonstrate the shattering capacity of the threshold family of a class.
// for GeneralizedMonotone(r): 2r points are fully shattered and the
// alternating labeling of 2r+1 points is impossible (it needs r+1 runs).
// for the monotone families the corresponding counts are 1 and 2.  for
// Lipschitz(1) a fixed grid at spacing 0.2 is shattered by 1-Lipschitz maps
// thresholded at 1/2, which is why that family has no finite threshold
// budget and gets the smooth weighted metric instead.
inline ShatteringWitness build_shattering_witness(const PostClass& cls) {
  ShatteringWitness w;
  const auto equispaced = [](std::size_t n) {
    std::vector<double> pts;
    for (std::size_t i = 0; i < n; ++i)
      pts.push_back((static_cast<double>(i) + 1.0) / (static_cast<double>(n) + 1.0));
    return pts;
  };

  switch (cls.family) {
    case PostClass::Family::lipschitz: {
      // five points spaced 0.2 apart; values 1/2 +- 0.1 reach any labeling
      // while moving at most 0.2 between adjacent points (slope 1)
      w.points = {0.1, 0.3, 0.5, 0.7, 0.9};
      w.all_realized = true;
      const std::size_t n = w.points.size();
      for (std::size_t mask = 0; mask < (1u << n); ++mask) {
        PostProcessingMap k;
        k.kind = MapKind::piecewise_linear;
        k.interpolate = true;
        k.breakpoints = w.points;
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
          labels[i] = (mask >> i) & 1 ? +1 : -1;
          k.values.push_back(0.5 + 0.1 * labels[i]);
        }
        if (!membership(k, PostClass::Lipschitz(std::max(cls.L, 1.0))).member) {
          w.all_realized = false;
          break;
        }
        for (std::size_t i = 0; i < n; ++i)
          if ((k(w.points[i]) >= 0.5 ? +1 : -1) != labels[i]) {
            w.all_realized = false;
            break;
          }
        ++w.labelings_checked;
      }
      w.infeasible_reason =
          "no alternating labeling is infeasible: 1-lipschitz maps thresholded at 1/2 "
          "shatter arbitrarily many points at spacing 0.2";
      return w;
    }
    case PostClass::Family::all:
    case PostClass::Family::monotone_nondecreasing:
    case PostClass::Family::monotone_nonincreasing:
    case PostClass::Family::generalized_monotone: {
      // effective interval budget of the induced threshold family
      int r;
      if (cls.family == PostClass::Family::generalized_monotone) r = cls.r;
      else if (cls.family == PostClass::Family::all) r = 2;  // demo size 4 below
      else r = 1;

      std::size_t n;
      if (cls.family == PostClass::Family::all) n = 4;
      else if (cls.family == PostClass::Family::generalized_monotone)
        n = static_cast<std::size_t>(2 * cls.r);
      else n = 1;

      w.points = equispaced(n);
      w.all_realized = true;
      for (std::size_t mask = 0; mask < (1u << n); ++mask) {
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) labels[i] = (mask >> i) & 1 ? +1 : -1;
        std::optional<IntervalUnion> u;
        if (cls.family == PostClass::Family::monotone_nondecreasing) {
          // suffix supports only
          bool ok = true;
          for (std::size_t i = 1; i < n; ++i)
            if (labels[i - 1] > 0 && labels[i] < 0) ok = false;
          if (ok) u = detail::realize_runs(w.points, labels, 1);
        } else if (cls.family == PostClass::Family::monotone_nonincreasing) {
          bool ok = true;
          for (std::size_t i = 1; i < n; ++i)
            if (labels[i - 1] < 0 && labels[i] > 0) ok = false;
          if (ok) u = detail::realize_runs(w.points, labels, 1);
        } else {
          u = detail::realize_runs(w.points, labels, r);
        }
        if (!u) {
          w.all_realized = false;
          break;
        }
        ThresholdHypothesis h{*u};
        for (std::size_t i = 0; i < n; ++i)
          if (h(w.points[i]) != labels[i]) {
            w.all_realized = false;
            break;
          }
        ++w.labelings_checked;
      }

      // the alternating labeling on one more point overflows the run budget
      const std::size_t n1 = n + 1;
      const std::vector<double> pts1 = equispaced(n1);
      std::vector<int> alt(n1);
      for (std::size_t i = 0; i < n1; ++i) alt[i] = i % 2 == 0 ? +1 : -1;
      std::size_t runs = 0;
      for (std::size_t i = 0; i < n1; ++i)
        if (alt[i] > 0 && (i == 0 || alt[i - 1] < 0)) ++runs;
      if (cls.family == PostClass::Family::all) {
        w.infeasible_reason = "every labeling is realizable; the family is unrestricted";
      } else if (cls.family == PostClass::Family::monotone_nondecreasing) {
        w.infeasible_labeling = {+1, -1};
        w.infeasible_reason = "suffix supports cannot place +1 before -1";
      } else if (cls.family == PostClass::Family::monotone_nonincreasing) {
        w.infeasible_labeling = {-1, +1};
        w.infeasible_reason = "prefix supports cannot place -1 before +1";
      } else {
        w.infeasible_labeling = alt;
        w.infeasible_reason = "alternating labeling needs " + std::to_string(runs) +
                              " positive runs but the budget is " + std::to_string(cls.r);
      }
      return w;
    }
  }
  return w;
}

}  // namespace calib
