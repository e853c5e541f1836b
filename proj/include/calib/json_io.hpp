#pragma once

// serialization: sample sets (csv or json), finite distributions, losses,
// post-processing maps, and the report types the command-line tool emits.
// all doubles are written with enough digits to round-trip exactly.

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <variant>
#include <vector>

#include <json.hpp>

#include "calib/common.hpp"
#include "calib/experiments.hpp"
#include "calib/learner.hpp"
#include "calib/losses.hpp"
#include "calib/metrics.hpp"
#include "calib/oracles.hpp"
#include "calib/postprocess.hpp"
#include "calib/recalibrate.hpp"
#include "calib/samples.hpp"
#include "calib/smce.hpp"
#include "calib/tester.hpp"

namespace calib {

using json = nlohmann::json;

enum class FileFormat { csv, json };

inline FileFormat parse_format(const std::string& s) {
  if (s == "csv") return FileFormat::csv;
  if (s == "json") return FileFormat::json;
  throw input_error("unknown format '" + s + "' (expected csv or json)");
}

namespace io_detail {

inline double parse_double_field(const std::string& field, std::size_t row) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw input_error("row " + std::to_string(row) + ": cannot parse number '" + field + "'");
  return value;
}

inline void check_sample_ranges(double p, int y, std::size_t row) {
  if (!(p >= 0.0 && p <= 1.0))
    throw input_error("row " + std::to_string(row) + ": prediction " + std::to_string(p) +
                      " out of range [0,1]");
  if (y != 0 && y != 1)
    throw input_error("row " + std::to_string(row) + ": outcome " + std::to_string(y) +
                      " must be 0 or 1");
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw input_error("cannot parse '" + path + "': " + std::string(e.what()));
  }
  return j;
}

}  // namespace io_detail

inline LabeledSampleSet parse_samples_csv(std::istream& in) {
  LabeledSampleSet set;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (row == 1 && line.find_first_not_of("pPyY, \t") == std::string::npos) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw input_error("row " + std::to_string(row) + ": expected 'p,y'");
    const double p = io_detail::parse_double_field(line.substr(0, comma), row);
    const double yv = io_detail::parse_double_field(line.substr(comma + 1), row);
    const int y = static_cast<int>(yv);
    if (static_cast<double>(y) != yv)
      throw input_error("row " + std::to_string(row) + ": outcome must be an integer");
    io_detail::check_sample_ranges(p, y, row);
    set.items.push_back({p, y});
  }
  set.validate();
  return set;
}

inline LabeledSampleSet parse_samples_json(const json& j) {
  if (!j.is_array()) throw input_error("sample json must be an array of {p, y}");
  LabeledSampleSet set;
  std::size_t row = 0;
  for (const auto& item : j) {
    ++row;
    const double p = item.at("p").get<double>();
    const int y = item.at("y").get<int>();
    io_detail::check_sample_ranges(p, y, row);
    set.items.push_back({p, y});
  }
  set.validate();
  return set;
}

inline LabeledSampleSet load_samples(const std::string& path, FileFormat format) {
  if (format == FileFormat::csv) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open '" + path + "'");
    return parse_samples_csv(in);
  }
  const json j = io_detail::load_json_file(path);
  try {
    return parse_samples_json(j);
  } catch (const json::exception& e) {
    throw input_error("'" + path + "': " + std::string(e.what()));
  }
}

inline void write_samples(const std::string& path, const LabeledSampleSet& set,
                          FileFormat format) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot open '" + path + "' for writing");
  if (format == FileFormat::csv) {
    out << "p,y\n";
    out.precision(17);
    for (const auto& s : set.items) out << s.p << ',' << s.y << '\n';
    return;
  }
  json j = json::array();
  for (const auto& s : set.items) j.push_back({{"p", s.p}, {"y", s.y}});
  out << j.dump(2) << '\n';
}

inline void to_json(json& j, const DistributionAtom& a) {
  j = json{{"p", a.p}, {"mass", a.mass}, {"q", a.q}};
}
inline void from_json(const json& j, DistributionAtom& a) {
  j.at("p").get_to(a.p);
  j.at("mass").get_to(a.mass);
  j.at("q").get_to(a.q);
}

inline FiniteJointDistribution load_distribution(const std::string& path) {
  const json j = io_detail::load_json_file(path);
  if (!j.is_array()) throw input_error("distribution json must be an array of {p, mass, q}");
  FiniteJointDistribution dist;
  try {
    dist.atoms = j.get<std::vector<DistributionAtom>>();
  } catch (const json::exception& e) {
    throw input_error("'" + path + "': " + std::string(e.what()));
  }
  dist.validate();
  return dist;
}

inline void write_distribution(const std::string& path, const FiniteJointDistribution& dist) {
  std::ofstream out(path);
  if (!out) throw input_error("cannot open '" + path + "' for writing");
  out << json(dist.atoms).dump(2) << '\n';
}

// ---- losses ----

inline void to_json(json& j, const VShapedLoss& l) {
  j = json{{"kind", "vshape"}, {"v", l.v}, {"s", l.s}};
}
inline void from_json(const json& j, VShapedLoss& l) {
  j.at("v").get_to(l.v);
  j.at("s").get_to(l.s);
  l.validate();
}

inline void to_json(json& j, const ConcavePotentialLoss& l) {
  j = json{{"kind", "potential"},
           {"breakpoints", l.breakpoints},
           {"values", l.values},
           {"superderivs", l.superderivs}};
}
inline void from_json(const json& j, ConcavePotentialLoss& l) {
  j.at("breakpoints").get_to(l.breakpoints);
  j.at("values").get_to(l.values);
  j.at("superderivs").get_to(l.superderivs);
  l.validate();
}

inline void to_json(json& j, const MixtureLoss& l) {
  json atoms = json::array();
  for (const auto& a : l.atoms) atoms.push_back({{"loss", json(a.loss)}, {"weight", a.weight}});
  j = json{{"kind", "mixture"}, {"atoms", atoms}, {"offset", l.offset}};
}
inline void from_json(const json& j, MixtureLoss& l) {
  l.atoms.clear();
  for (const auto& a : j.at("atoms"))
    l.atoms.push_back({a.at("loss").get<VShapedLoss>(), a.at("weight").get<double>()});
  l.offset = j.value("offset", 0.0);
  l.validate();
}

inline LossSpec loss_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "vshape") return j.get<VShapedLoss>();
  if (kind == "potential") return j.get<ConcavePotentialLoss>();
  if (kind == "mixture") return j.get<MixtureLoss>();
  throw input_error("unknown loss kind '" + kind + "'");
}

inline json loss_to_json(const LossSpec& spec) {
  return std::visit([](const auto& l) { return json(l); }, spec);
}

// ---- maps and intervals ----

inline void to_json(json& j, const PostProcessingMap& m) {
  j = json{{"kind", m.kind == MapKind::piecewise_constant ? "piecewise_constant"
                                                          : "piecewise_linear"},
           {"breakpoints", m.breakpoints},
           {"values", m.values},
           {"interpolate", m.interpolate}};
}
inline void from_json(const json& j, PostProcessingMap& m) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "piecewise_constant")
    m.kind = MapKind::piecewise_constant;
  else if (kind == "piecewise_linear")
    m.kind = MapKind::piecewise_linear;
  else
    throw input_error("unknown map kind '" + kind + "'");
  j.at("breakpoints").get_to(m.breakpoints);
  j.at("values").get_to(m.values);
  m.interpolate = j.value("interpolate", m.kind == MapKind::piecewise_linear);
  m.validate();
}

inline PostProcessingMap load_map(const std::string& path) {
  const json j = io_detail::load_json_file(path);
  try {
    return j.get<PostProcessingMap>();
  } catch (const json::exception& e) {
    throw input_error("'" + path + "': " + std::string(e.what()));
  }
}

inline std::vector<PostProcessingMap> load_maps(const std::string& path) {
  const json j = io_detail::load_json_file(path);
  try {
    if (j.is_array()) return j.get<std::vector<PostProcessingMap>>();
    return {j.get<PostProcessingMap>()};
  } catch (const json::exception& e) {
    throw input_error("'" + path + "': " + std::string(e.what()));
  }
}

inline void to_json(json& j, const Interval& iv) {
  j = json{{"lo", iv.lo}, {"hi", iv.hi}, {"lo_closed", iv.lo_closed}, {"hi_closed", iv.hi_closed}};
}
inline void to_json(json& j, const IntervalUnion& u) { j = json{{"parts", u.parts}}; }

// ---- reports ----

inline void to_json(json& j, const CdlEstimate& e) {
  j = json{{"value", e.value},
           {"witness_v", e.witness_v},
           {"witness_sign", e.witness_sign},
           {"witness_map", e.witness_kappa}};
}

inline void to_json(json& j, const CeReport& r) {
  j = json{{"value", r.value}, {"weights", r.weights}, {"witness", r.witness}};
}

inline void to_json(json& j, const SmceResult& r) {
  j = json{{"value", r.value}, {"weights", r.weights}};
}

inline void to_json(json& j, const LearnedHypothesis& h) {
  json intervals = json::array();
  for (const auto& iv : h.support.support.parts) intervals.push_back(iv);
  j = json{{"objective", h.objective},
           {"error_rate", h.error_rate},
           {"support", intervals},
           {"index_intervals", h.index_intervals}};
}

inline void to_json(json& j, const TestVerdict& v) {
  j = json{{"verdict", v.reject ? "reject" : "accept"},
           {"statistic", v.statistic},
           {"threshold", v.threshold},
           {"route", v.route},
           {"folds", v.folds},
           {"sample_size", v.sample_size},
           {"fold_statistics", v.fold_statistics}};
  if (!v.net.points.empty()) j["net_points"] = v.net.points;
}

inline void to_json(json& j, const PavResult& r) {
  j = json{{"fitted", r.fitted}, {"sse", r.sse}, {"map", r.kappa}};
}

inline void to_json(json& j, const UmbCell& c) {
  j = json{{"interval", interval_to_string(c.iv)},
           {"count", c.count},
           {"overflow", c.overflow},
           {"fitted", c.fitted}};
}

inline void to_json(json& j, const UmbResult& r) {
  j = json{{"cells", r.partition.cells},
           {"eps_prime", r.partition.eps_prime},
           {"map", r.kappa}};
}

inline void to_json(json& j, const CalmaResult& r) {
  j = json{{"map", r.kappa},
           {"updates", r.updates},
           {"converged", r.converged},
           {"final_violation", r.final_violation},
           {"potential_trace", r.potential_trace}};
}

inline void to_json(json& j, const OmniGapReport& r) {
  j = json{{"gap", r.gap},
           {"worst_baseline", r.worst_baseline},
           {"worst_v", r.worst_v},
           {"worst_sign", r.worst_sign}};
}

inline void to_json(json& j, const MembershipReport& r) {
  j = json{{"member", r.member}, {"reason", r.reason}};
}

inline void to_json(json& j, const OracleReport& r) {
  j = json{{"suite", r.suite}, {"cases", r.cases}, {"failures", r.failures},
           {"max_gap", r.max_gap}};
}

inline void to_json(json& j, const SmallIntervalReport& r) {
  j = json{{"lhs", r.lhs}, {"bound", r.bound}, {"holds", r.holds}, {"cdl", r.cdl_est}};
}

inline void to_json(json& j, const RelationCheck& c) {
  j = json{{"name", c.name}, {"instance", c.instance}, {"lhs", c.lhs}, {"rhs", c.rhs},
           {"pass", c.pass}};
}

inline void to_json(json& j, const AuditReport& r) {
  j = json{{"version", r.version},
           {"seed", r.seed},
           {"instances", r.instances},
           {"all_pass", r.all_pass},
           {"checks", r.checks}};
}

inline void to_json(json& j, const LowerBoundTrial& t) {
  j = json{{"cdl", t.cdl_value},
           {"witness_value", t.witness_value},
           {"alignment", t.alignment},
           {"hit", t.hit}};
}

inline void to_json(json& j, const LowerBoundReport& r) {
  j = json{{"d", r.d}, {"seed", r.seed}, {"frequency", r.frequency},
           {"trials", r.trial_results}};
}

inline void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"id", c.id},         {"eps", c.eps},     {"d", c.d},
           {"r", c.r},           {"mu", c.mu},       {"trials", c.trials},
           {"grid", c.grid},     {"sample_size", c.sample_size},
           {"seed", c.seed},     {"out", c.out}};
}
inline void from_json(const json& j, ExperimentConfig& c) {
  j.at("id").get_to(c.id);
  c.eps = j.value("eps", c.eps);
  c.d = j.value("d", c.d);
  c.r = j.value("r", c.r);
  c.mu = j.value("mu", c.mu);
  c.trials = j.value("trials", c.trials);
  c.grid = j.value("grid", c.grid);
  c.sample_size = j.value("sample_size", c.sample_size);
  c.seed = j.value("seed", c.seed);
  c.out = j.value("out", c.out);
  c.validate();
}

}  // namespace calib
