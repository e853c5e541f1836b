// calib-decide: command-line front end for the calibration decision-loss
// library.  subcommands:
//
//   metrics          calibration metrics of a sample file or exact
//                    distribution (ece, smce, decision loss per class,
//                    weighted calibration error)
//   test             accept/reject decision for "decision loss below alpha"
//   learn-intervals  best interval-union threshold hypothesis
//   recalibrate      fit a post-processing map (pav | umb | calma)
//   omni-gap         regret of a fitted map against baseline maps
//   verify           randomized cross-checks against brute-force oracles
//   experiment       canned experiment harness (lowerbound | tightness |
//                    separation | relations), also configurable via json
//
// all randomness is seeded; identical invocations produce identical bytes.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "calib/json_io.hpp"
#include "calib/verify.hpp"

namespace {

using calib::json;

calib::PostClass parse_class(const std::string& s) {
  if (s == "all") return calib::PostClass::All();
  if (s == "nondecreasing") return calib::PostClass::MonotoneNondecreasing();
  if (s == "nonincreasing") return calib::PostClass::MonotoneNonincreasing();
  if (s.rfind("union:", 0) == 0)
    return calib::PostClass::GeneralizedMonotone(std::stoi(s.substr(6)));
  if (s.rfind("lipschitz:", 0) == 0)
    return calib::PostClass::Lipschitz(std::stod(s.substr(10)));
  throw calib::input_error("unknown class '" + s +
                           "' (expected all, nondecreasing, nonincreasing, union:R, "
                           "or lipschitz:L)");
}

calib::WeightClassSpec parse_weight_class(const std::string& s) {
  if (s == "bounded") return calib::WeightClassSpec::AllBounded();
  if (s == "intervals") return calib::WeightClassSpec::SignedIntervals();
  if (s == "smooth") return calib::WeightClassSpec::Lipschitz1();
  if (s.rfind("thresholds:", 0) == 0)
    return calib::WeightClassSpec::ThrPrime(parse_class(s.substr(11)));
  throw calib::input_error("unknown weight class '" + s +
                           "' (expected bounded, intervals, smooth, or thresholds:CLASS)");
}

struct InputSpec {
  std::string path;
  std::string kind = "samples";  // samples | distribution
  std::string format = "csv";    // csv | json (samples only)
};

struct LoadedInput {
  calib::GroupedData grouped;
  calib::LabeledSampleSet samples;  // filled only for kind == samples
  bool is_samples = false;
};

LoadedInput load_input(const InputSpec& spec) {
  LoadedInput in;
  if (spec.kind == "samples") {
    in.samples = calib::load_samples(spec.path, calib::parse_format(spec.format));
    in.grouped = calib::grouped_view(in.samples);
    in.is_samples = true;
  } else if (spec.kind == "distribution") {
    in.grouped = calib::grouped_view(calib::load_distribution(spec.path));
  } else {
    throw calib::input_error("unknown input kind '" + spec.kind +
                             "' (expected samples or distribution)");
  }
  return in;
}

void add_input_options(CLI::App* cmd, InputSpec& spec) {
  cmd->add_option("input", spec.path, "input file")->required();
  cmd->add_option("--input-kind", spec.kind, "samples | distribution");
  cmd->add_option("--input-format", spec.format, "csv | json (sample files)");
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw calib::input_error("cannot open '" + out_path + "' for writing");
  out << text;
}

std::string metrics_csv(const json& j) {
  std::string csv = "metric,value\n";
  for (const auto& [key, value] : j.items())
    if (value.is_number()) csv += key + "," + value.dump() + "\n";
  return csv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"calibration decision-loss toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string format = "json";
  std::string out_path;
  app.add_option("--seed", seed, "seed for all randomized steps");
  app.add_option("--format", format, "json | csv (metrics only)");
  app.add_option("--out", out_path, "write the report here instead of stdout");

  // metrics
  InputSpec metrics_in;
  std::string metrics_class = "all";
  std::string weight_class;
  std::string convention = "indicator";
  auto* metrics_cmd = app.add_subcommand("metrics", "calibration metrics of a dataset")->fallthrough();
  add_input_options(metrics_cmd, metrics_in);
  metrics_cmd->add_option("--class", metrics_class, "post-processing class for decision loss");
  metrics_cmd->add_option("--weight-class", weight_class,
                          "bounded | intervals | smooth | thresholds:CLASS");
  metrics_cmd->add_option("--convention", convention,
                          "interval weight convention: indicator | pm1");

  // test
  InputSpec test_in;
  std::string test_class = "nondecreasing";
  std::string route = "empirical";
  double alpha = 0.2, eps = 0.1, mu = 0.01, delta = 1.0 / 3.0;
  int trials = 1;
  auto* test_cmd = app.add_subcommand("test", "accept or reject low decision loss")->fallthrough();
  add_input_options(test_cmd, test_in);
  test_cmd->add_option("--class", test_class, "post-processing class");
  test_cmd->add_option("--alpha", alpha, "decision-loss level under test")->required();
  test_cmd->add_option("--eps", eps, "slack between accept and reject levels")->required();
  test_cmd->add_option("--route", route, "empirical | audit | strongly-proper");
  test_cmd->add_option("--trials", trials, "odd fold count for the majority verdict");
  test_cmd->add_option("--mu", mu, "mixing weight for the strongly-proper route");
  test_cmd->add_option("--delta", delta, "failure budget for the audit net");

  // learn-intervals
  InputSpec learn_in;
  int learn_r = 1;
  std::string labels_from = "pm1";
  double learn_v = 0.0;
  auto* learn_cmd = app.add_subcommand("learn-intervals",
                                       "best interval-union threshold hypothesis")
                        ->fallthrough();
  add_input_options(learn_cmd, learn_in);
  learn_cmd->add_option("--r", learn_r, "maximum number of intervals")->required();
  learn_cmd->add_option("--labels-from", labels_from, "pm1 | y-minus-v");
  learn_cmd->add_option("--v", learn_v, "threshold for y-minus-v labels");

  // recalibrate
  InputSpec recal_in;
  std::string method = "pav";
  double recal_eps = 0.1, eps_prime = 0.0;
  int recal_r = 2;
  auto* recal_cmd = app.add_subcommand("recalibrate", "fit a post-processing map")->fallthrough();
  add_input_options(recal_cmd, recal_in);
  recal_cmd->add_option("--method", method, "pav | umb | calma")->required();
  recal_cmd->add_option("--eps", recal_eps, "target accuracy (umb, calma)");
  recal_cmd->add_option("--eps-prime", eps_prime, "per-bucket mass fraction (umb)");
  recal_cmd->add_option("--r", recal_r, "interval budget of the target class");

  // omni-gap
  InputSpec gap_in;
  std::string map_path, baselines_path, gap_class = "union:2";
  auto* gap_cmd = app.add_subcommand("omni-gap", "regret of a map against baselines")->fallthrough();
  add_input_options(gap_cmd, gap_in);
  gap_cmd->add_option("--map", map_path, "fitted map (json)")->required();
  gap_cmd->add_option("--baselines", baselines_path, "baseline maps (json array)")->required();
  gap_cmd->add_option("--class", gap_class, "class the baselines must belong to");

  // verify
  std::string suite = "all";
  std::size_t cases = 100;
  auto* verify_cmd = app.add_subcommand("verify", "cross-check against brute-force oracles")->fallthrough();
  verify_cmd->add_option("--suite", suite, "ce | union | cdl | isotonic | smce | all");
  verify_cmd->add_option("--cases", cases, "instances per suite");

  // experiment
  std::string exp_name, config_path;
  auto* exp_cmd = app.add_subcommand("experiment", "canned experiment harness")->fallthrough();
  exp_cmd->add_option("--name", exp_name, "lowerbound | tightness | separation | relations");
  exp_cmd->add_option("--config", config_path, "experiment config (json)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*metrics_cmd) {
      const LoadedInput in = load_input(metrics_in);
      json j;
      j["ece"] = calib::ece(in.grouped);
      j["smce"] = calib::smce(in.grouped).value;
      const calib::PostClass cls = parse_class(metrics_class);
      j["class"] = cls.name();
      j["cdl"] = json(calib::cdl(in.grouped, cls));
      if (!weight_class.empty()) {
        const auto conv = convention == "pm1" ? calib::IntervalConvention::pm_one
                                              : calib::IntervalConvention::indicator;
        j["ce"] = json(calib::ce_weighted(in.grouped, parse_weight_class(weight_class), conv));
        j["convention"] = convention;
      }
      json flat = j;
      flat["cdl"] = j["cdl"]["value"];
      if (j.contains("ce")) flat["ce"] = j["ce"]["value"];
      emit(format == "csv" ? metrics_csv(flat) : j.dump(2) + "\n", out_path);
    } else if (*test_cmd) {
      const LoadedInput in = load_input(test_in);
      if (!in.is_samples) throw calib::input_error("test expects a sample file");
      const calib::PostClass cls = parse_class(test_class);
      calib::TestVerdict v;
      if (route == "empirical")
        v = calib::test_empirical(in.samples, cls, alpha, eps, trials);
      else if (route == "audit")
        v = calib::audit_via_learner(in.samples, cls, alpha, eps, seed, delta, trials);
      else if (route == "strongly-proper")
        v = calib::test_strongly_proper(in.samples, cls, alpha, eps, mu, trials);
      else
        throw calib::input_error("unknown route '" + route + "'");
      json j(v);
      j["class"] = cls.name();
      j["alpha"] = alpha;
      j["eps"] = eps;
      j["seed"] = seed;
      emit(j.dump(2) + "\n", out_path);
    } else if (*learn_cmd) {
      const LoadedInput in = load_input(learn_in);
      if (!in.is_samples) throw calib::input_error("learn-intervals expects a sample file");
      const auto mode = labels_from == "y-minus-v" ? calib::LabelMode::y_minus_v
                                                   : calib::LabelMode::pm1;
      if (labels_from != "pm1" && labels_from != "y-minus-v")
        throw calib::input_error("unknown label mode '" + labels_from + "'");
      const calib::LearnedHypothesis h =
          calib::agnostic_learn(in.samples, learn_r, mode, learn_v);
      emit(json(h).dump(2) + "\n", out_path);
    } else if (*recal_cmd) {
      const LoadedInput in = load_input(recal_in);
      if (!in.is_samples) throw calib::input_error("recalibrate expects a sample file");
      json j;
      j["method"] = method;
      if (method == "pav") {
        j["result"] = json(calib::pav(in.samples));
      } else if (method == "umb") {
        const double frac = eps_prime > 0.0
                                ? eps_prime
                                : recal_eps / (8.0 * static_cast<double>(recal_r));
        j["result"] = json(calib::umb_recalibrate(in.samples, frac));
      } else if (method == "calma") {
        j["result"] = json(calib::calibrated_multiaccuracy(
            in.samples, calib::PostClass::GeneralizedMonotone(recal_r), recal_eps));
      } else {
        throw calib::input_error("unknown method '" + method + "'");
      }
      emit(j.dump(2) + "\n", out_path);
    } else if (*gap_cmd) {
      const LoadedInput in = load_input(gap_in);
      const calib::PostProcessingMap fitted = calib::load_map(map_path);
      const std::vector<calib::PostProcessingMap> baselines = calib::load_maps(baselines_path);
      const calib::OmniGapReport rep =
          calib::omni_gap(in.grouped, fitted, baselines, parse_class(gap_class));
      emit(json(rep).dump(2) + "\n", out_path);
    } else if (*verify_cmd) {
      const auto reports = calib::run_oracle_suites(suite, cases, seed);
      std::string lines;
      int bad = 0;
      for (const auto& rep : reports) {
        lines += json(rep).dump() + "\n";
        if (rep.failures > 0) ++bad;
      }
      emit(lines, out_path);
      return bad;
    } else if (*exp_cmd) {
      calib::ExperimentConfig cfg;
      cfg.seed = seed;
      if (!config_path.empty()) {
        const json jc = calib::io_detail::load_json_file(config_path);
        try {
          cfg = jc.get<calib::ExperimentConfig>();
        } catch (const json::exception& e) {
          throw calib::input_error("'" + config_path + "': " + std::string(e.what()));
        }
        if (app.count("--seed") > 0) cfg.seed = seed;
      } else if (!exp_name.empty()) {
        cfg.id = exp_name;
      } else {
        throw calib::input_error("experiment needs --name or --config");
      }
      json j;
      j["config"] = json(cfg);
      j["version"] = calib::kLibraryVersion;
      if (cfg.id == "lowerbound") {
        j["report"] = json(calib::run_lowerbound_experiment(cfg.d, cfg.trials, cfg.seed));
      } else if (cfg.id == "tightness") {
        const auto j1 = calib::gen_tightness(calib::TightnessVariant::point_mass, cfg.eps,
                                             cfg.grid);
        const auto j2 = calib::gen_tightness(calib::TightnessVariant::shifted_grid, cfg.eps,
                                             cfg.grid);
        j["report"] = {
            {"point_mass",
             {{"atoms", j1.atoms},
              {"ece", calib::ece(j1)},
              {"cdl_nondecreasing", calib::cdl(j1, calib::PostClass::MonotoneNondecreasing()).value}}},
            {"shifted_grid",
             {{"ece", calib::ece(j2)},
              {"interval_ce",
               calib::ce_weighted(grouped_view(j2), calib::WeightClassSpec::SignedIntervals())
                   .value},
              {"cdl_nondecreasing",
               calib::cdl(j2, calib::PostClass::MonotoneNondecreasing()).value}}}};
      } else if (cfg.id == "separation") {
        const auto d = calib::gen_separation_mminus();
        j["report"] = {
            {"atoms", d.atoms},
            {"ece", calib::ece(d)},
            {"threshold_ce",
             calib::ce_weighted(grouped_view(d),
                                calib::WeightClassSpec::ThrPrime(
                                    calib::PostClass::MonotoneNonincreasing()))
                 .value},
            {"cdl_nonincreasing",
             calib::cdl(d, calib::PostClass::MonotoneNonincreasing()).value}};
      } else if (cfg.id == "relations") {
        j["report"] = json(calib::run_relation_suite(cfg.trials, cfg.seed));
      } else {
        throw calib::input_error("unknown experiment '" + cfg.id + "'");
      }
      const std::string target = !out_path.empty() ? out_path : cfg.out;
      emit(j.dump(2) + "\n", target);
      if (cfg.id == "relations" && !j["report"]["all_pass"].get<bool>()) return 1;
    }
  } catch (const calib::input_error& ex) {
    std::cerr << "input error: " << ex.what() << "\n";
    return 2;
  } catch (const calib::unsupported_error& ex) {
    std::cerr << "unsupported: " << ex.what() << "\n";
    return 3;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 4;
  }
  return 0;
}
