// locfield: experiment runner for location-unaware field sampling.
//
//   locfield <command> [flags] [--config file.json]
//
// A config file holds flag names as keys ("trials": 500, "laws": ["optimal"]).
// Flags given on the command line take precedence over the file.
// Exit status: 0 success, 1 usage error, 2 runtime error.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "locfield/experiments.hpp"

namespace {

using namespace locfield;

constexpr int kUsage = 1;
constexpr int kRuntime = 2;

/// Expands --config into ordinary flags appended after the user's own, for
/// every key the user did not already pass.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::optional<std::string> path;
  std::set<std::string> given;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    if (a.rfind("--", 0) != 0) continue;
    const auto eq = a.find('=');
    const std::string name = a.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
    given.insert(name);
    if (name == "config") {
      if (eq != std::string::npos) path = a.substr(eq + 1);
      else if (i + 1 < args.size()) path = args[i + 1];
    }
  }
  if (!path) return args;

  nlohmann::json cfg;
  try {
    cfg = read_json_file(*path);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  if (!cfg.is_object()) throw UsageError("config file must hold a JSON object");

  auto scalar = [](const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_number()) return format_number(v.get<double>());
    throw UsageError("unsupported config value " + v.dump());
  };

  std::vector<std::string> out = args;
  for (const auto& [key, value] : cfg.items()) {
    std::string name = key;
    for (auto& c : name) {
      if (c == '_') c = '-';
    }
    if (name == "config" || given.count(name)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back("--" + name);
    } else if (value.is_array()) {
      out.push_back("--" + name);
      for (const auto& v : value) out.push_back(scalar(v));
    } else {
      out.push_back("--" + name);
      out.push_back(scalar(value));
    }
  }
  return out;
}

/// Writes to --out, or stdout when empty.
template <typename F>
void emit(const std::string& path, F&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw DomainError("cannot open " + path + " for writing");
  write(file);
  if (!file) throw DomainError("failed writing " + path);
}

std::string sibling(const std::string& path, const std::string& suffix) {
  if (path.empty()) return {};
  const auto dot = path.rfind('.');
  const auto slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return path + suffix + ".csv";
  }
  return path.substr(0, dot) + suffix + path.substr(dot);
}

CLI::App* command(CLI::App& app, const std::string& name, const std::string& help,
                  std::string& config) {
  auto* sub = app.add_subcommand(name, help);
  sub->add_option("--config", config, "JSON file of flag values");
  return sub;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  args = expand_config(args);

  CLI::App app{"Reconstruction of bandlimited fields from location-unaware samples"};
  app.require_subcommand(1);
  std::string config;
  std::string out;
  unsigned threads = default_thread_count();
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  // gen-field
  GenFieldConfig gen;
  auto* gen_cmd = command(app, "gen-field", "Draw a random real field and print it as JSON", config);
  gen_cmd->add_option("--b", gen.b, "bandwidth");
  gen_cmd->add_option("--seed", gen.seed, "master seed");
  gen_cmd->add_option("--amplitude", gen.amplitude_bound, "coefficient bound A");
  gen_cmd->add_option("--gap", gen.distinctness_gap, "minimum gap between grid values");
  gen_cmd->add_option("--out", out, "output file (default stdout)");

  // error-sweep
  ErrorSweepConfig sweep;
  std::string loglog_out;
  auto* sweep_cmd = command(app, "error-sweep", "Detection error versus n for each law", config);
  sweep_cmd->add_option("--b", sweep.b, "bandwidth");
  sweep_cmd->add_option("--laws", sweep.laws, "optimal, linear, cubic, random");
  sweep_cmd->add_option("--n", sweep.n_values, "explicit sample counts");
  sweep_cmd->add_option("--n-min", sweep.n_min, "smallest n of the log grid");
  sweep_cmd->add_option("--n-max", sweep.n_max, "largest n of the log grid");
  sweep_cmd->add_option("--n-points", sweep.n_points, "points in the log grid");
  sweep_cmd->add_option("--trials", sweep.trials, "Monte Carlo trials per point");
  sweep_cmd->add_option("--seed", sweep.seed, "master seed");
  sweep_cmd->add_option("--amplitude", sweep.amplitude_bound, "coefficient bound A");
  sweep_cmd->add_option("--out", out, "CSV output (default stdout)");
  sweep_cmd->add_option("--loglog-out", loglog_out,
                        "log-log plot data (default <out>_loglog.csv)");

  // sample-size
  SampleSizeConfig size;
  auto* size_cmd = command(app, "sample-size", "Sufficient n for error below epsilon", config);
  size_cmd->add_option("--b", size.b, "bandwidth");
  size_cmd->add_option("--epsilon", size.epsilon, "target error probability");
  size_cmd->add_option("--law", size.law, "placement law");
  size_cmd->add_option("--seed", size.seed, "master seed (random law)");
  size_cmd->add_option("--out", out, "output file (default stdout)");

  // threshold-search
  ThresholdConfig threshold;
  std::vector<int> threshold_bs{3};
  std::string summary_out;
  auto* threshold_cmd =
      command(app, "threshold-search", "Smallest n reaching a target error", config);
  threshold_cmd->add_option("--b", threshold_bs, "one or more bandwidths");
  threshold_cmd->add_option("--target", threshold.target, "target error probability");
  threshold_cmd->add_option("--tolerance", threshold.tolerance, "half-width of the target band");
  threshold_cmd->add_option("--trials", threshold.trials, "Monte Carlo trials per evaluation");
  threshold_cmd->add_option("--seed", threshold.seed, "master seed");
  threshold_cmd->add_option("--amplitude", threshold.amplitude_bound, "coefficient bound A");
  threshold_cmd->add_option("--max-evaluations", threshold.max_evaluations,
                            "evaluation budget per bandwidth");
  threshold_cmd->add_option("--out", out, "search history CSV (default stdout)");
  threshold_cmd->add_option("--summary-out", summary_out,
                            "n* per bandwidth (default <out>_summary.csv)");

  // noisy
  NoisyCommandConfig noisy;
  std::string hist_out;
  std::string dg_out;
  auto* noisy_cmd = command(app, "noisy", "EM reconstruction from noisy readings", config);
  noisy_cmd->add_option("--b", noisy.experiment.b, "bandwidth");
  noisy_cmd->add_option("--n", noisy.experiment.n, "readings per field");
  noisy_cmd->add_option("--sigma", noisy.experiment.sigma, "noise standard deviation");
  noisy_cmd->add_option("--fields,--trials", noisy.experiment.num_fields, "number of random fields");
  noisy_cmd->add_option("--amplitude", noisy.experiment.amplitude_bound, "coefficient bound A");
  noisy_cmd->add_option("--tol", noisy.experiment.em.tol, "EM convergence tolerance");
  noisy_cmd->add_option("--max-iter", noisy.experiment.em.max_iter, "EM iteration cap");
  noisy_cmd->add_option("--restarts", noisy.experiment.restarts, "k-means++ restarts per field");
  noisy_cmd->add_option("--seed", noisy.seed, "master seed");
  noisy_cmd->add_option("--low-threshold", noisy.low_threshold, "distortion counted as low");
  noisy_cmd->add_option("--hist-width", noisy.hist_width, "distortion histogram bin width");
  noisy_cmd->add_option("--dg-bins", noisy.dg_bins, "bins of the d_g histogram");
  noisy_cmd->add_option("--out", out, "per-field CSV (default stdout)");
  noisy_cmd->add_option("--hist-out", hist_out, "distortion histogram (default <out>_hist.csv)");
  noisy_cmd->add_option("--dg-out", dg_out, "d_g histogram (default <out>_dg.csv)");

  // ambiguity-demo
  AmbiguityConfig ambiguity;
  std::string field_path;
  std::optional<double> theta_min;
  std::optional<double> theta_max;
  auto* ambiguity_cmd =
      command(app, "ambiguity-demo", "Level-set measures under shift, flip and scale", config);
  ambiguity_cmd->add_option("--b", ambiguity.b, "bandwidth");
  ambiguity_cmd->add_option("--shift", ambiguity.shift, "shift s");
  ambiguity_cmd->add_option("--scale", ambiguity.scale, "integer scale m");
  ambiguity_cmd->add_option("--theta-min", theta_min, "lowest level");
  ambiguity_cmd->add_option("--theta-max", theta_max, "highest level");
  ambiguity_cmd->add_option("--theta-points", ambiguity.theta_points, "number of levels");
  ambiguity_cmd->add_option("--resolution", ambiguity.resolution, "level-set grid resolution");
  ambiguity_cmd->add_option("--seed", ambiguity.seed, "master seed");
  ambiguity_cmd->add_option("--amplitude", ambiguity.amplitude_bound, "coefficient bound A");
  ambiguity_cmd->add_option("--field", field_path, "field JSON from gen-field");
  ambiguity_cmd->add_option("--out", out, "CSV output (default stdout)");

  // exponent-check
  ExponentCheckConfig exponent;
  auto* exponent_cmd =
      command(app, "exponent-check", "Closed-form exponents against the KL minimizer", config);
  exponent_cmd->add_option("--b", exponent.b, "bandwidth (at most 5)");
  exponent_cmd->add_option("--law", exponent.law, "placement law");
  exponent_cmd->add_option("--seed", exponent.seed, "master seed");
  exponent_cmd->add_flag("--mc-slope", exponent.mc_slope, "add a Monte Carlo slope estimate");
  exponent_cmd->add_option("--trials", exponent.trials, "trials per point of the slope sweep");
  exponent_cmd->add_option("--slope-points", exponent.slope_points, "points in the slope sweep");
  exponent_cmd->add_option("--amplitude", exponent.amplitude_bound, "coefficient bound A");
  exponent_cmd->add_option("--out", out, "CSV output (default stdout)");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (gen_cmd->parsed()) {
    const auto field = run_gen_field(gen);
    emit(out, [&](std::ostream& os) { os << field_to_json(field).dump() << '\n'; });
  } else if (sweep_cmd->parsed()) {
    const auto rows = run_error_sweep(sweep, threads);
    emit(out, [&](std::ostream& os) { write_error_sweep_csv(os, sweep, rows); });
    const std::string plot = loglog_out.empty() ? sibling(out, "_loglog") : loglog_out;
    if (!plot.empty()) {
      emit(plot, [&](std::ostream& os) { write_loglog_csv(os, sweep, rows); });
    }
  } else if (size_cmd->parsed()) {
    const auto n = run_sample_size(size);
    emit(out, [&](std::ostream& os) { os << n << '\n'; });
  } else if (threshold_cmd->parsed()) {
    if (threshold_bs.empty()) throw UsageError("--b needs at least one bandwidth");
    for (int b : threshold_bs) {
      ThresholdConfig one = threshold;
      one.b = b;
      one.validate();
    }
    nlohmann::json meta = threshold.to_json();
    meta["b"] = threshold_bs;
    const auto runs = run_threshold_search(threshold, threshold_bs, threads);
    for (const auto& run : runs) {
      if (!run.result.warning.empty()) {
        std::cerr << "warning: b=" << run.b << ": " << run.result.warning << '\n';
      }
      std::cerr << "b=" << run.b << " n*=" << run.result.n_star
                << " e_hat=" << format_number(run.result.estimate.e_hat) << '\n';
    }
    emit(out, [&](std::ostream& os) { write_threshold_history_csv(os, meta, runs); });
    const std::string summary = summary_out.empty() ? sibling(out, "_summary") : summary_out;
    if (!summary.empty()) {
      emit(summary, [&](std::ostream& os) { write_threshold_summary_csv(os, meta, runs); });
    }
  } else if (noisy_cmd->parsed()) {
    const auto result = run_noisy(noisy, threads);
    emit(out, [&](std::ostream& os) { write_noisy_csv(os, noisy, result.records); });
    const std::string hist = hist_out.empty() ? sibling(out, "_hist") : hist_out;
    if (!hist.empty()) {
      emit(hist, [&](std::ostream& os) {
        write_histogram_csv(os, "noisy-distortion-histogram", noisy.to_json(),
                            result.distortion_histogram);
      });
    }
    const std::string dg = dg_out.empty() ? sibling(out, "_dg") : dg_out;
    if (!dg.empty()) {
      emit(dg, [&](std::ostream& os) {
        write_histogram_csv(os, "noisy-dg-histogram", noisy.to_json(), result.dg_histogram);
      });
    }
    std::size_t failed = 0;
    for (const auto& r : result.records) failed += r.failed ? 1 : 0;
    std::cerr << "low-distortion fraction (D < " << format_number(noisy.low_threshold)
              << "): " << format_number(result.low_fraction) << " over "
              << result.records.size() << " fields, " << failed << " failed\n";
  } else if (ambiguity_cmd->parsed()) {
    ambiguity.theta_min = theta_min;
    ambiguity.theta_max = theta_max;
    if (!field_path.empty()) ambiguity.field = load_field(field_path);
    const auto result = run_ambiguity_demo(ambiguity);
    emit(out, [&](std::ostream& os) { write_ambiguity_csv(os, ambiguity, result); });
    std::cerr << "max discrepancy: " << format_number(result.max_spread) << '\n';
  } else if (exponent_cmd->parsed()) {
    const auto result = run_exponent_check(exponent, threads);
    emit(out, [&](std::ostream& os) { write_exponent_csv(os, exponent, result); });
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}
