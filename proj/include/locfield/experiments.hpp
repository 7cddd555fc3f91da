#pragma once

// Reproducible experiment drivers behind the command-line tool. Each driver
// takes a plain config record, derives every random stream from the config's
// master seed, and writes schema-stable CSV whose first line is
//   # locfield <command> <config as JSON>
// so identical configs produce byte-identical files.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "locfield/deployment.hpp"
#include "locfield/detection.hpp"
#include "locfield/field_model.hpp"
#include "locfield/noisy_em.hpp"
#include "locfield/random.hpp"
#include "locfield/sanov.hpp"
#include "locfield/serialization.hpp"

namespace locfield {

/// Bad user input to a driver; the CLI maps it to exit code 1.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// -- Formatting ---------------------------------------------------------------

/// Shortest round-trip representation; "inf", "-inf", "nan" for non-finite.
inline std::string format_number(double x) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

inline void write_metadata(std::ostream& out, std::string_view command,
                           const nlohmann::json& config) {
  out << "# locfield " << command << ' ' << config.dump() << '\n';
}

/// Round, deduplicated, log-spaced integers from lo to hi inclusive.
inline std::vector<std::size_t> log_spaced(std::size_t lo, std::size_t hi,
                                           std::size_t points) {
  if (lo < 1 || hi < lo || points < 1) throw UsageError("invalid log-spaced range");
  std::vector<std::size_t> out;
  if (points == 1 || lo == hi) return {lo};
  const double a = std::log(static_cast<double>(lo));
  const double b = std::log(static_cast<double>(hi));
  for (std::size_t i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(points - 1);
    const auto n = static_cast<std::size_t>(std::llround(std::exp(a + t * (b - a))));
    if (out.empty() || n != out.back()) out.push_back(n);
  }
  out.back() = hi;
  return out;
}

struct HistogramBin {
  double left;
  double right;
  std::size_t count;
};

/// Bins [k w, (k+1) w) from 0 up to the largest finite value; NaNs skipped.
inline std::vector<HistogramBin> histogram_fixed_width(std::span<const double> values,
                                                       double width) {
  if (!(width > 0.0)) throw UsageError("histogram bin width must be positive");
  double top = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) top = std::max(top, v);
  }
  const auto bins = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(top / width)) + 1);
  std::vector<HistogramBin> out(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    out[i] = {static_cast<double>(i) * width, static_cast<double>(i + 1) * width, 0};
  }
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    const auto i = std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, v) / width));
    ++out[i].count;
  }
  return out;
}

/// `bins` equal-width bins over [0, max finite value].
inline std::vector<HistogramBin> histogram_bins(std::span<const double> values,
                                                std::size_t bins) {
  if (bins < 1) throw UsageError("histogram needs at least one bin");
  double top = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) top = std::max(top, v);
  }
  if (top == 0.0) top = 1.0;
  const double width = top / static_cast<double>(bins);
  std::vector<HistogramBin> out(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    out[i] = {static_cast<double>(i) * width,
              i + 1 == bins ? top : static_cast<double>(i + 1) * width, 0};
  }
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    const auto i = std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, v) / width));
    ++out[i].count;
  }
  return out;
}

inline void write_histogram_csv(std::ostream& out, std::string_view command,
                                const nlohmann::json& config,
                                std::span<const HistogramBin> bins) {
  write_metadata(out, command, config);
  out << "bin_left,bin_right,count\n";
  for (const auto& bin : bins) {
    out << format_number(bin.left) << ',' << format_number(bin.right) << ','
        << bin.count << '\n';
  }
}

// -- gen-field ------------------------------------------------------------------

struct GenFieldConfig {
  int b = 3;
  std::uint64_t seed = 1;
  double amplitude_bound = 1.0;
  double distinctness_gap = 1e-6;

  void validate() const {
    if (b < 0) throw UsageError("--b must be >= 0");
    if (!(amplitude_bound > 0.0)) throw UsageError("--amplitude must be positive");
    if (!(distinctness_gap >= 0.0)) throw UsageError("--gap must be >= 0");
  }
};

/// The random field every driver uses for a given master seed.
inline BandlimitedField experiment_field(int b, std::uint64_t seed,
                                         double amplitude_bound,
                                         double gap = 1e-6) {
  Rng rng = substream(derive_seed(seed, "field"), 0);
  RandomFieldOptions options;
  options.amplitude_bound = amplitude_bound;
  options.distinctness_gap = gap;
  return random_field(b, rng, options);
}

inline BandlimitedField run_gen_field(const GenFieldConfig& cfg) {
  cfg.validate();
  return experiment_field(cfg.b, cfg.seed, cfg.amplitude_bound, cfg.distinctness_gap);
}

// -- error-sweep ----------------------------------------------------------------

struct ErrorSweepConfig {
  int b = 3;
  std::vector<std::string> laws{"optimal", "linear", "cubic", "random"};
  /// Explicit n grid; when empty, log_spaced(n_min, n_max, n_points).
  std::vector<std::size_t> n_values;
  std::size_t n_min = 100;
  std::size_t n_max = 10000;
  std::size_t n_points = 9;
  std::size_t trials = 2000;
  std::uint64_t seed = 1;
  double amplitude_bound = 1.0;

  void validate() const {
    if (b < 0) throw UsageError("--b must be >= 0");
    if (trials < 1) throw UsageError("--trials must be >= 1");
    if (laws.empty()) throw UsageError("at least one law is required");
    for (const auto& law : laws) {
      try {
        parse_law(law);
      } catch (const DomainError& e) {
        throw UsageError(e.what());
      }
    }
    for (auto n : n_values) {
      if (n < 1) throw UsageError("sample counts must be >= 1");
    }
    if (n_values.empty() && (n_min < 1 || n_max < n_min || n_points < 1)) {
      throw UsageError("invalid n range");
    }
    if (!(amplitude_bound > 0.0)) throw UsageError("--amplitude must be positive");
  }

  std::vector<std::size_t> grid() const {
    return n_values.empty() ? log_spaced(n_min, n_max, n_points) : n_values;
  }

  nlohmann::json to_json() const {
    return {{"b", b},           {"laws", laws},   {"n", grid()},
            {"trials", trials}, {"seed", seed},   {"amplitude", amplitude_bound}};
  }
};

struct SweepRow {
  std::string law;
  int b = 0;
  std::size_t n = 0;
  ErrorEstimate estimate;
};

/// One Monte Carlo point per (law, n). The random law is drawn once from the
/// seed and reused across n; every point uses the same trial substreams.
inline std::vector<SweepRow> run_error_sweep(const ErrorSweepConfig& cfg,
                                             unsigned threads = default_thread_count()) {
  cfg.validate();
  const BandlimitedField field = experiment_field(cfg.b, cfg.seed, cfg.amplitude_bound);
  const std::uint64_t trial_seed = derive_seed(cfg.seed, "trials");
  std::vector<SweepRow> rows;
  for (const auto& name : cfg.laws) {
    Rng law_rng = substream(derive_seed(cfg.seed, "law"), 0);
    const SensorDistribution dist = make_distribution(parse_law(name), cfg.b, law_rng);
    for (std::size_t n : cfg.grid()) {
      rows.push_back({name, cfg.b, n,
                      monte_carlo_error(field, dist, n, cfg.trials, trial_seed, threads)});
    }
  }
  return rows;
}

inline void write_error_sweep_csv(std::ostream& out, const ErrorSweepConfig& cfg,
                                  std::span<const SweepRow> rows) {
  write_metadata(out, "error-sweep", cfg.to_json());
  out << "law,b,n,trials,e_hat,ci_half_width,seed\n";
  for (const auto& r : rows) {
    out << r.law << ',' << r.b << ',' << r.n << ',' << r.estimate.trials << ','
        << format_number(r.estimate.e_hat) << ','
        << format_number(r.estimate.ci_half_width) << ',' << cfg.seed << '\n';
  }
}

/// Plot data for log-log axes.
inline void write_loglog_csv(std::ostream& out, const ErrorSweepConfig& cfg,
                             std::span<const SweepRow> rows) {
  write_metadata(out, "error-sweep-loglog", cfg.to_json());
  out << "law,n,log10_n,log10_e_hat\n";
  for (const auto& r : rows) {
    out << r.law << ',' << r.n << ','
        << format_number(std::log10(static_cast<double>(r.n))) << ','
        << format_number(std::log10(r.estimate.e_hat)) << '\n';
  }
}

// -- sample-size ----------------------------------------------------------------

struct SampleSizeConfig {
  int b = 3;
  double epsilon = 0.01;
  std::string law = "optimal";
  std::uint64_t seed = 1;

  void validate() const {
    if (b < 0) throw UsageError("--b must be >= 0");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw UsageError("--epsilon must lie in (0, 1)");
    try {
      parse_law(law);
    } catch (const DomainError& e) {
      throw UsageError(e.what());
    }
  }
};

inline long long run_sample_size(const SampleSizeConfig& cfg) {
  cfg.validate();
  Rng law_rng = substream(derive_seed(cfg.seed, "law"), 0);
  return required_samples(make_distribution(parse_law(cfg.law), cfg.b, law_rng),
                          cfg.epsilon);
}

// -- threshold-search -------------------------------------------------------------

struct ThresholdConfig {
  int b = 3;
  double target = 0.01;
  double tolerance = 0.001;
  std::size_t trials = 2000;
  std::uint64_t seed = 1;
  double amplitude_bound = 1.0;
  std::size_t max_evaluations = 64;

  void validate() const {
    if (b < 0) throw UsageError("--b must be >= 0");
    if (!(tolerance > 0.0) || !(target - tolerance > 0.0) || !(target + tolerance < 1.0)) {
      throw UsageError("target +/- tolerance must lie inside (0, 1)");
    }
    if (trials < 1) throw UsageError("--trials must be >= 1");
    if (max_evaluations < 2) throw UsageError("--max-evaluations must be >= 2");
  }

  nlohmann::json to_json() const {
    return {{"b", b},         {"target", target}, {"tolerance", tolerance},
            {"trials", trials}, {"seed", seed},     {"amplitude", amplitude_bound},
            {"max_evaluations", max_evaluations}};
  }
};

struct ThresholdStep {
  std::size_t n;
  ErrorEstimate estimate;
  bool in_band;
};

struct ThresholdResult {
  std::size_t n_star = 0;
  ErrorEstimate estimate;
  bool found = false;  // false: budget ran out, n_star is the closest point seen
  std::vector<ThresholdStep> history;
  std::string warning;
};

/// Bisection on n for the optimal law until the empirical error lands in
/// [target - tol, target + tol]. Every n is evaluated on the same trial
/// substreams, which keeps the empirical curve close to monotone.
inline ThresholdResult run_threshold_search(const ThresholdConfig& cfg,
                                            unsigned threads = default_thread_count()) {
  cfg.validate();
  const BandlimitedField field = experiment_field(cfg.b, cfg.seed, cfg.amplitude_bound);
  const SensorDistribution dist = optimal_distribution(cfg.b);
  const std::uint64_t trial_seed = derive_seed(cfg.seed, "trials");
  const double lo_band = cfg.target - cfg.tolerance;
  const double hi_band = cfg.target + cfg.tolerance;

  ThresholdResult result;
  auto eval = [&](std::size_t n) {
    const auto est = monte_carlo_error(field, dist, n, cfg.trials, trial_seed, threads);
    const bool in_band = est.e_hat >= lo_band && est.e_hat <= hi_band;
    result.history.push_back({n, est, in_band});
    return result.history.back();
  };
  auto finish = [&](const ThresholdStep& step) {
    result.n_star = step.n;
    result.estimate = step.estimate;
    result.found = true;
    return result;
  };

  // Below (2b+1)(b+1) samples the strict count ordering is impossible.
  const std::size_t k = grid_size(cfg.b);
  std::size_t lo = std::max<std::size_t>(1, k * static_cast<std::size_t>(cfg.b + 1)) - 1;
  std::size_t hi = static_cast<std::size_t>(required_samples(dist, cfg.target));
  if (hi <= lo) hi = lo + 1;

  for (;;) {
    if (result.history.size() >= cfg.max_evaluations) break;
    const auto step = eval(hi);
    if (step.in_band) return finish(step);
    if (step.estimate.e_hat < lo_band) break;
    lo = hi;
    hi *= 2;
  }
  while (hi - lo > 1 && result.history.size() < cfg.max_evaluations) {
    const std::size_t mid = lo + (hi - lo) / 2;
    const auto step = eval(mid);
    if (step.in_band) return finish(step);
    if (step.estimate.e_hat > hi_band) lo = mid;
    else hi = mid;
  }

  const auto closest = std::min_element(
      result.history.begin(), result.history.end(), [&](const auto& a, const auto& c) {
        return std::abs(a.estimate.e_hat - cfg.target) < std::abs(c.estimate.e_hat - cfg.target);
      });
  result.n_star = closest->n;
  result.estimate = closest->estimate;
  result.warning = "no sample count hit the target band; bracket [" + std::to_string(lo) +
                   ", " + std::to_string(hi) + "], reporting the closest evaluated n";
  return result;
}

struct ThresholdRun {
  int b;
  ThresholdResult result;
};

/// Runs the search for each bandwidth with otherwise identical settings.
inline std::vector<ThresholdRun> run_threshold_search(const ThresholdConfig& cfg,
                                                      std::span<const int> bandwidths,
                                                      unsigned threads = default_thread_count()) {
  std::vector<ThresholdRun> runs;
  for (int b : bandwidths) {
    ThresholdConfig one = cfg;
    one.b = b;
    runs.push_back({b, run_threshold_search(one, threads)});
  }
  return runs;
}

inline void write_threshold_history_csv(std::ostream& out, const nlohmann::json& config,
                                        std::span<const ThresholdRun> runs) {
  write_metadata(out, "threshold-search", config);
  out << "b,step,n,e_hat,ci_half_width,in_band\n";
  for (const auto& run : runs) {
    const auto& history = run.result.history;
    for (std::size_t i = 0; i < history.size(); ++i) {
      const auto& s = history[i];
      out << run.b << ',' << i << ',' << s.n << ',' << format_number(s.estimate.e_hat) << ','
          << format_number(s.estimate.ci_half_width) << ',' << (s.in_band ? 1 : 0) << '\n';
    }
  }
}

inline void write_threshold_summary_csv(std::ostream& out, const nlohmann::json& config,
                                        std::span<const ThresholdRun> runs) {
  write_metadata(out, "threshold-search-summary", config);
  out << "b,n_star,e_hat,ci_half_width,found\n";
  for (const auto& run : runs) {
    const auto& r = run.result;
    out << run.b << ',' << r.n_star << ',' << format_number(r.estimate.e_hat) << ','
        << format_number(r.estimate.ci_half_width) << ',' << (r.found ? 1 : 0) << '\n';
  }
}

// -- noisy ----------------------------------------------------------------------

struct NoisyCommandConfig {
  NoisyExperimentConfig experiment;
  std::uint64_t seed = 1;
  double low_threshold = 0.1;
  double hist_width = 0.1;
  std::size_t dg_bins = 20;

  void validate() const {
    const auto& e = experiment;
    if (e.b < 0) throw UsageError("--b must be >= 0");
    if (e.n < grid_size(e.b)) throw UsageError("--n must be at least 2b+1");
    if (!(e.sigma > 0.0)) throw UsageError("--sigma must be positive");
    if (e.num_fields < 1) throw UsageError("--fields must be >= 1");
    if (!(e.amplitude_bound > 0.0)) throw UsageError("--amplitude must be positive");
    if (!(e.em.tol > 0.0) || e.em.max_iter < 1) throw UsageError("invalid EM settings");
    if (e.restarts < 1) throw UsageError("--restarts must be >= 1");
    if (!(low_threshold > 0.0) || !(hist_width > 0.0) || dg_bins < 1) {
      throw UsageError("invalid histogram settings");
    }
  }

  nlohmann::json to_json() const {
    const auto& e = experiment;
    return {{"b", e.b},
            {"n", e.n},
            {"sigma", e.sigma},
            {"fields", e.num_fields},
            {"amplitude", e.amplitude_bound},
            {"tol", e.em.tol},
            {"max_iter", e.em.max_iter},
            {"restarts", e.restarts},
            {"seed", seed},
            {"low_threshold", low_threshold},
            {"hist_width", hist_width},
            {"dg_bins", dg_bins}};
  }
};

struct NoisyCommandResult {
  std::vector<NoisyFieldRecord> records;
  double low_fraction = 0.0;
  std::vector<HistogramBin> distortion_histogram;
  std::vector<HistogramBin> dg_histogram;
};

inline NoisyCommandResult run_noisy(const NoisyCommandConfig& cfg,
                                    unsigned threads = default_thread_count()) {
  cfg.validate();
  NoisyCommandResult out;
  out.records = noisy_experiment(cfg.experiment, derive_seed(cfg.seed, "noisy"), threads);
  out.low_fraction = low_distortion_fraction(out.records, cfg.low_threshold);
  std::vector<double> dist;
  std::vector<double> dg;
  for (const auto& r : out.records) {
    dist.push_back(r.distortion);
    dg.push_back(r.d_g);
  }
  out.distortion_histogram = histogram_fixed_width(dist, cfg.hist_width);
  out.dg_histogram = histogram_bins(dg, cfg.dg_bins);
  return out;
}

inline void write_noisy_csv(std::ostream& out, const NoisyCommandConfig& cfg,
                            std::span<const NoisyFieldRecord> records) {
  write_metadata(out, "noisy", cfg.to_json());
  out << "field_id,b,n,sigma,distortion,d_g,overlapping,iterations,converged,seed\n";
  const auto& e = cfg.experiment;
  for (const auto& r : records) {
    out << r.field_id << ',' << e.b << ',' << e.n << ',' << format_number(e.sigma) << ','
        << format_number(r.distortion) << ',' << format_number(r.d_g) << ','
        << (r.overlapping ? 1 : 0) << ',' << r.iterations << ',' << (r.converged ? 1 : 0)
        << ',' << cfg.seed << '\n';
  }
}

// -- ambiguity-demo ---------------------------------------------------------------

struct AmbiguityConfig {
  int b = 3;
  double shift = 0.3;
  int scale = 2;
  std::optional<double> theta_min;  // default: -(sum |a[k]|)
  std::optional<double> theta_max;  // default: +(sum |a[k]|)
  std::size_t theta_points = 50;
  int resolution = kDefaultLevelSetResolution;
  std::uint64_t seed = 1;
  double amplitude_bound = 1.0;
  /// Field to use instead of a random bandwidth-1 field embedded at b.
  std::optional<BandlimitedField> field;

  void validate() const {
    if (b < 1) throw UsageError("--b must be >= 1");
    if (scale < 1) throw UsageError("--scale must be a positive integer");
    if (theta_points < 1) throw UsageError("--theta-points must be >= 1");
    if (resolution < 1000) throw UsageError("--resolution must be >= 1000");
    if (!(amplitude_bound > 0.0)) throw UsageError("--amplitude must be positive");
    if (field && field->bandwidth() > b) {
      throw UsageError("field bandwidth exceeds --b");
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j = {{"b", b},
                        {"shift", shift},
                        {"scale", scale},
                        {"theta_points", theta_points},
                        {"resolution", resolution},
                        {"seed", seed},
                        {"amplitude", amplitude_bound}};
    if (theta_min) j["theta_min"] = *theta_min;
    if (theta_max) j["theta_max"] = *theta_max;
    if (field) j["field"] = field_to_json(*field);
    return j;
  }
};

struct AmbiguityRow {
  double theta;
  double measure_g;
  double measure_shift;
  double measure_flip;
  double measure_scale;

  double spread() const {
    const double lo = std::min({measure_g, measure_shift, measure_flip, measure_scale});
    const double hi = std::max({measure_g, measure_shift, measure_flip, measure_scale});
    return hi - lo;
  }
};

struct AmbiguityResult {
  BandlimitedField field;
  std::vector<AmbiguityRow> rows;
  double max_spread = 0.0;
};

/// Level-set measures of g(x), g(x - s), g(s - x) and g(m x) on a theta grid.
/// Uniformly placed sensors only see these measures, and they coincide.
inline AmbiguityResult run_ambiguity_demo(const AmbiguityConfig& cfg) {
  cfg.validate();
  BandlimitedField g = [&] {
    if (cfg.field) return embedded(*cfg.field, cfg.b);
    Rng rng = substream(derive_seed(cfg.seed, "field"), 0);
    return embedded(random_field(1, cfg.amplitude_bound, rng), cfg.b);
  }();
  if (cfg.scale * g.effective_bandwidth() > cfg.b) {
    throw UsageError("scale " + std::to_string(cfg.scale) +
                     " pushes the field beyond bandwidth " + std::to_string(cfg.b));
  }
  const double bound = g.amplitude_scale();
  const double lo = cfg.theta_min.value_or(-bound);
  const double hi = cfg.theta_max.value_or(bound);
  std::vector<double> thetas(cfg.theta_points);
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    thetas[i] = cfg.theta_points == 1
                    ? lo
                    : lo + (hi - lo) * static_cast<double>(i) /
                               static_cast<double>(cfg.theta_points - 1);
  }
  const auto m_g = level_set_profile(g, thetas, cfg.resolution);
  const auto m_shift = level_set_profile(shifted(g, cfg.shift), thetas, cfg.resolution);
  const auto m_flip = level_set_profile(flipped(g, cfg.shift), thetas, cfg.resolution);
  const auto m_scale = level_set_profile(scaled(g, cfg.scale), thetas, cfg.resolution);

  AmbiguityResult out{g, {}, 0.0};
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    out.rows.push_back({thetas[i], m_g[i], m_shift[i], m_flip[i], m_scale[i]});
    out.max_spread = std::max(out.max_spread, out.rows.back().spread());
  }
  return out;
}

inline void write_ambiguity_csv(std::ostream& out, const AmbiguityConfig& cfg,
                                const AmbiguityResult& result) {
  nlohmann::json meta = cfg.to_json();
  meta["field"] = field_to_json(result.field);
  write_metadata(out, "ambiguity-demo", meta);
  out << "theta,measure_g,measure_shift,measure_flip,measure_scale\n";
  for (const auto& r : result.rows) {
    out << format_number(r.theta) << ',' << format_number(r.measure_g) << ','
        << format_number(r.measure_shift) << ',' << format_number(r.measure_flip) << ','
        << format_number(r.measure_scale) << '\n';
  }
}

// -- exponent-check ---------------------------------------------------------------

struct SlopeEstimate {
  std::vector<CurvePoint> curve;  // every evaluated (n, e_n)
  std::vector<CurvePoint> used;   // points inside the fitting window
  double slope = std::numeric_limits<double>::quiet_NaN();
};

/// Monte Carlo error curve and its exponent. Points with e_n outside
/// (e_low, e_high) are dropped, the window is cut to the largest decade of n
/// that remains, and empirical_exponent fits the result.
inline SlopeEstimate monte_carlo_slope(const BandlimitedField& field,
                                       const SensorDistribution& dist,
                                       std::span<const std::size_t> n_values,
                                       std::size_t trials, std::uint64_t seed,
                                       double e_low = 1e-4, double e_high = 0.5,
                                       unsigned threads = default_thread_count()) {
  SlopeEstimate out;
  for (std::size_t n : n_values) {
    const auto est = monte_carlo_error(field, dist, n, trials, seed, threads);
    out.curve.push_back({static_cast<double>(n), est.e_hat});
  }
  double top = 0.0;
  for (const auto& pt : out.curve) {
    if (pt.e > e_low && pt.e < e_high) top = std::max(top, pt.n);
  }
  for (const auto& pt : out.curve) {
    if (pt.e > e_low && pt.e < e_high && pt.n >= top / 10.0) out.used.push_back(pt);
  }
  out.slope = empirical_exponent(out.used);
  return out;
}

struct ExponentCheckConfig {
  int b = 1;
  std::string law = "optimal";
  std::uint64_t seed = 1;
  bool mc_slope = false;
  std::size_t trials = 200000;
  std::size_t slope_points = 11;
  double amplitude_bound = 1.0;

  void validate() const {
    if (b < 0 || b > 5) throw UsageError("exponent-check supports 0 <= b <= 5");
    try {
      parse_law(law);
    } catch (const DomainError& e) {
      throw UsageError(e.what());
    }
    if (trials < 1) throw UsageError("--trials must be >= 1");
    if (slope_points < 3) throw UsageError("--slope-points must be >= 3");
  }

  nlohmann::json to_json() const {
    return {{"b", b},         {"law", law},       {"seed", seed},
            {"mc_slope", mc_slope}, {"trials", trials}, {"slope_points", slope_points},
            {"amplitude", amplitude_bound}};
  }
};

struct ExponentRow {
  std::string event;
  double closed_form;
  double numeric;
  double abs_diff;
  std::optional<double> monte_carlo_slope;
};

struct ExponentCheckResult {
  SensorDistribution distribution;
  std::vector<ExponentRow> rows;
  std::optional<SlopeEstimate> slope;
};

/// n grid for the slope fit: e_n ~ 2^{-D n} crosses 1e-4 near 13.3 / D.
inline std::vector<std::size_t> slope_grid(const ExponentReport& report,
                                           std::size_t points, int b) {
  const double hi = std::ceil(13.3 / report.min_exponent);
  const double lo = std::max(hi / 10.0, static_cast<double>(grid_size(b) * (b + 1)));
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(points - 1);
    const auto n = static_cast<std::size_t>(std::llround(lo + t * (hi - lo)));
    if (out.empty() || n != out.back()) out.push_back(n);
  }
  return out;
}

inline ExponentCheckResult run_exponent_check(const ExponentCheckConfig& cfg,
                                              unsigned threads = default_thread_count()) {
  cfg.validate();
  Rng law_rng = substream(derive_seed(cfg.seed, "law"), 0);
  ExponentCheckResult out{make_distribution(parse_law(cfg.law), cfg.b, law_rng), {}, {}};
  const auto& dist = out.distribution;
  const ExponentReport report = exponent_report(dist);
  constexpr double inf = std::numeric_limits<double>::infinity();

  auto diff = [](double a, double c) {
    return (std::isinf(a) && std::isinf(c) && (a > 0) == (c > 0)) ? 0.0 : std::abs(a - c);
  };
  const double zero_numeric = dist.size() < 2 ? inf : zero_event_kl_min(dist).value;
  out.rows.push_back({"N0=0", report.exponents[0], zero_numeric,
                      diff(report.exponents[0], zero_numeric), std::nullopt});
  for (std::size_t i = 1; i < dist.size(); ++i) {
    const double numeric = constrained_kl_min(dist, i - 1).value;
    out.rows.push_back({"N" + std::to_string(i - 1) + ">=N" + std::to_string(i),
                        report.exponents[i], numeric, diff(report.exponents[i], numeric),
                        std::nullopt});
  }

  if (cfg.mc_slope && std::isfinite(report.min_exponent)) {
    const BandlimitedField field = experiment_field(cfg.b, cfg.seed, cfg.amplitude_bound);
    const auto grid = slope_grid(report, cfg.slope_points, cfg.b);
    out.slope = monte_carlo_slope(field, dist, grid, cfg.trials,
                                  derive_seed(cfg.seed, "trials"), 1e-4, 0.5, threads);
    // The curve slope estimates the smallest exponent, so it is reported on
    // the events that attain it.
    for (auto& row : out.rows) {
      if (std::abs(row.closed_form - report.min_exponent) <= 1e-12 * report.min_exponent) {
        row.monte_carlo_slope = out.slope->slope;
      }
    }
  }
  return out;
}

inline void write_exponent_csv(std::ostream& out, const ExponentCheckConfig& cfg,
                               const ExponentCheckResult& result) {
  write_metadata(out, "exponent-check", cfg.to_json());
  out << "b,law,event,closed_form,numeric,abs_diff,monte_carlo_slope\n";
  for (const auto& r : result.rows) {
    out << cfg.b << ',' << cfg.law << ',' << r.event << ',' << format_number(r.closed_form)
        << ',' << format_number(r.numeric) << ',' << format_number(r.abs_diff) << ','
        << (r.monte_carlo_slope ? format_number(*r.monte_carlo_slope) : std::string()) << '\n';
  }
}

}  // namespace locfield
