#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "locfield/experiments.hpp"

using namespace locfield;

namespace {

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

template <typename F>
std::string capture(F&& write) {
  std::ostringstream os;
  write(os);
  return os.str();
}

}  // namespace

TEST(Format, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(3.0), "3");
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
  const double x = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_number(x)), x);
}

TEST(LogSpaced, EndpointsAndOrder) {
  const auto n = log_spaced(100, 10000, 9);
  EXPECT_EQ(n.front(), 100u);
  EXPECT_EQ(n.back(), 10000u);
  EXPECT_EQ(n.size(), 9u);
  EXPECT_EQ(n[4], 1000u);
  for (std::size_t i = 1; i < n.size(); ++i) EXPECT_GT(n[i], n[i - 1]);
  EXPECT_THROW(log_spaced(0, 10, 3), UsageError);
}

TEST(Histogram, FixedWidthAndBins) {
  const std::vector<double> v{0.05, 0.15, 0.12, 0.31, std::nan("")};
  const auto h = histogram_fixed_width(v, 0.1);
  ASSERT_EQ(h.size(), 4u);
  EXPECT_EQ(h[0].count, 1u);
  EXPECT_EQ(h[1].count, 2u);
  EXPECT_EQ(h[2].count, 0u);
  EXPECT_EQ(h[3].count, 1u);
  const auto eq = histogram_bins(v, 2);
  EXPECT_EQ(eq[0].count + eq[1].count, 4u);
  EXPECT_EQ(eq[1].right, 0.31);
}

TEST(GenField, SeedDeterminesField) {
  GenFieldConfig cfg;
  cfg.b = 4;
  cfg.seed = 3;
  EXPECT_EQ(run_gen_field(cfg), run_gen_field(cfg));
  cfg.seed = 4;
  GenFieldConfig other = cfg;
  other.seed = 5;
  EXPECT_NE(run_gen_field(cfg), run_gen_field(other));
}

TEST(ErrorSweep, SchemaAndDeterminism) {
  ErrorSweepConfig cfg;
  cfg.b = 2;
  cfg.n_values = {10, 40, 100};
  cfg.trials = 200;
  cfg.seed = 17;
  const auto rows = run_error_sweep(cfg, 2);
  ASSERT_EQ(rows.size(), 12u);
  const auto a = capture([&](std::ostream& os) { write_error_sweep_csv(os, cfg, rows); });
  const auto b = capture([&](std::ostream& os) {
    write_error_sweep_csv(os, cfg, run_error_sweep(cfg, 1));
  });
  EXPECT_EQ(a, b);
  const auto l = lines(a);
  ASSERT_EQ(l.size(), 14u);
  EXPECT_EQ(l[0].rfind("# locfield error-sweep {", 0), 0u);
  EXPECT_NE(l[0].find("\"seed\":17"), std::string::npos);
  EXPECT_EQ(l[1], "law,b,n,trials,e_hat,ci_half_width,seed");
  EXPECT_EQ(l[2].rfind("optimal,2,10,200,", 0), 0u);

  const auto plot = lines(capture([&](std::ostream& os) { write_loglog_csv(os, cfg, rows); }));
  EXPECT_EQ(plot[1], "law,n,log10_n,log10_e_hat");
}

TEST(ErrorSweep, SingleTrial) {
  ErrorSweepConfig cfg;
  cfg.b = 1;
  cfg.n_values = {5, 30, 80};
  cfg.trials = 1;
  for (const auto& row : run_error_sweep(cfg)) {
    EXPECT_TRUE(row.estimate.e_hat == 0.0 || row.estimate.e_hat == 1.0);
  }
}

TEST(ErrorSweep, RejectsUnknownLaw) {
  ErrorSweepConfig cfg;
  cfg.laws = {"optimal", "gaussian"};
  EXPECT_THROW(run_error_sweep(cfg), UsageError);
}

TEST(SampleSize, Values) {
  SampleSizeConfig cfg;
  cfg.b = 1;
  EXPECT_EQ(run_sample_size(cfg), 77);
  cfg.b = 0;
  EXPECT_EQ(run_sample_size(cfg), 1);
  cfg.epsilon = 1.0;
  EXPECT_THROW(run_sample_size(cfg), UsageError);
}

TEST(SampleSize, BoundIsSufficient) {
  for (int b : {1, 2}) {
    SampleSizeConfig size;
    size.b = b;
    ErrorSweepConfig sweep;
    sweep.b = b;
    sweep.laws = {"optimal"};
    sweep.n_values = {static_cast<std::size_t>(run_sample_size(size))};
    sweep.trials = 20000;
    const auto est = run_error_sweep(sweep).front().estimate;
    EXPECT_LE(est.e_hat, 0.01 + 1.96 * std::sqrt(0.01 * 0.99 / 20000.0)) << b;
  }
}

TEST(ThresholdSearch, BelowSufficientBound) {
  ThresholdConfig cfg;
  cfg.b = 1;
  const auto r = run_threshold_search(cfg);
  EXPECT_TRUE(r.found) << r.warning;
  EXPECT_LT(r.n_star, 77u);
  EXPECT_GE(r.estimate.e_hat, 0.009);
  EXPECT_LE(r.estimate.e_hat, 0.011);
  const auto again = run_threshold_search(cfg);
  EXPECT_EQ(again.n_star, r.n_star);
  EXPECT_EQ(again.history.size(), r.history.size());
}

TEST(ThresholdSearch, GrowsWithBandwidth) {
  ThresholdConfig cfg;
  cfg.trials = 1000;
  const std::vector<int> bs{3, 5, 10};
  const auto runs = run_threshold_search(cfg, bs);
  ASSERT_EQ(runs.size(), 3u);
  for (std::size_t i = 1; i < runs.size(); ++i) {
    EXPECT_GT(runs[i].result.n_star, runs[i - 1].result.n_star);
  }
  const auto csv = lines(capture([&](std::ostream& os) {
    write_threshold_history_csv(os, cfg.to_json(), runs);
  }));
  EXPECT_EQ(csv[1], "b,step,n,e_hat,ci_half_width,in_band");
}

TEST(ThresholdSearch, BudgetExhaustionWarns) {
  ThresholdConfig cfg;
  cfg.b = 2;
  cfg.trials = 100;
  // With 100 trials e_hat moves in steps of 0.01 and can never land in the band.
  cfg.target = 0.015;
  cfg.tolerance = 1e-4;
  cfg.max_evaluations = 4;
  const auto r = run_threshold_search(cfg);
  EXPECT_FALSE(r.found);
  EXPECT_FALSE(r.warning.empty());
  EXPECT_EQ(r.history.size(), 4u);
}

TEST(Ambiguity, CosineAtZeroAndSaturation) {
  AmbiguityConfig cfg;
  cfg.b = 2;
  cfg.field = BandlimitedField(1, {{0.5, 0.0}, {0.0, 0.0}, {0.5, 0.0}});
  cfg.theta_min = 0.0;
  cfg.theta_max = 2.0;
  cfg.theta_points = 2;
  const auto r = run_ambiguity_demo(cfg);
  for (double m : {r.rows[0].measure_g, r.rows[0].measure_shift, r.rows[0].measure_flip,
                   r.rows[0].measure_scale}) {
    EXPECT_NEAR(m, 0.5, 2e-5);
  }
  EXPECT_EQ(r.rows[1].measure_g, 1.0);
  EXPECT_EQ(r.rows[1].measure_scale, 1.0);
}

TEST(Ambiguity, RandomFieldWitness) {
  for (int m : {2, 3}) {
    AmbiguityConfig cfg;
    cfg.scale = m;
    cfg.seed = 40 + static_cast<std::uint64_t>(m);
    const auto r = run_ambiguity_demo(cfg);
    EXPECT_EQ(r.rows.size(), 50u);
    EXPECT_LE(r.max_spread * 1e5, 2.0 + 1e-9);
    const auto csv = lines(capture([&](std::ostream& os) { write_ambiguity_csv(os, cfg, r); }));
    EXPECT_EQ(csv[1], "theta,measure_g,measure_shift,measure_flip,measure_scale");
  }
}

TEST(Ambiguity, ScaleBeyondBandwidthIsUsageError) {
  AmbiguityConfig cfg;
  cfg.scale = 4;
  EXPECT_THROW(run_ambiguity_demo(cfg), UsageError);
}

TEST(ExponentCheck, OptimalBandwidthOne) {
  ExponentCheckConfig cfg;
  const auto r = run_exponent_check(cfg);
  ASSERT_EQ(r.rows.size(), 3u);
  for (const auto& row : r.rows) {
    EXPECT_NEAR(row.closed_form, std::log2(14.0 / 13.0), 1e-12);
    EXPECT_NEAR(row.numeric, std::log2(14.0 / 13.0), 1e-4);
  }
  const auto csv = lines(capture([&](std::ostream& os) { write_exponent_csv(os, cfg, r); }));
  EXPECT_EQ(csv[1], "b,law,event,closed_form,numeric,abs_diff,monte_carlo_slope");
  EXPECT_EQ(csv[2].rfind("1,optimal,N0=0,", 0), 0u);
}

TEST(ExponentCheck, BandwidthZero) {
  ExponentCheckConfig cfg;
  cfg.b = 0;
  const auto r = run_exponent_check(cfg);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_TRUE(std::isinf(r.rows[0].closed_form));
  EXPECT_TRUE(std::isinf(r.rows[0].numeric));
  EXPECT_EQ(r.rows[0].abs_diff, 0.0);
  cfg.b = 6;
  EXPECT_THROW(run_exponent_check(cfg), UsageError);
}

TEST(Noisy, OutputsAndDeterminism) {
  NoisyCommandConfig cfg;
  cfg.experiment.b = 1;
  cfg.experiment.n = 600;
  cfg.experiment.num_fields = 10;
  cfg.seed = 5;
  const auto a = run_noisy(cfg, 2);
  const auto b = run_noisy(cfg, 1);
  const auto csv_a = capture([&](std::ostream& os) { write_noisy_csv(os, cfg, a.records); });
  const auto csv_b = capture([&](std::ostream& os) { write_noisy_csv(os, cfg, b.records); });
  EXPECT_EQ(csv_a, csv_b);
  const auto l = lines(csv_a);
  ASSERT_EQ(l.size(), 12u);
  EXPECT_EQ(l[1], "field_id,b,n,sigma,distortion,d_g,overlapping,iterations,converged,seed");
  std::size_t total = 0;
  for (const auto& bin : a.distortion_histogram) total += bin.count;
  std::size_t failed = 0;
  for (const auto& r : a.records) failed += r.failed ? 1 : 0;
  EXPECT_EQ(total + failed, 10u);
  const auto hist = lines(capture([&](std::ostream& os) {
    write_histogram_csv(os, "noisy-distortion-histogram", cfg.to_json(), a.distortion_histogram);
  }));
  EXPECT_EQ(hist[1], "bin_left,bin_right,count");
}
