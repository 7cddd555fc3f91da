#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "locfield/noisy_em.hpp"

using namespace locfield;

TEST(AddNoise, TinySigmaAndVariance) {
  Rng rng(1);
  const auto truth = random_field(2, 1.0, rng);
  const auto clean = draw_samples(truth, optimal_distribution(2), 100000, rng);

  const auto tiny = add_noise(clean, 1e-12, rng);
  for (std::size_t i = 0; i < clean.size(); ++i) {
    ASSERT_NEAR(tiny.readings()[i], clean.readings[i], 1e-10);
  }

  const double sigma = 0.05;
  const auto noisy = add_noise(clean, sigma, rng);
  double mean = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) mean += noisy.readings()[i] - clean.readings[i];
  mean /= static_cast<double>(clean.size());
  double var = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double d = noisy.readings()[i] - clean.readings[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(clean.size() - 1);
  EXPECT_NEAR(var, sigma * sigma, 0.05 * sigma * sigma);
  EXPECT_EQ(noisy.sigma(), sigma);
}

TEST(AddNoise, Deterministic) {
  Rng f(2);
  const auto truth = random_field(1, 1.0, f);
  const auto clean = draw_samples(truth, optimal_distribution(1), 100, f);
  Rng a(3);
  Rng b(3);
  const auto x = add_noise(clean, 0.1, a);
  const auto y = add_noise(clean, 0.1, b);
  EXPECT_TRUE(std::equal(x.readings().begin(), x.readings().end(), y.readings().begin()));
  EXPECT_THROW(add_noise(clean, 0.0, a), DomainError);
}

TEST(NoisySampleSet, Invariants) {
  EXPECT_THROW(NoisySampleSet(1, {0.1, 0.2}, 0.1), InvariantError);
  EXPECT_THROW(NoisySampleSet(1, {0.1, 0.2, 0.3}, 0.0), InvariantError);
}

TEST(KMeansPlusPlus, Cases) {
  Rng rng(4);
  const std::vector<double> y{0.5, -1.0, 2.0, 3.5, 0.25};
  const auto one = kmeanspp_init(y, 1, rng);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_NE(std::find(y.begin(), y.end(), one[0]), y.end());

  auto all = kmeanspp_init(y, y.size(), rng);
  auto sorted = y;
  std::sort(all.begin(), all.end());
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(all, sorted);

  const std::vector<double> dup{1.0, 1.0, 2.0};
  EXPECT_THROW(kmeanspp_init(dup, 3, rng), DomainError);

  std::vector<double> many;
  for (int i = 0; i < 300; ++i) many.push_back(std::sin(i * 0.37));
  for (int t = 0; t < 20; ++t) {
    for (double c : kmeanspp_init(many, 7, rng)) {
      ASSERT_NE(std::find(many.begin(), many.end(), c), many.end());
    }
  }
}

TEST(EmFit, SingleComponentIsSampleMean) {
  const NoisySampleSet s(0, {1.0, 1.2, 0.7, 1.1}, 0.1);
  const std::vector<double> init{0.0};
  const auto est = em_fit(s, init);
  EXPECT_NEAR(est.means[0], 1.0, 1e-15);
  EXPECT_EQ(est.weights[0], 1.0);
  EXPECT_TRUE(est.converged);
  EXPECT_EQ(est.iterations, 2u);  // one update, then a confirming zero step
}

TEST(EmFit, TwoSeparatedComponents) {
  Rng rng(5);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> y;
  for (int i = 0; i < 2000; ++i) y.push_back((rng.uniform01() < 0.3 ? -10.0 : 10.0) + noise(rng));
  const std::vector<double> init{-9.0, 9.0};
  const auto est = fit_mixture(y, init, 0.05);
  EXPECT_NEAR(est.means[0], -10.0, 0.01);
  EXPECT_NEAR(est.means[1], 10.0, 0.01);
  EXPECT_NEAR(est.weights[0], 0.3, 0.05);
  EXPECT_NEAR(est.weights[1], 0.7, 0.05);
  EXPECT_EQ(est.sigma, 0.05);
}

TEST(EmFit, WrongComponentCount) {
  const NoisySampleSet s(1, {1.0, 1.2, 0.7}, 0.1);
  const std::vector<double> init{0.0, 1.0};
  EXPECT_THROW(em_fit(s, init), DomainError);
}

TEST(EmFit, DegenerateComponentReportsIteration) {
  const NoisySampleSet s(1, {0.0, 0.01, -0.01, 0.02}, 0.01);
  const std::vector<double> init{0.0, 50.0, 100.0};
  try {
    em_fit(s, init);
    FAIL() << "expected a degenerate component";
  } catch (const DegenerateComponentError& e) {
    EXPECT_EQ(e.iteration, 1u);
    EXPECT_GE(e.component, 1u);
  }
}

TEST(EmFit, IterationCapReportsNotConverged) {
  Rng rng(6);
  const auto truth = random_field(2, 1.0, rng);
  const auto noisy = add_noise(draw_samples(truth, optimal_distribution(2), 3000, rng), 0.2, rng);
  const auto init = kmeanspp_init(noisy.readings(), 5, rng);
  const auto est = em_fit(noisy, init, 1e-30, 3);
  EXPECT_FALSE(est.converged);
  EXPECT_EQ(est.iterations, 3u);
}

TEST(Properties, EmLikelihoodMonotoneAndNormalized) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const int b = 1 + trial % 3;
    const auto truth = random_field(b, 1.0, rng);
    const auto noisy =
        add_noise(draw_samples(truth, optimal_distribution(b), 2000, rng), 0.05, rng);
    const auto init = kmeanspp_init(noisy.readings(), grid_size(b), rng);
    const auto est = em_fit(noisy, init);
    for (std::size_t i = 1; i < est.log_likelihood.size(); ++i) {
      ASSERT_GE(est.log_likelihood[i], est.log_likelihood[i - 1] - 1e-9) << i;
    }
    double wsum = 0.0;
    for (double w : est.weights) {
      ASSERT_GE(w, 0.0);
      wsum += w;
    }
    ASSERT_NEAR(wsum, 1.0, 1e-9);
    ASSERT_EQ(est.sigma, 0.05);

    const auto gamma = e_step(noisy.readings(), est.means, est.weights, est.sigma);
    for (std::size_t i = 0; i < gamma.rows; ++i) {
      double s = 0.0;
      for (double g : gamma.row(i)) {
        ASSERT_GE(g, 0.0);
        s += g;
      }
      ASSERT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(EStep, TinySigmaDoesNotUnderflow) {
  const std::vector<double> y{0.0, 1.0, 5.0};
  const std::vector<double> means{0.0, 1.0, 2.0};
  const std::vector<double> weights{0.2, 0.3, 0.5};
  const auto gamma = e_step(y, means, weights, 1e-9);
  EXPECT_EQ(gamma(0, 0), 1.0);
  EXPECT_EQ(gamma(1, 1), 1.0);
  EXPECT_EQ(gamma(2, 2), 1.0);
}

TEST(Reconstruction, ExampleOneWeights) {
  GmmEstimate est;
  est.means = {0.14, 1.06, 1.80};
  est.weights = {27.0 / 42, 3.0 / 42, 12.0 / 42};
  const auto r = reconstruct_from_gmm(est);
  EXPECT_EQ(r.grid.values()[0], 1.06);
  EXPECT_EQ(r.grid.values()[1], 1.80);
  EXPECT_EQ(r.grid.values()[2], 0.14);
  EXPECT_FALSE(r.tie_broken);
}

TEST(Reconstruction, BandwidthZeroAndTies) {
  GmmEstimate single;
  single.means = {0.4};
  single.weights = {1.0};
  const auto r = reconstruct_from_gmm(single);
  EXPECT_NEAR(evaluate(r.field, 0.3), 0.4, 1e-15);

  GmmEstimate tie;
  tie.means = {0.9, 0.2, 0.5};
  tie.weights = {0.25, 0.25, 0.5};
  const auto t = reconstruct_from_gmm(tie);
  EXPECT_TRUE(t.tie_broken);
  EXPECT_EQ(t.grid.values()[0], 0.2);
  EXPECT_EQ(t.grid.values()[1], 0.9);
}

TEST(Reconstruction, NoiselessLimit) {
  Rng rng(8);
  const auto truth = random_field(1, 1.0, rng);
  const auto noisy = add_noise(draw_samples(truth, optimal_distribution(1), 5000, rng), 1e-9, rng);
  const auto init = kmeanspp_init(noisy.readings(), 3, rng);
  const auto est = em_fit(noisy, init);
  EXPECT_LT(distortion(reconstruct_from_gmm(est).field, truth), 1e-6);
}

TEST(Overlap, Diagnostics) {
  const auto simple = overlap_diagnostic(GridSamples(1, {0.0, 1.0, 2.0}), 0.05);
  EXPECT_DOUBLE_EQ(simple.d_g, 1.0);
  EXPECT_NEAR(simple.threshold, 0.015, 1e-15);
  EXPECT_FALSE(simple.overlapping);

  const auto example = overlap_diagnostic(GridSamples(1, {1.06, 1.80, 0.14}), 0.05);
  EXPECT_NEAR(example.d_g, 0.5476, 1e-12);

  EXPECT_TRUE(overlap_diagnostic(GridSamples(1, {0.0, 0.1, 1.0}), 0.05).overlapping);
}

TEST(NoisyExperiment, NoiselessLimitAllLow) {
  NoisyExperimentConfig cfg;
  cfg.b = 2;
  cfg.n = 3000;
  cfg.sigma = 1e-9;
  cfg.num_fields = 20;
  const auto records = noisy_experiment(cfg, 9);
  EXPECT_GE(low_distortion_fraction(records), 0.95);
}

TEST(NoisyExperiment, OverlappingFieldsDistortMore) {
  NoisyExperimentConfig cfg;
  cfg.b = 3;
  cfg.n = 3000;
  cfg.num_fields = 200;
  const auto records = noisy_experiment(cfg, 10);
  double over = 0.0;
  double clear = 0.0;
  std::size_t n_over = 0;
  std::size_t n_clear = 0;
  for (const auto& r : records) {
    const double d = r.failed ? 1.0 : std::min(r.distortion, 10.0);
    if (r.overlapping) {
      over += d;
      ++n_over;
    } else {
      clear += d;
      ++n_clear;
    }
  }
  ASSERT_GT(n_over, 0u);
  ASSERT_GT(n_clear, 0u);
  EXPECT_GT(over / n_over, clear / n_clear);
}

TEST(NoisyExperiment, DeterministicAcrossThreads) {
  NoisyExperimentConfig cfg;
  cfg.b = 1;
  cfg.n = 500;
  cfg.num_fields = 8;
  const auto one = noisy_experiment(cfg, 11, 1);
  const auto three = noisy_experiment(cfg, 11, 3);
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_TRUE(one[i].distortion == three[i].distortion ||
                (std::isnan(one[i].distortion) && std::isnan(three[i].distortion)));
    EXPECT_EQ(one[i].iterations, three[i].iterations);
  }
}

TEST(Properties, LowDistortionFractionFallsWithBandwidth) {
  NoisyExperimentConfig cfg;
  cfg.n = 5000;
  cfg.num_fields = 60;
  double prev = 1.0;
  for (int b : {3, 5, 10}) {
    cfg.b = b;
    const double frac = low_distortion_fraction(noisy_experiment(cfg, 12));
    EXPECT_LE(frac, prev) << "b=" << b;
    prev = frac;
  }
}
