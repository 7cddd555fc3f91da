#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "locfield/sanov.hpp"

using namespace locfield;

namespace {

double closed_form(const SensorDistribution& dist, std::size_t i) {
  const double d = std::sqrt(dist[i + 1]) - std::sqrt(dist[i]);
  return std::log2(1.0 / (1.0 - d * d));
}

}  // namespace

TEST(KlDivergence, BasicValues) {
  const auto p = optimal_distribution(1);
  EXPECT_EQ(kl_divergence(SimplexPoint({3.0 / 42, 12.0 / 42, 27.0 / 42}), p), 0.0);
  const std::vector<double> q{1.0, 0.0};
  const std::vector<double> coin{0.5, 0.5};
  EXPECT_DOUBLE_EQ(kl_divergence(q, coin), 1.0);
  const std::vector<double> zero_p{0.0, 1.0};
  const std::vector<double> half{0.5, 0.5};
  EXPECT_TRUE(std::isinf(kl_divergence(half, zero_p)));
}

TEST(KlDivergence, ClosedFormStationaryPoint) {
  const auto p = optimal_distribution(1);
  const double z = 1.0 - std::pow(std::sqrt(p[1]) - std::sqrt(p[0]), 2);
  const double shared = std::sqrt(p[0] * p[1]) / z;
  const SimplexPoint q({shared, shared, p[2] / z});
  EXPECT_NEAR(kl_divergence(q, p), std::log2(1.0 / z), 1e-10);
}

TEST(SimplexPoint, Invariants) {
  EXPECT_THROW(SimplexPoint({0.5, 0.6}), InvariantError);
  EXPECT_THROW(SimplexPoint({-0.1, 1.1}), InvariantError);
  EXPECT_THROW(SimplexPoint({}), InvariantError);
}

TEST(Properties, GibbsInequality) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> q(5);
    std::vector<double> p(5);
    double sq = 0.0;
    double sp = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      sq += (q[i] = rng.uniform01());
      sp += (p[i] = rng.uniform01() + 1e-3);
    }
    for (std::size_t i = 0; i < 5; ++i) {
      q[i] /= sq;
      p[i] /= sp;
    }
    EXPECT_GT(kl_divergence(q, p), 0.0);
    EXPECT_NEAR(kl_divergence(p, p), 0.0, 1e-15);
  }
}

TEST(ConstrainedKl, OptimalBandwidthOne) {
  const auto p = optimal_distribution(1);
  const auto m = constrained_kl_min(p, 0);
  EXPECT_NEAR(m.value, std::log2(14.0 / 13.0), 1e-4);
  EXPECT_NEAR(m.q[0], m.q[1], 1e-6);
  EXPECT_THROW(constrained_kl_min(p, 2), DomainError);
}

TEST(Properties, ClosedFormExponentsUpToBandwidthFive) {
  Rng rng(19);
  for (int b = 1; b <= 5; ++b) {
    for (Law law : {Law::optimal, Law::linear, Law::cubic, Law::random}) {
      const auto dist = make_distribution(law, b, rng);
      for (std::size_t i = 0; i + 1 < dist.size(); ++i) {
        ASSERT_NEAR(constrained_kl_min(dist, i).value, closed_form(dist, i), 1e-4)
            << "b=" << b << " law=" << law_name(law) << " event=" << i;
      }
    }
  }
}

TEST(Properties, MinimumCertificateOnProbes) {
  Rng rng(23);
  const auto dist = cubic_distribution(2);
  for (std::size_t event = 0; event + 1 < dist.size(); ++event) {
    const double best = constrained_kl_min(dist, event).value;
    for (int probe = 0; probe < 2000; ++probe) {
      std::vector<double> q(dist.size());
      double s = 0.0;
      for (auto& x : q) s += (x = -std::log(1.0 - rng.uniform01()));
      for (auto& x : q) x /= s;
      if (q[event + 1] > q[event]) std::swap(q[event], q[event + 1]);
      ASSERT_LE(best, kl_divergence(q, dist.probabilities()) + 1e-12);
    }
  }
}

TEST(ZeroEvent, MatchesClosedForm) {
  Rng rng(29);
  for (int b = 1; b <= 5; ++b) {
    for (Law law : {Law::optimal, Law::linear, Law::cubic, Law::random}) {
      const auto dist = make_distribution(law, b, rng);
      const auto m = zero_event_kl_min(dist);
      EXPECT_EQ(m.q[0], 0.0);
      EXPECT_NEAR(m.value, -std::log2(1.0 - dist[0]), 1e-4);
    }
  }
}

TEST(EmpiricalExponent, ExactExponential) {
  std::vector<CurvePoint> curve;
  for (int n = 10; n <= 100; n += 10) curve.push_back({double(n), std::exp2(-0.1 * n)});
  EXPECT_NEAR(empirical_exponent(curve), 0.1, 1e-12);
}

TEST(EmpiricalExponent, DegenerateCurves) {
  const std::vector<CurvePoint> ones{{10, 1.0}, {20, 1.0}, {30, 1.0}};
  EXPECT_THROW(empirical_exponent(ones), EstimationError);
  const std::vector<CurvePoint> zeros{{10, 0.5}, {20, 0.0}, {30, 0.0}};
  EXPECT_THROW(empirical_exponent(zeros), EstimationError);
}

TEST(GoldenSection, FindsInteriorAndBoundaryMinima) {
  EXPECT_NEAR(golden_section_minimize([](double x) { return (x - 0.3) * (x - 0.3); }, 0, 1),
              0.3, 1e-7);
  EXPECT_EQ(golden_section_minimize([](double x) { return x; }, 0.2, 1), 0.2);
}
