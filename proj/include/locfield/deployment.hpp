#pragma once

// Sensor placement laws over the 2b+1 grid points and their error exponents.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "locfield/errors.hpp"
#include "locfield/field_model.hpp"
#include "locfield/random.hpp"

namespace locfield {

inline constexpr double kDistributionSumTolerance = 1e-12;

/// Probabilities p_0 < p_1 < ... < p_{2b} of a sensor landing on grid point
/// i / (2b+1). The strict order is what lets the detector tell locations
/// apart by how often their value shows up.
class SensorDistribution {
 public:
  SensorDistribution(int b, std::vector<double> p, std::string law = "custom")
      : b_(b), p_(std::move(p)), law_(std::move(law)) {
    if (b_ < 0) throw InvariantError("bandwidth parameter must be >= 0");
    if (p_.size() != grid_size(b_)) {
      throw InvariantError("expected " + std::to_string(grid_size(b_)) +
                           " probabilities, got " + std::to_string(p_.size()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < p_.size(); ++i) {
      if (!(p_[i] > 0.0)) throw InvariantError("probabilities must be positive");
      if (i > 0 && !(p_[i] > p_[i - 1])) {
        throw InvariantError("probabilities must be strictly increasing");
      }
      sum += p_[i];
    }
    if (std::abs(sum - 1.0) > kDistributionSumTolerance) {
      throw InvariantError("probabilities must sum to 1");
    }
    cdf_.resize(p_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < p_.size(); ++i) cdf_[i] = (acc += p_[i]);
  }

  int bandwidth() const noexcept { return b_; }
  std::size_t size() const noexcept { return p_.size(); }
  std::span<const double> probabilities() const noexcept { return p_; }
  double operator[](std::size_t i) const { return p_.at(i); }
  const std::string& law() const noexcept { return law_; }

  /// Cumulative sums of p; the last entry is the rounded total.
  std::span<const double> cdf() const noexcept { return cdf_; }

 private:
  int b_;
  std::vector<double> p_;
  std::string law_;
  std::vector<double> cdf_;
};

/// Normalizes positive weights into a SensorDistribution.
inline SensorDistribution from_weights(int b, std::vector<double> w,
                                       std::string law) {
  double total = 0.0;
  for (double x : w) total += x;
  for (double& x : w) x /= total;
  return {b, std::move(w), std::move(law)};
}

/// p_i = 3 (i+1)^2 / ((b+1)(2b+1)(4b+3)): equal spacing of sqrt(p_i), which
/// maximizes the smallest error exponent of the frequency-order detector.
inline SensorDistribution optimal_distribution(int b) {
  if (b < 0) throw DomainError("bandwidth parameter must be >= 0");
  const double denom = static_cast<double>(b + 1) * (2.0 * b + 1.0) * (4.0 * b + 3.0);
  std::vector<double> p(grid_size(b));
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double k = static_cast<double>(i + 1);
    p[i] = 3.0 * k * k / denom;
  }
  return {b, std::move(p), "optimal"};
}

inline SensorDistribution linear_distribution(int b) {
  if (b < 0) throw DomainError("bandwidth parameter must be >= 0");
  std::vector<double> w(grid_size(b));
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<double>(i + 1);
  return from_weights(b, std::move(w), "linear");
}

inline SensorDistribution cubic_distribution(int b) {
  if (b < 0) throw DomainError("bandwidth parameter must be >= 0");
  std::vector<double> w(grid_size(b));
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double k = static_cast<double>(i + 1);
    w[i] = k * k * k;
  }
  return from_weights(b, std::move(w), "cubic");
}

/// Sorted i.i.d. uniform(0,1) draws, normalized. Draws with a zero or a tie
/// are thrown away whole and redrawn.
inline SensorDistribution random_ordered_distribution(int b, Rng& rng) {
  if (b < 0) throw DomainError("bandwidth parameter must be >= 0");
  std::vector<double> w(grid_size(b));
  for (;;) {
    for (double& x : w) x = rng.uniform01();
    std::sort(w.begin(), w.end());
    bool ok = w.front() > 0.0;
    for (std::size_t i = 1; ok && i < w.size(); ++i) ok = w[i] > w[i - 1];
    if (!ok) continue;
    double total = 0.0;
    for (double x : w) total += x;
    std::vector<double> p(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) p[i] = w[i] / total;
    // Normalization can in principle collapse adjacent values.
    ok = true;
    for (std::size_t i = 1; ok && i < p.size(); ++i) ok = p[i] > p[i - 1];
    if (ok) return {b, std::move(p), "random"};
  }
}

enum class Law { optimal, linear, cubic, random };

inline constexpr std::string_view law_name(Law law) noexcept {
  switch (law) {
    case Law::optimal: return "optimal";
    case Law::linear: return "linear";
    case Law::cubic: return "cubic";
    case Law::random: return "random";
  }
  return "unknown";
}

inline Law parse_law(std::string_view name) {
  if (name == "optimal") return Law::optimal;
  if (name == "linear") return Law::linear;
  if (name == "cubic") return Law::cubic;
  if (name == "random") return Law::random;
  throw DomainError("unknown law '" + std::string(name) + "'");
}

/// Builds the named law; `rng` is only consumed by Law::random.
inline SensorDistribution make_distribution(Law law, int b, Rng& rng) {
  switch (law) {
    case Law::optimal: return optimal_distribution(b);
    case Law::linear: return linear_distribution(b);
    case Law::cubic: return cubic_distribution(b);
    case Law::random: return random_ordered_distribution(b, rng);
  }
  throw DomainError("unknown law");
}

/// Per-event exponents (bits per sample) of the detector's failure events.
/// Event 0 is {N_0 = 0}; event i >= 1 is {N_{i-1} >= N_i}.
struct ExponentReport {
  std::vector<double> d;          // d_0 = sqrt(p_0), d_i = sqrt(p_i) - sqrt(p_{i-1})
  double d_min = 0.0;
  std::vector<double> exponents;  // log2(1 / (1 - d_i^2)), +inf when d_i = 1
  double min_exponent = 0.0;
};

/// Exponent of an event whose gap is `d`: log2(1 / (1 - d^2)).
inline double gap_exponent(double d) {
  const double tail = 1.0 - d * d;
  if (tail <= 0.0) return std::numeric_limits<double>::infinity();
  return -std::log2(tail);
}

inline ExponentReport exponent_report(const SensorDistribution& dist) {
  ExponentReport report;
  const auto p = dist.probabilities();
  report.d.resize(p.size());
  report.exponents.resize(p.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double root = std::sqrt(p[i]);
    report.d[i] = root - prev;
    prev = root;
  }
  // {N_0 = 0} has probability exactly (1 - p_0)^n, so its exponent is
  // -log2(1 - p_0); with d_0^2 = p_0 it has the same form as the pair events.
  report.exponents[0] = p[0] >= 1.0 ? std::numeric_limits<double>::infinity()
                                     : -std::log2(1.0 - p[0]);
  for (std::size_t i = 1; i < p.size(); ++i) {
    report.exponents[i] = gap_exponent(report.d[i]);
  }
  report.d_min = *std::min_element(report.d.begin(), report.d.end());
  report.min_exponent =
      *std::min_element(report.exponents.begin(), report.exponents.end());
  return report;
}

/// Smallest n with (2b+1)(1 - d_min^2)^n <= epsilon.
inline long long required_samples(int b, double d_min, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw DomainError("epsilon must lie in (0, 1)");
  }
  const double tail = 1.0 - d_min * d_min;
  if (tail <= 0.0) return 1;
  const double n = (std::log(epsilon) - std::log(static_cast<double>(grid_size(b)))) /
                   std::log(tail);
  return std::max(1LL, static_cast<long long>(std::ceil(n)));
}

inline long long required_samples(const SensorDistribution& dist, double epsilon) {
  return required_samples(dist.bandwidth(), exponent_report(dist).d_min, epsilon);
}

/// Grid index i with probability p_i (inverse CDF).
inline std::size_t sample_location(const SensorDistribution& dist, Rng& rng) {
  const auto cdf = dist.cdf();
  const double u = rng.uniform01() * cdf.back();
  for (std::size_t i = 0; i + 1 < cdf.size(); ++i) {
    if (u < cdf[i]) return i;
  }
  return cdf.size() - 1;
}

}  // namespace locfield
