#pragma once

// Reconstruction from noisy readings. With additive N(0, sigma^2) noise the
// readings follow a Gaussian mixture whose means are the grid values and
// whose weights are the placement probabilities. EM (sigma known and fixed)
// estimates both; the mean with the smallest weight goes to grid point 0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "locfield/deployment.hpp"
#include "locfield/detection.hpp"
#include "locfield/errors.hpp"
#include "locfield/field_model.hpp"
#include "locfield/parallel.hpp"
#include "locfield/random.hpp"

namespace locfield {

class NoisySampleSet {
 public:
  NoisySampleSet(int b, std::vector<double> readings, double sigma)
      : b_(b), readings_(std::move(readings)), sigma_(sigma) {
    if (!(sigma_ > 0.0)) throw InvariantError("noise sigma must be positive");
    if (readings_.size() < grid_size(b_)) {
      throw InvariantError("need at least 2b+1 noisy readings");
    }
  }

  int bandwidth() const noexcept { return b_; }
  std::span<const double> readings() const noexcept { return readings_; }
  double sigma() const noexcept { return sigma_; }
  std::size_t size() const noexcept { return readings_.size(); }

 private:
  int b_;
  std::vector<double> readings_;
  double sigma_;
};

/// n x K responsibilities, row-major. Row i is the posterior over which
/// component produced reading i.
struct MembershipMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> gamma;

  double operator()(std::size_t i, std::size_t k) const { return gamma[i * cols + k]; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(gamma).subspan(i * cols, cols);
  }
};

struct GmmEstimate {
  std::vector<double> means;    // unordered estimates of the grid values
  std::vector<double> weights;
  double sigma = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  /// Observed-data log-likelihood before each M-step, then at the final
  /// parameters.
  std::vector<double> log_likelihood;
};

inline NoisySampleSet add_noise(const SampleSet& samples, double sigma, Rng& rng) {
  if (!(sigma > 0.0)) throw DomainError("noise sigma must be positive");
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<double> out(samples.readings.begin(), samples.readings.end());
  for (double& y : out) y += noise(rng);
  return {samples.b, std::move(out), sigma};
}

/// k-means++ seeding: first center uniform over the readings, each further
/// center drawn with probability proportional to its squared distance from
/// the nearest center already chosen.
inline std::vector<double> kmeanspp_init(std::span<const double> readings,
                                         std::size_t k, Rng& rng) {
  {
    std::vector<double> distinct(readings.begin(), readings.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (k == 0 || k > distinct.size()) {
      throw DomainError("k-means++ needs 1 <= k <= number of distinct readings");
    }
  }
  const std::size_t n = readings.size();
  auto pick_index = [&](std::size_t bound) {
    return std::min(bound - 1,
                    static_cast<std::size_t>(rng.uniform01() * static_cast<double>(bound)));
  };

  std::vector<double> centers;
  centers.reserve(k);
  centers.push_back(readings[pick_index(n)]);
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = readings[i] - centers[0];
    nearest[i] = d * d;
  }
  while (centers.size() < k) {
    double total = 0.0;
    for (double d : nearest) total += d;
    const double target = rng.uniform01() * total;
    double acc = 0.0;
    std::size_t chosen = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (nearest[i] == 0.0) continue;
      acc += nearest[i];
      chosen = i;
      if (target < acc) break;
    }
    const double c = readings[chosen];
    centers.push_back(c);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = readings[i] - c;
      nearest[i] = std::min(nearest[i], d * d);
    }
  }
  return centers;
}

namespace detail {

inline double log_normal_constant(double sigma) {
  return -0.5 * std::log(2.0 * std::numbers::pi) - std::log(sigma);
}

}  // namespace detail

/// E-step. Densities are combined in log space with the row maximum
/// subtracted, so tiny sigma does not underflow. Returns the responsibilities
/// and adds the observed-data log-likelihood to `log_likelihood`.
inline MembershipMatrix e_step(std::span<const double> readings,
                               std::span<const double> means,
                               std::span<const double> weights, double sigma,
                               double* log_likelihood = nullptr) {
  const std::size_t n = readings.size();
  const std::size_t k = means.size();
  MembershipMatrix m{n, k, std::vector<double>(n * k)};
  std::vector<double> log_w(k);
  for (std::size_t j = 0; j < k; ++j) log_w[j] = std::log(weights[j]);
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  double ll = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double* row = &m.gamma[i * k];
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      const double d = readings[i] - means[j];
      row[j] = log_w[j] - d * d * inv_two_var;
      top = std::max(top, row[j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += (row[j] = std::exp(row[j] - top));
    for (std::size_t j = 0; j < k; ++j) row[j] /= sum;
    ll += top + std::log(sum);
  }
  if (log_likelihood) {
    *log_likelihood = ll + static_cast<double>(n) * detail::log_normal_constant(sigma);
  }
  return m;
}

inline double log_likelihood(std::span<const double> readings,
                             std::span<const double> means,
                             std::span<const double> weights, double sigma) {
  double ll = 0.0;
  e_step(readings, means, weights, sigma, &ll);
  return ll;
}

struct MixtureParameters {
  std::vector<double> means;
  std::vector<double> weights;
};

/// M-step with sigma held fixed: means are responsibility-weighted averages
/// (normalized by each component's total responsibility), weights are the
/// average responsibilities.
inline MixtureParameters m_step(std::span<const double> readings,
                                const MembershipMatrix& gamma,
                                std::size_t iteration = 0) {
  const std::size_t n = gamma.rows;
  const std::size_t k = gamma.cols;
  std::vector<double> mass(k, 0.0);
  std::vector<double> moment(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = gamma.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      mass[j] += row[j];
      moment[j] += row[j] * readings[i];
    }
  }
  MixtureParameters out{std::vector<double>(k), std::vector<double>(k)};
  for (std::size_t j = 0; j < k; ++j) {
    if (!(mass[j] >= 1e-12 * static_cast<double>(n))) {
      throw DegenerateComponentError(j, iteration);
    }
    out.means[j] = moment[j] / mass[j];
    out.weights[j] = mass[j] / static_cast<double>(n);
  }
  return out;
}

struct EmOptions {
  double tol = 1e-8;          // on the squared change of the mean vector
  std::size_t max_iter = 500;
};

/// Fits a K-component, fixed-variance Gaussian mixture (K = init_means.size())
/// starting from uniform weights. Stops when the squared Euclidean change of
/// the mean vector drops below tol, or after max_iter iterations with
/// converged = false.
inline GmmEstimate fit_mixture(std::span<const double> y,
                               std::span<const double> init_means, double sigma,
                               const EmOptions& options = {}) {
  if (init_means.empty()) throw DomainError("EM needs at least one initial mean");
  if (!(sigma > 0.0)) throw DomainError("noise sigma must be positive");
  if (!(options.tol > 0.0)) throw DomainError("EM tolerance must be positive");
  const std::size_t k = init_means.size();

  GmmEstimate est;
  est.sigma = sigma;
  est.means.assign(init_means.begin(), init_means.end());
  est.weights.assign(k, 1.0 / static_cast<double>(k));

  for (std::size_t it = 1; it <= options.max_iter; ++it) {
    double ll = 0.0;
    const auto gamma = e_step(y, est.means, est.weights, est.sigma, &ll);
    est.log_likelihood.push_back(ll);
    auto next = m_step(y, gamma, it);
    double change = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double d = next.means[j] - est.means[j];
      change += d * d;
    }
    est.means = std::move(next.means);
    est.weights = std::move(next.weights);
    est.iterations = it;
    if (change < options.tol) {
      est.converged = true;
      break;
    }
  }
  est.log_likelihood.push_back(log_likelihood(y, est.means, est.weights, est.sigma));
  return est;
}

/// fit_mixture with the 2b+1 components of the noisy sampling model.
inline GmmEstimate em_fit(const NoisySampleSet& samples,
                          std::span<const double> init_means,
                          const EmOptions& options = {}) {
  if (init_means.size() != grid_size(samples.bandwidth())) {
    throw DomainError("EM needs exactly 2b+1 initial means");
  }
  return fit_mixture(samples.readings(), init_means, samples.sigma(), options);
}

inline GmmEstimate em_fit(const NoisySampleSet& samples,
                          std::span<const double> init_means, double tol,
                          std::size_t max_iter) {
  return em_fit(samples, init_means, EmOptions{tol, max_iter});
}

struct Reconstruction {
  GridSamples grid;
  BandlimitedField field;
  bool tie_broken = false;
};

/// Smallest weight -> grid point 0, and so on; weights within 1e-12 of each
/// other are ordered by mean and flagged.
inline Reconstruction reconstruct_from_gmm(const GmmEstimate& est) {
  const std::size_t k = est.means.size();
  if (k == 0 || k % 2 == 0 || est.weights.size() != k) {
    throw DomainError("mixture must have 2b+1 components");
  }
  const int b = static_cast<int>((k - 1) / 2);
  std::vector<std::size_t> order(k);
  for (std::size_t j = 0; j < k; ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
    if (std::abs(est.weights[a] - est.weights[c]) > 1e-12) {
      return est.weights[a] < est.weights[c];
    }
    return est.means[a] < est.means[c];
  });
  bool tie = false;
  std::vector<double> values(k);
  for (std::size_t i = 0; i < k; ++i) {
    values[i] = est.means[order[i]];
    if (i > 0 && std::abs(est.weights[order[i]] - est.weights[order[i - 1]]) <= 1e-12) {
      tie = true;
    }
  }
  GridSamples grid(b, std::move(values));
  BandlimitedField field = coefficients_from_grid(grid);
  return {std::move(grid), std::move(field), tie};
}

struct OverlapDiagnostic {
  double d_g;        // min over i != j of (g_i - g_j)^2
  double threshold;  // 6 sigma^2
  bool overlapping;  // d_g < threshold
};

inline OverlapDiagnostic overlap_diagnostic(const GridSamples& truth, double sigma) {
  const double gap = truth.min_gap();
  const double d_g = gap * gap;
  const double threshold = 6.0 * sigma * sigma;
  return {d_g, threshold, d_g < threshold};
}

struct NoisyExperimentConfig {
  int b = 3;
  std::size_t n = 10000;
  double sigma = 0.05;
  std::size_t num_fields = 200;
  double amplitude_bound = 1.0;
  EmOptions em;
  /// Independent k-means++ seedings per field; the fit with the highest final
  /// log-likelihood is kept. 1 reproduces the single-seeding pipeline.
  std::size_t restarts = 1;
};

struct NoisyFieldRecord {
  std::size_t field_id = 0;
  double distortion = std::numeric_limits<double>::quiet_NaN();
  double d_g = 0.0;
  bool overlapping = false;
  std::size_t iterations = 0;
  bool converged = false;
  bool failed = false;  // EM broke down; distortion is NaN
  std::string error;
};

/// The whole noisy pipeline for one field, drawing everything from `rng`.
inline NoisyFieldRecord run_noisy_field(const NoisyExperimentConfig& cfg,
                                        const SensorDistribution& dist,
                                        std::size_t field_id, Rng& rng) {
  NoisyFieldRecord rec;
  rec.field_id = field_id;
  const BandlimitedField truth = random_field(cfg.b, cfg.amplitude_bound, rng);
  const GridSamples truth_grid = grid_samples(truth);
  const auto overlap = overlap_diagnostic(truth_grid, cfg.sigma);
  rec.d_g = overlap.d_g;
  rec.overlapping = overlap.overlapping;

  const SampleSet clean = draw_samples(truth, dist, cfg.n, rng);
  const NoisySampleSet noisy = add_noise(clean, cfg.sigma, rng);
  std::optional<GmmEstimate> best;
  for (std::size_t r = 0; r < std::max<std::size_t>(1, cfg.restarts); ++r) {
    try {
      const auto init = kmeanspp_init(noisy.readings(), grid_size(cfg.b), rng);
      GmmEstimate est = em_fit(noisy, init, cfg.em);
      if (!best || est.log_likelihood.back() > best->log_likelihood.back()) {
        best = std::move(est);
      }
    } catch (const DegenerateComponentError& e) {
      rec.iterations = e.iteration;
      rec.error = e.what();
    } catch (const DomainError& e) {
      rec.error = e.what();
    }
  }
  if (!best) {
    rec.failed = true;
    return rec;
  }
  rec.error.clear();
  rec.iterations = best->iterations;
  rec.converged = best->converged;
  rec.distortion = distortion(reconstruct_from_gmm(*best).field, truth);
  return rec;
}

/// Runs the noisy pipeline on cfg.num_fields random fields under the optimal
/// law. Field f draws from substream(seed, f).
inline std::vector<NoisyFieldRecord> noisy_experiment(
    const NoisyExperimentConfig& cfg, std::uint64_t seed,
    unsigned threads = default_thread_count()) {
  if (cfg.b < 0 || cfg.n < grid_size(cfg.b) || !(cfg.sigma > 0.0) ||
      cfg.num_fields == 0) {
    throw DomainError("invalid noisy experiment parameters");
  }
  const SensorDistribution dist = optimal_distribution(cfg.b);
  std::vector<NoisyFieldRecord> records(cfg.num_fields);
  parallel_for(
      cfg.num_fields,
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t f = begin; f < end; ++f) {
          Rng rng = substream(seed, f);
          records[f] = run_noisy_field(cfg, dist, f, rng);
        }
      },
      threads);
  return records;
}

/// Fraction of records with distortion below `threshold` (failures count as
/// high distortion).
inline double low_distortion_fraction(std::span<const NoisyFieldRecord> records,
                                      double threshold = 0.1) {
  if (records.empty()) return 0.0;
  std::size_t low = 0;
  for (const auto& r : records) {
    if (!r.failed && r.distortion < threshold) ++low;
  }
  return static_cast<double>(low) / static_cast<double>(records.size());
}

}  // namespace locfield
