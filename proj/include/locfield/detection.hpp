#pragma once

// Noiseless detection: readings are grid values at unknown locations. Equal
// readings are grouped into (value, type) pairs and the value seen least
// often is assigned to grid point 0, the next to grid point 1, and so on.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "locfield/deployment.hpp"
#include "locfield/errors.hpp"
#include "locfield/field_model.hpp"
#include "locfield/parallel.hpp"
#include "locfield/random.hpp"

namespace locfield {

struct SampleSet {
  int b = 0;
  std::vector<double> readings;

  std::size_t size() const noexcept { return readings.size(); }
};

/// One distinct reading and how many times it occurred.
struct TypedValue {
  double value;
  std::size_t type;

  friend bool operator==(const TypedValue&, const TypedValue&) = default;
};

struct TypeClustering {
  std::vector<TypedValue> pairs;  // ascending by value

  std::size_t total() const noexcept {
    std::size_t n = 0;
    for (const auto& p : pairs) n += p.type;
    return n;
  }
};

/// Values assigned to grid points 0..2b by ascending type.
struct LocationAssignment {
  std::vector<double> values;  // empty unless complete
  bool complete = false;
  bool tie_broken = false;
};

struct DetectionOutcome {
  std::optional<GridSamples> assigned;
  bool correct = false;
  bool complete = false;
  bool tie_broken = false;
};

/// Fills `out` with n readings g(x_I), I ~ dist, reusing its storage.
inline void draw_samples_into(const GridSamples& grid, const SensorDistribution& dist,
                              std::size_t n, Rng& rng, std::vector<double>& out) {
  out.resize(n);
  const auto values = grid.values();
  for (auto& r : out) r = values[sample_location(dist, rng)];
}

inline SampleSet draw_samples(const BandlimitedField& field,
                              const SensorDistribution& dist, std::size_t n,
                              Rng& rng) {
  if (field.bandwidth() != dist.bandwidth()) {
    throw DomainError("field and distribution disagree on bandwidth");
  }
  if (n < 1) throw DomainError("need at least one sample");
  SampleSet set{field.bandwidth(), {}};
  draw_samples_into(grid_samples(field), dist, n, rng, set.readings);
  return set;
}

/// Groups readings by exact (bitwise) equality. Noiseless readings from one
/// location are produced by the same computation, so they are bit-identical.
inline TypeClustering cluster_readings(std::span<const double> readings, int b) {
  const std::size_t limit = grid_size(b);
  std::vector<std::uint64_t> keys;
  std::vector<TypedValue> pairs;
  keys.reserve(limit);
  pairs.reserve(limit);
  for (double r : readings) {
    const auto key = std::bit_cast<std::uint64_t>(r);
    std::size_t j = 0;
    while (j < keys.size() && keys[j] != key) ++j;
    if (j == keys.size()) {
      if (keys.size() == limit) {
        throw ModelViolationError(
            "more distinct readings than grid points; noise in noiseless data?");
      }
      keys.push_back(key);
      pairs.push_back({r, 0});
    }
    ++pairs[j].type;
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const TypedValue& a, const TypedValue& b) { return a.value < b.value; });
  return {std::move(pairs)};
}

inline TypeClustering cluster_by_value(const SampleSet& samples) {
  return cluster_readings(samples.readings, samples.b);
}

/// Smallest type -> grid point 0, and so on. Equal types are ordered by
/// ascending value and flagged.
inline LocationAssignment assign_locations(const TypeClustering& clusters, int b) {
  LocationAssignment out;
  if (clusters.pairs.size() < grid_size(b)) return out;
  auto pairs = clusters.pairs;
  std::sort(pairs.begin(), pairs.end(), [](const TypedValue& x, const TypedValue& y) {
    return x.type != y.type ? x.type < y.type : x.value < y.value;
  });
  out.complete = true;
  out.values.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (i > 0 && pairs[i].type == pairs[i - 1].type) out.tie_broken = true;
    out.values.push_back(pairs[i].value);
  }
  return out;
}

/// Scores an assignment against the true grid values (exact comparison).
/// Detection succeeds only on a strict count order 0 < N_0 < ... < N_{2b}, so
/// an assignment that needed a tie-break is an error even if the guess
/// happens to match.
inline DetectionOutcome score_assignment(const LocationAssignment& assignment,
                                         const GridSamples& truth) {
  DetectionOutcome outcome;
  outcome.complete = assignment.complete;
  outcome.tie_broken = assignment.tie_broken;
  if (!assignment.complete) return outcome;
  outcome.assigned.emplace(truth.bandwidth(), assignment.values);
  outcome.correct = !assignment.tie_broken &&
                    std::equal(assignment.values.begin(), assignment.values.end(),
                               truth.values().begin(), truth.values().end());
  return outcome;
}

inline DetectionOutcome detect_outcome(const SampleSet& samples,
                                       const GridSamples& truth) {
  return score_assignment(assign_locations(cluster_by_value(samples), samples.b),
                          truth);
}

/// Cluster, assign, invert. Empty when some grid value was never observed.
inline std::optional<BandlimitedField> detect_field(const SampleSet& samples, int b) {
  if (samples.b != b) throw DomainError("sample set has a different bandwidth");
  const auto assignment = assign_locations(cluster_by_value(samples), b);
  if (!assignment.complete) return std::nullopt;
  return coefficients_from_grid(GridSamples(b, assignment.values));
}

struct ErrorEstimate {
  std::size_t trials = 0;
  std::size_t errors = 0;
  double e_hat = 0.0;
  double ci_half_width = 0.0;  // 1.96 sqrt(e (1 - e) / trials)
};

inline ErrorEstimate make_error_estimate(std::size_t errors, std::size_t trials) {
  ErrorEstimate est;
  est.trials = trials;
  est.errors = errors;
  est.e_hat = static_cast<double>(errors) / static_cast<double>(trials);
  est.ci_half_width =
      1.96 * std::sqrt(est.e_hat * (1.0 - est.e_hat) / static_cast<double>(trials));
  return est;
}

/// Fraction of trials whose frequency-order assignment is wrong. Trial t uses
/// substream(seed, t), so the estimate does not depend on thread count.
inline ErrorEstimate monte_carlo_error(const BandlimitedField& field,
                                       const SensorDistribution& dist,
                                       std::size_t n, std::size_t trials,
                                       std::uint64_t seed,
                                       unsigned threads = default_thread_count()) {
  if (trials < 1) throw DomainError("need at least one trial");
  if (n < 1) throw DomainError("need at least one sample");
  if (field.bandwidth() != dist.bandwidth()) {
    throw DomainError("field and distribution disagree on bandwidth");
  }
  const GridSamples truth = grid_samples(field);
  const int b = field.bandwidth();

  std::vector<std::size_t> chunk_errors;
  std::mutex mutex;
  parallel_for(
      trials,
      [&](std::size_t begin, std::size_t end) {
        std::vector<double> readings;
        std::size_t errors = 0;
        for (std::size_t t = begin; t < end; ++t) {
          Rng rng = substream(seed, t);
          draw_samples_into(truth, dist, n, rng, readings);
          const auto assignment = assign_locations(cluster_readings(readings, b), b);
          if (!score_assignment(assignment, truth).correct) ++errors;
        }
        std::lock_guard lock(mutex);
        chunk_errors.push_back(errors);
      },
      threads);
  std::size_t errors = 0;
  for (auto e : chunk_errors) errors += e;
  return make_error_estimate(errors, trials);
}

/// Number of count vectors (N_0..N_{K-1}) with sum n, i.e. C(n+K-1, K-1),
/// saturating at `cap` + 1.
inline std::size_t composition_count(std::size_t n, std::size_t parts,
                                     std::size_t cap) {
  double c = 1.0;
  for (std::size_t j = 1; j < parts; ++j) {
    c = c * static_cast<double>(n + j) / static_cast<double>(j);
    if (c > static_cast<double>(cap)) return cap + 1;
  }
  return static_cast<std::size_t>(std::llround(c));
}

inline constexpr std::size_t kMaxEnumeration = 1'000'000;

/// Exact P[not (0 < N_0 < N_1 < ... < N_{2b})] for n multinomial draws, by
/// summing the multinomial pmf over every violating count vector.
inline double exact_error_probability(const SensorDistribution& dist, std::size_t n) {
  const std::size_t parts = dist.size();
  if (composition_count(n, parts, kMaxEnumeration) > kMaxEnumeration) {
    throw SizeError("enumeration over more than 1e6 count vectors");
  }
  const auto p = dist.probabilities();
  std::vector<double> log_p(parts);
  for (std::size_t i = 0; i < parts; ++i) log_p[i] = std::log(p[i]);
  const double log_n_fact = std::lgamma(static_cast<double>(n) + 1.0);

  double total = 0.0;
  // Depth-first over counts; `ordered` tracks whether 0 < N_0 < ... holds so far.
  auto recurse = [&](auto&& self, std::size_t i, std::size_t remaining,
                     double log_term, long long prev, bool ordered) -> void {
    if (i + 1 == parts) {
      const auto c = static_cast<long long>(remaining);
      const double lt = log_term - std::lgamma(static_cast<double>(c) + 1.0) +
                        static_cast<double>(c) * log_p[i];
      if (!(ordered && c > prev)) total += std::exp(log_n_fact + lt);
      return;
    }
    for (std::size_t c = 0; c <= remaining; ++c) {
      const auto cc = static_cast<long long>(c);
      const double lt = log_term - std::lgamma(static_cast<double>(c) + 1.0) +
                        static_cast<double>(c) * log_p[i];
      self(self, i + 1, remaining - c, lt, cc, ordered && cc > prev);
    }
  };
  recurse(recurse, 0, n, 0.0, 0, true);
  return std::min(total, 1.0);
}

}  // namespace locfield
