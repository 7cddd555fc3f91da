#pragma once

// Spatially bandlimited periodic fields on [0, 1]:
//
//   g(x) = sum_{k=-b}^{b} a[k] exp(j 2 pi k x)
//
// with a known bandwidth parameter b. Such a field is fixed by its values on
// the equispaced grid x_i = i / (2b + 1), i = 0..2b, which is what makes
// reconstruction from grid readings possible.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "locfield/errors.hpp"
#include "locfield/random.hpp"

namespace locfield {

using Complex = std::complex<double>;

/// Relative tolerance on the imaginary residue of a real field's value.
inline constexpr double kRealResidueTolerance = 1e-9;

constexpr std::size_t grid_size(int b) noexcept {
  return static_cast<std::size_t>(2 * b + 1);
}

/// exp(j 2 pi (numerator / denominator)) with the phase reduced modulo the
/// denominator first, so grid phases are as exact as double allows.
inline Complex unit_root(long long numerator, long long denominator) {
  long long r = numerator % denominator;
  if (r < 0) r += denominator;
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(r) /
                       static_cast<double>(denominator);
  return {std::cos(angle), std::sin(angle)};
}

class BandlimitedField {
 public:
  /// `coeffs` holds a[-b], ..., a[b].
  BandlimitedField(int b, std::vector<Complex> coeffs)
      : b_(b), coeffs_(std::move(coeffs)) {
    if (b_ < 0) throw InvariantError("bandwidth parameter must be >= 0");
    if (coeffs_.size() != grid_size(b_)) {
      throw InvariantError("expected " + std::to_string(grid_size(b_)) +
                           " coefficients, got " +
                           std::to_string(coeffs_.size()));
    }
  }

  static BandlimitedField constant(double value, int b = 0) {
    std::vector<Complex> c(grid_size(b));
    c[static_cast<std::size_t>(b)] = value;
    return {b, std::move(c)};
  }

  int bandwidth() const noexcept { return b_; }
  std::size_t size() const noexcept { return coeffs_.size(); }
  std::span<const Complex> coefficients() const noexcept { return coeffs_; }

  /// a[k] for -b <= k <= b.
  const Complex& operator[](int k) const {
    if (k < -b_ || k > b_) throw DomainError("frequency index out of range");
    return coeffs_[static_cast<std::size_t>(k + b_)];
  }

  /// sum_k |a[k]|; bounds |g(x)| everywhere.
  double amplitude_scale() const noexcept {
    double s = 0.0;
    for (const auto& c : coeffs_) s += std::abs(c);
    return s;
  }

  double max_coefficient_magnitude() const noexcept {
    double m = 0.0;
    for (const auto& c : coeffs_) m = std::max(m, std::abs(c));
    return m;
  }

  /// Largest |k| with a[k] != 0 (0 for a constant or zero field).
  int effective_bandwidth() const noexcept {
    for (int k = b_; k > 0; --k) {
      if (std::abs((*this)[k]) != 0.0 || std::abs((*this)[-k]) != 0.0) return k;
    }
    return 0;
  }

  /// a[-k] == conj(a[k]) for all k, within `tol` times the largest magnitude.
  bool is_real(double tol = 1e-12) const noexcept {
    const double scale = std::max(max_coefficient_magnitude(), 1e-300);
    for (int k = 0; k <= b_; ++k) {
      const Complex& pos = coeffs_[static_cast<std::size_t>(b_ + k)];
      const Complex& neg = coeffs_[static_cast<std::size_t>(b_ - k)];
      if (std::abs(pos - std::conj(neg)) > tol * scale) return false;
    }
    return true;
  }

  friend bool operator==(const BandlimitedField&,
                         const BandlimitedField&) = default;

 private:
  int b_;
  std::vector<Complex> coeffs_;
};

/// Field values on the grid i / (2b + 1), i = 0..2b.
class GridSamples {
 public:
  GridSamples(int b, std::vector<double> values) : b_(b), values_(std::move(values)) {
    if (b_ < 0) throw InvariantError("bandwidth parameter must be >= 0");
    if (values_.size() != grid_size(b_)) {
      throw InvariantError("expected " + std::to_string(grid_size(b_)) +
                           " grid values, got " + std::to_string(values_.size()));
    }
  }

  int bandwidth() const noexcept { return b_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_.at(i); }

  /// Smallest |g_i - g_j| over i != j; +inf when there is a single point.
  double min_gap() const {
    std::vector<double> sorted = values_;
    std::sort(sorted.begin(), sorted.end());
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      gap = std::min(gap, sorted[i] - sorted[i - 1]);
    }
    return gap;
  }

  friend bool operator==(const GridSamples&, const GridSamples&) = default;

 private:
  int b_;
  std::vector<double> values_;
};

/// g(x) without the domain and residue checks.
inline Complex evaluate_complex(const BandlimitedField& field, double x) {
  const int b = field.bandwidth();
  const auto coeffs = field.coefficients();
  Complex sum{0.0, 0.0};
  for (int k = -b; k <= b; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) * x;
    sum += coeffs[static_cast<std::size_t>(k + b)] *
           Complex(std::cos(angle), std::sin(angle));
  }
  return sum;
}

/// g(x) for x in [0, 1]. Throws DomainError outside the interval and
/// ConjugateSymmetryError when the value is not real to within tolerance.
inline double evaluate(const BandlimitedField& field, double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw DomainError("evaluation point " + std::to_string(x) +
                      " outside [0, 1]");
  }
  const Complex value = evaluate_complex(field, x);
  if (std::abs(value.imag()) >
      kRealResidueTolerance * field.amplitude_scale()) {
    throw ConjugateSymmetryError("field is not real-valued: imaginary residue " +
                                 std::to_string(value.imag()));
  }
  return value.real();
}

inline GridSamples grid_samples(const BandlimitedField& field) {
  const int b = field.bandwidth();
  const std::size_t count = grid_size(b);
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    values[i] = evaluate(field, static_cast<double>(i) / static_cast<double>(count));
  }
  return {b, std::move(values)};
}

/// Inverts grid sampling: a = (1 / (2b+1)) Phi_b^H g, where Phi_b has entries
/// exp(j 2 pi k i / (2b+1)). Phi_b has orthogonal columns, so this is exact.
inline BandlimitedField coefficients_from_grid(const GridSamples& samples) {
  const int b = samples.bandwidth();
  const auto n = static_cast<long long>(samples.size());
  const auto g = samples.values();
  std::vector<Complex> coeffs(samples.size());
  for (int k = -b; k <= b; ++k) {
    Complex acc{0.0, 0.0};
    for (long long i = 0; i < n; ++i) {
      acc += g[static_cast<std::size_t>(i)] * unit_root(-k * i, n);
    }
    coeffs[static_cast<std::size_t>(k + b)] = acc / static_cast<double>(n);
  }
  return {b, std::move(coeffs)};
}

struct RandomFieldOptions {
  double amplitude_bound = 1.0;
  /// Minimum absolute separation between any two grid values.
  double distinctness_gap = 1e-6;
  int max_retries = 1000;
};

/// Real field with Re/Im of a[k], k = 1..b, and a[0] drawn i.i.d. uniform on
/// [-A, A]; a[-k] = conj(a[k]). Redraws until grid values are distinct.
inline BandlimitedField random_field(int b, Rng& rng,
                                     const RandomFieldOptions& options = {}) {
  if (b < 0) throw DomainError("bandwidth parameter must be >= 0");
  if (!(options.amplitude_bound > 0.0)) {
    throw DomainError("amplitude bound must be positive");
  }
  const double bound = options.amplitude_bound;
  auto draw = [&] { return bound * (2.0 * rng.uniform01() - 1.0); };
  for (int attempt = 0; attempt < options.max_retries; ++attempt) {
    std::vector<Complex> coeffs(grid_size(b));
    const auto zero = static_cast<std::size_t>(b);
    coeffs[zero] = draw();
    for (int k = 1; k <= b; ++k) {
      const double re = draw();
      const double im = draw();
      coeffs[zero + static_cast<std::size_t>(k)] = {re, im};
      coeffs[zero - static_cast<std::size_t>(k)] = {re, -im};
    }
    BandlimitedField field(b, std::move(coeffs));
    if (grid_samples(field).min_gap() >= options.distinctness_gap) return field;
  }
  throw GenerationError("no field with distinct grid values after " +
                        std::to_string(options.max_retries) + " draws");
}

inline BandlimitedField random_field(int b, double amplitude_bound, Rng& rng) {
  RandomFieldOptions options;
  options.amplitude_bound = amplitude_bound;
  return random_field(b, rng, options);
}

/// Relative L2 error over one period, int |est - g|^2 / int |g|^2, evaluated
/// exactly in the coefficient domain (Parseval).
inline double distortion(const BandlimitedField& estimate,
                         const BandlimitedField& truth) {
  if (estimate.bandwidth() != truth.bandwidth()) {
    throw DomainError("distortion needs fields with the same bandwidth");
  }
  double num = 0.0;
  double den = 0.0;
  const auto est = estimate.coefficients();
  const auto ref = truth.coefficients();
  for (std::size_t i = 0; i < ref.size(); ++i) {
    num += std::norm(est[i] - ref[i]);
    den += std::norm(ref[i]);
  }
  if (den == 0.0) throw DomainError("distortion against a zero-energy field");
  return num / den;
}

// -- Transformations used to exhibit level-set ambiguities ------------------

/// The field x -> g(x - s).
inline BandlimitedField shifted(const BandlimitedField& field, double s) {
  const int b = field.bandwidth();
  std::vector<Complex> coeffs(field.size());
  for (int k = -b; k <= b; ++k) {
    const double angle = -2.0 * std::numbers::pi * k * s;
    coeffs[static_cast<std::size_t>(k + b)] =
        field[k] * Complex(std::cos(angle), std::sin(angle));
  }
  return {b, std::move(coeffs)};
}

/// The field x -> g(s - x).
inline BandlimitedField flipped(const BandlimitedField& field, double s) {
  const int b = field.bandwidth();
  std::vector<Complex> coeffs(field.size());
  for (int k = -b; k <= b; ++k) {
    const double angle = 2.0 * std::numbers::pi * k * s;
    coeffs[static_cast<std::size_t>(-k + b)] =
        field[k] * Complex(std::cos(angle), std::sin(angle));
  }
  return {b, std::move(coeffs)};
}

/// The field x -> g(m x). Needs m * effective_bandwidth() <= b so the result
/// fits the same coefficient layout.
inline BandlimitedField scaled(const BandlimitedField& field, int m) {
  const int b = field.bandwidth();
  if (m < 1) throw DomainError("scale factor must be a positive integer");
  const int eff = field.effective_bandwidth();
  if (m * eff > b) {
    throw DomainError("scaling by " + std::to_string(m) +
                      " exceeds the bandwidth envelope");
  }
  std::vector<Complex> coeffs(field.size());
  for (int k = -eff; k <= eff; ++k) {
    coeffs[static_cast<std::size_t>(m * k + b)] = field[k];
  }
  return {b, std::move(coeffs)};
}

/// Same function, represented with a larger bandwidth parameter.
inline BandlimitedField embedded(const BandlimitedField& field, int b) {
  const int inner = field.bandwidth();
  if (b < inner) throw DomainError("cannot embed into a smaller bandwidth");
  std::vector<Complex> coeffs(grid_size(b));
  for (int k = -inner; k <= inner; ++k) {
    coeffs[static_cast<std::size_t>(k + b)] = field[k];
  }
  return {b, std::move(coeffs)};
}

// -- Level sets ---------------------------------------------------------------

inline constexpr int kDefaultLevelSetResolution = 100000;

/// Sorted values of g at the cell midpoints (j + 1/2) / resolution.
inline std::vector<double> sorted_level_values(const BandlimitedField& field,
                                               int resolution) {
  if (resolution < 1000) throw DomainError("level-set resolution must be >= 1000");
  std::vector<double> values(static_cast<std::size_t>(resolution));
  for (int j = 0; j < resolution; ++j) {
    values[static_cast<std::size_t>(j)] =
        evaluate(field, (j + 0.5) / static_cast<double>(resolution));
  }
  std::sort(values.begin(), values.end());
  return values;
}

/// Measure of {u in [0,1] : g(u) <= theta}, as the fraction of uniform grid
/// points satisfying the condition.
inline double level_set_measure(const BandlimitedField& field, double theta,
                                int resolution = kDefaultLevelSetResolution) {
  const auto values = sorted_level_values(field, resolution);
  const auto count = std::upper_bound(values.begin(), values.end(), theta) -
                     values.begin();
  return static_cast<double>(count) / static_cast<double>(resolution);
}

/// level_set_measure for many thresholds with a single pass over the field.
inline std::vector<double> level_set_profile(const BandlimitedField& field,
                                             std::span<const double> thetas,
                                             int resolution = kDefaultLevelSetResolution) {
  const auto values = sorted_level_values(field, resolution);
  std::vector<double> out;
  out.reserve(thetas.size());
  for (double theta : thetas) {
    const auto count = std::upper_bound(values.begin(), values.end(), theta) -
                       values.begin();
    out.push_back(static_cast<double>(count) / static_cast<double>(resolution));
  }
  return out;
}

}  // namespace locfield
