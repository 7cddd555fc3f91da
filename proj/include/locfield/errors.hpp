#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace locfield {

/// Argument outside an operation's domain (x outside [0,1], bad index, ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// A value that should be real carries a non-negligible imaginary part.
struct ConjugateSymmetryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A type invariant does not hold (ordering, normalization, lengths).
struct InvariantError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Observed data contradicts the sampling model, e.g. more distinct
/// noiseless readings than grid points.
struct ModelViolationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Rejection sampling ran out of retries.
struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Exhaustive enumeration would exceed its size budget.
struct SizeError : std::length_error {
  using std::length_error::length_error;
};

/// Estimation had nothing usable to work with.
struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An EM mixture component lost (almost) all of its responsibility mass.
struct DegenerateComponentError : std::runtime_error {
  DegenerateComponentError(std::size_t component, std::size_t iteration)
      : std::runtime_error("EM component " + std::to_string(component) +
                           " degenerated at iteration " +
                           std::to_string(iteration)),
        component(component),
        iteration(iteration) {}

  std::size_t component;
  std::size_t iteration;
};

}  // namespace locfield
