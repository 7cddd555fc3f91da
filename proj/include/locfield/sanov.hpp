#pragma once

// Numerical checks of the large-deviation exponents: KL divergence, a
// derivative-free constrained KL minimizer over the probability simplex, and
// a slope estimator for Monte Carlo error curves. The minimizer never uses
// the closed-form exponents it is meant to verify.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "locfield/deployment.hpp"
#include "locfield/errors.hpp"

namespace locfield {

/// A probability vector: nonnegative entries summing to 1.
class SimplexPoint {
 public:
  explicit SimplexPoint(std::vector<double> q) : q_(std::move(q)) {
    if (q_.empty()) throw InvariantError("empty simplex point");
    double sum = 0.0;
    for (double x : q_) {
      if (!(x >= 0.0)) throw InvariantError("simplex entries must be nonnegative");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw InvariantError("simplex entries must sum to 1");
    }
  }

  std::size_t size() const noexcept { return q_.size(); }
  std::span<const double> values() const noexcept { return q_; }
  double operator[](std::size_t i) const { return q_.at(i); }

 private:
  std::vector<double> q_;
};

/// q log2(q / p) with 0 log 0 = 0 and q log(q / 0) = +inf for q > 0.
inline double kl_term(double q, double p) {
  if (q <= 0.0) return 0.0;
  if (p <= 0.0) return std::numeric_limits<double>::infinity();
  return q * std::log2(q / p);
}

/// D(q || p) in bits.
inline double kl_divergence(std::span<const double> q, std::span<const double> p) {
  if (q.size() != p.size()) throw DomainError("KL divergence of mismatched sizes");
  double d = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) d += kl_term(q[i], p[i]);
  return d;
}

inline double kl_divergence(const SimplexPoint& q, const SensorDistribution& p) {
  return kl_divergence(q.values(), p.probabilities());
}

/// Minimizes f on [lo, hi] by golden-section search; returns the argmin.
template <typename F>
double golden_section_minimize(F&& f, double lo, double hi, double tol = 1e-13) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  // Endpoints matter: the minimum of a constrained line search often sits on
  // the boundary.
  double best = 0.5 * (a + b);
  double fbest = f(best);
  for (double t : {lo, hi}) {
    const double ft = f(t);
    if (ft < fbest) {
      best = t;
      fbest = ft;
    }
  }
  return best;
}

struct KlMinimum {
  SimplexPoint q;
  double value;  // bits
};

inline constexpr double kOracleGridStep = 1e-3;

/// min D(q || p) subject to q_{event+1} <= q_event, i.e. the Sanov exponent of
/// {N_event >= N_{event+1}}.
///
/// Only the two constrained coordinates (u, v) = (q_i, q_{i+1}) are searched.
/// The free coordinates share the remaining mass r in proportion to p, which
/// is their conditional optimum by the log-sum inequality, contributing
/// r log2(r / P_rest). Search: a grid of step 1e-3 over the feasible triangle
/// {0 <= v <= u, u + v <= 1}, then golden-section line searches from the best
/// grid point along the face direction (u and v together), across the face,
/// and along each axis until no direction improves.
inline KlMinimum constrained_kl_min(const SensorDistribution& dist, std::size_t event) {
  const auto p = dist.probabilities();
  if (p.size() < 2 || event + 1 >= p.size()) {
    throw DomainError("event index " + std::to_string(event) +
                      " has no successor on this grid");
  }
  const double pu = p[event];
  const double pv = p[event + 1];
  const double rest = 1.0 - pu - pv;

  auto objective = [&](double u, double v) {
    const double r = std::max(0.0, 1.0 - u - v);
    return kl_term(u, pu) + kl_term(v, pv) + kl_term(r, rest);
  };

  double best_u = 0.0;
  double best_v = 0.0;
  double best = std::numeric_limits<double>::infinity();
  const auto steps = static_cast<int>(std::round(1.0 / kOracleGridStep));
  for (int iu = 0; iu <= steps; ++iu) {
    const double u = iu * kOracleGridStep;
    for (int iv = 0; iv <= iu && iu + iv <= steps; ++iv) {
      const double v = iv * kOracleGridStep;
      const double f = objective(u, v);
      if (f < best) {
        best = f;
        best_u = u;
        best_v = v;
      }
    }
  }

  // Feasible step interval [lo, hi] for (u, v) + t (du, dv).
  auto step_bounds = [](double u, double v, double du, double dv) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    auto limit = [&](double value, double rate) {  // value + t * rate >= 0
      if (rate > 0.0) lo = std::max(lo, -value / rate);
      else if (rate < 0.0) hi = std::min(hi, -value / rate);
      else if (value < 0.0) hi = lo;  // infeasible direction
    };
    limit(u, du);
    limit(v, dv);
    limit(u - v, du - dv);
    limit(1.0 - u - v, -(du + dv));
    return std::pair{lo, hi};
  };

  constexpr double directions[4][2] = {{1.0, 1.0}, {1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}};
  for (int sweep = 0; sweep < 500; ++sweep) {
    const double before = best;
    for (const auto& dir : directions) {
      const auto [lo, hi] = step_bounds(best_u, best_v, dir[0], dir[1]);
      if (!(hi > lo)) continue;
      auto line = [&](double t) {
        return objective(best_u + t * dir[0], best_v + t * dir[1]);
      };
      const double t = golden_section_minimize(line, lo, hi, 1e-14);
      const double f = line(t);
      if (f < best) {
        best = f;
        best_u = std::max(0.0, best_u + t * dir[0]);
        best_v = std::clamp(best_v + t * dir[1], 0.0, best_u);
      }
    }
    if (before - best < 1e-16) break;
  }

  std::vector<double> q(p.size());
  const double r = std::max(0.0, 1.0 - best_u - best_v);
  for (std::size_t j = 0; j < p.size(); ++j) q[j] = r * p[j] / rest;
  q[event] = best_u;
  q[event + 1] = best_v;
  return {SimplexPoint(std::move(q)), objective(best_u, best_v)};
}

/// min D(q || p) subject to q_0 = 0, the exponent of {N_0 = 0}. Pairwise mass
/// transfers between the free coordinates, each a golden-section line search,
/// starting from the uniform point.
inline KlMinimum zero_event_kl_min(const SensorDistribution& dist) {
  const auto p = dist.probabilities();
  const std::size_t k = p.size();
  if (k < 2) throw DomainError("the zero-count event needs at least two grid points");
  std::vector<double> q(k, 1.0 / static_cast<double>(k - 1));
  q[0] = 0.0;

  auto total = [&] { return kl_divergence(q, p); };
  double best = total();
  for (int sweep = 0; sweep < 2000; ++sweep) {
    const double before = best;
    for (std::size_t a = 1; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        const double qa = q[a];
        const double qb = q[b];
        auto line = [&](double t) {  // move t from b to a
          return kl_term(qa + t, p[a]) + kl_term(qb - t, p[b]);
        };
        const double t = golden_section_minimize(line, -qa, qb, 1e-15);
        if (line(t) < line(0.0)) {
          q[a] = std::max(0.0, qa + t);
          q[b] = std::max(0.0, qb - t);
        }
      }
    }
    best = total();
    if (before - best < 1e-15) break;
  }
  // Absorb rounding drift so the result passes the simplex invariant.
  double sum = 0.0;
  for (double x : q) sum += x;
  for (double& x : q) x /= sum;
  const double value = kl_divergence(q, p);
  return {SimplexPoint(std::move(q)), value};
}

struct CurvePoint {
  double n;
  double e;
};

/// Least-squares slope of -log2(e_n) against n over the largest-n half of the
/// usable points (those with 0 < e_n < 1), in bits per sample.
inline double empirical_exponent(std::span<const CurvePoint> curve) {
  std::vector<CurvePoint> usable;
  for (const auto& pt : curve) {
    if (pt.e > 0.0 && pt.e < 1.0) usable.push_back(pt);
  }
  if (usable.size() < 2) {
    throw EstimationError("fewer than two curve points with 0 < e_n < 1");
  }
  std::sort(usable.begin(), usable.end(),
            [](const CurvePoint& a, const CurvePoint& b) { return a.n < b.n; });
  const std::size_t keep = std::max<std::size_t>(2, (usable.size() + 1) / 2);
  const std::span<const CurvePoint> tail(usable.end() - static_cast<std::ptrdiff_t>(keep),
                                         usable.end());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const auto& pt : tail) {
    mean_x += pt.n;
    mean_y += -std::log2(pt.e);
  }
  mean_x /= static_cast<double>(keep);
  mean_y /= static_cast<double>(keep);
  double sxy = 0.0;
  double sxx = 0.0;
  for (const auto& pt : tail) {
    sxy += (pt.n - mean_x) * (-std::log2(pt.e) - mean_y);
    sxx += (pt.n - mean_x) * (pt.n - mean_x);
  }
  if (sxx == 0.0) throw EstimationError("curve points share a single n");
  return sxy / sxx;
}

}  // namespace locfield
