#pragma once

// Step rate function on [0, T]: change-points s_1..s_k with heights
// h_0..h_k, plus the cumulative rate, its analytic inverse and the NHPP
// log-likelihood.

#include <algorithm>
#include <cmath>
#include <vector>

#include "exrate/types.hpp"

namespace exrate {

struct StepRate {
  std::vector<double> changepoints;  // s_1 < ... < s_k, strictly inside (0, T)
  std::vector<double> heights;       // h_0..h_k, all > 0
  double horizon = 0.0;

  std::size_t k() const { return changepoints.size(); }

  void validate() const {
    if (!(horizon > 0.0)) throw data_error("StepRate: horizon must be > 0");
    if (heights.size() != changepoints.size() + 1)
      throw data_error("StepRate: heights must have k+1 entries");
    double prev = 0.0;
    for (double s : changepoints) {
      if (!(s > prev) || !(s < horizon))
        throw data_error("StepRate: change-points must satisfy 0 < s_1 < ... < T");
      prev = s;
    }
    for (double h : heights)
      if (!(h > 0.0)) throw data_error("StepRate: heights must be > 0");
  }

  // Interval boundary s_j with sentinels s_0 = 0, s_{k+1} = T.
  double boundary(std::size_t j) const {
    if (j == 0) return 0.0;
    if (j == changepoints.size() + 1) return horizon;
    return changepoints[j - 1];
  }

  // Index j of the half-open interval [s_j, s_{j+1}) containing t; t == T
  // maps to the last interval.
  std::size_t interval_of(double t) const {
    const auto it =
        std::upper_bound(changepoints.begin(), changepoints.end(), t);
    return static_cast<std::size_t>(it - changepoints.begin());
  }

  double value_at(double t) const { return heights[interval_of(t)]; }
};

// Lambda(t) = integral of the step rate over [0, t); piecewise linear.
inline double cumulative_rate(const StepRate& rate, double t) {
  if (t < 0.0 || t > rate.horizon)
    throw std::domain_error("cumulative_rate: t outside [0, T]");
  double acc = 0.0;
  for (std::size_t j = 0; j <= rate.k(); ++j) {
    const double lo = rate.boundary(j);
    if (t <= lo) break;
    const double hi = std::min(t, rate.boundary(j + 1));
    acc += rate.heights[j] * (hi - lo);
  }
  return acc;
}

inline double total_mass(const StepRate& rate) {
  return cumulative_rate(rate, rate.horizon);
}

// Analytic inverse of the piecewise-linear cumulative rate: smallest t with
// Lambda(t) = m, for m in [0, Lambda(T)].
inline double cumulative_rate_inverse(const StepRate& rate, double m) {
  if (m < 0.0) throw std::domain_error("cumulative_rate_inverse: m < 0");
  double acc = 0.0;
  for (std::size_t j = 0; j <= rate.k(); ++j) {
    const double lo = rate.boundary(j);
    const double hi = rate.boundary(j + 1);
    const double seg = rate.heights[j] * (hi - lo);
    if (m <= acc + seg) return lo + (m - acc) / rate.heights[j];
    acc += seg;
  }
  if (m <= acc * (1.0 + 1e-12)) return rate.horizon;
  throw std::domain_error("cumulative_rate_inverse: m exceeds Lambda(T)");
}

// Number of events with times in [a, b).
inline std::size_t count_in(const std::vector<double>& times, double a, double b) {
  const auto lo = std::lower_bound(times.begin(), times.end(), a);
  const auto hi = std::lower_bound(times.begin(), times.end(), b);
  return static_cast<std::size_t>(hi - lo);
}

// Log-likelihood sum_i log lambda(t_i) - Lambda(T). Events exactly at a
// change-point belong to the interval starting there.
inline double log_likelihood(const StepRate& rate, const ExceedanceSeries& events) {
  if (events.horizon != rate.horizon)
    throw data_error("log_likelihood: horizon mismatch");
  double ll = 0.0;
  for (std::size_t j = 0; j <= rate.k(); ++j) {
    const double lo = rate.boundary(j);
    const double hi = rate.boundary(j + 1);
    const auto nj = count_in(events.times, lo, j == rate.k() ? hi + 1.0 : hi);
    ll += static_cast<double>(nj) * std::log(rate.heights[j]) -
          rate.heights[j] * (hi - lo);
  }
  return ll;
}

}  // namespace exrate
