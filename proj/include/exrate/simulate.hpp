#pragma once

// NHPP simulators (direct, thinning, conditional) and the time-rescaling
// transform.

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <vector>

#include "exrate/step_rate.hpp"

namespace exrate {

namespace detail {

// Exact float ties have probability zero under the continuous model;
// duplicates are dropped to keep the series strictly increasing.
inline void sort_and_dedupe(std::vector<double>& times) {
  std::sort(times.begin(), times.end());
  const auto it = std::unique(times.begin(), times.end());
  if (it != times.end()) {
    std::cerr << "exrate: warning: discarded " << (times.end() - it)
              << " duplicate simulated event time(s)\n";
    times.erase(it, times.end());
  }
}

}  // namespace detail

// Per constant-rate interval: Poisson count, then uniform positions.
template <class Rng>
ExceedanceSeries simulate_direct(const StepRate& rate, Rng& rng) {
  rate.validate();
  std::vector<double> times;
  for (std::size_t j = 0; j <= rate.k(); ++j) {
    const double lo = rate.boundary(j);
    const double hi = rate.boundary(j + 1);
    std::poisson_distribution<long> pois(rate.heights[j] * (hi - lo));
    const long n = pois(rng);
    std::uniform_real_distribution<double> unif(lo, hi);
    for (long i = 0; i < n; ++i) {
      const double t = unif(rng);
      if (t > 0.0) times.push_back(t);
    }
  }
  detail::sort_and_dedupe(times);
  return ExceedanceSeries{std::move(times), rate.horizon};
}

// Acceptance/rejection against a dominating homogeneous rate lambda_star.
template <class Rng>
ExceedanceSeries simulate_thinning(const std::function<double(double)>& rate_fn,
                                   double lambda_star, double horizon, Rng& rng) {
  if (!(lambda_star > 0.0))
    throw std::domain_error("simulate_thinning: lambda_star must be > 0");
  if (!(horizon > 0.0))
    throw std::domain_error("simulate_thinning: horizon must be > 0");
  std::exponential_distribution<double> expo(lambda_star);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> times;
  double t = 0.0;
  for (;;) {
    t += expo(rng);
    if (t > horizon) break;
    const double lam = rate_fn(t);
    if (lam > lambda_star * (1.0 + 1e-12))
      throw data_error("simulate_thinning: rate_fn exceeds lambda_star");
    if (unif(rng) <= lam / lambda_star) times.push_back(t);
  }
  detail::sort_and_dedupe(times);
  return ExceedanceSeries{std::move(times), horizon};
}

// Exactly n events, i.i.d. with density lambda(t)/Lambda(T), via the
// analytic inverse of the piecewise-linear cumulative rate.
template <class Rng>
ExceedanceSeries simulate_conditional(const StepRate& rate, std::size_t n,
                                      Rng& rng) {
  rate.validate();
  const double mass = total_mass(rate);
  std::uniform_real_distribution<double> unif(0.0, mass);
  std::vector<double> times;
  times.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = cumulative_rate_inverse(rate, unif(rng));
    if (t > 0.0) times.push_back(t);
  }
  detail::sort_and_dedupe(times);
  return ExceedanceSeries{std::move(times), rate.horizon};
}

// t'_i = cum(t_i)/cum(T); uniform order statistics under the true rate.
inline std::vector<double> time_rescale(const ExceedanceSeries& events,
                                        const std::function<double(double)>& cum) {
  const double total = cum(events.horizon);
  if (!(total > 0.0)) throw data_error("time_rescale: degenerate cumulative rate");
  std::vector<double> out;
  out.reserve(events.size());
  for (double t : events.times) out.push_back(cum(t) / total);
  return out;
}

inline std::vector<double> time_rescale(const ExceedanceSeries& events,
                                        const StepRate& rate) {
  return time_rescale(events,
                      [&rate](double t) { return cumulative_rate(rate, t); });
}

// Counting path N(t) of a series on a grid.
inline CountingPath counting_path(const ExceedanceSeries& events,
                                  const std::vector<double>& grid) {
  CountingPath p;
  p.grid = grid;
  p.counts.reserve(grid.size());
  for (double g : grid)
    p.counts.push_back(static_cast<double>(
        std::upper_bound(events.times.begin(), events.times.end(), g) -
        events.times.begin()));
  return p;
}

}  // namespace exrate
