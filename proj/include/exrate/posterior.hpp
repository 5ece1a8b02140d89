#pragma once

// Posterior ensemble summaries: k distribution, per-index KDE summaries of
// change-point locations and heights, posterior mean rate and the
// assembled point-estimate step rate.

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "exrate/rjmcmc.hpp"

namespace exrate {

struct DensityEstimate {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
  double mode = 0.0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

// Linear-interpolation sample quantile on a copy of the data.
inline double sample_quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw data_error("sample_quantile: empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= xs.size()) return xs.back();
  return xs[lo] * (1.0 - frac) + xs[lo + 1] * frac;
}

// Gaussian KDE on an equally spaced grid; mode from the grid argmax,
// quartiles and median from the raw sample.
inline DensityEstimate kde_summary(const std::vector<double>& sample,
                                   double bandwidth, double grid_lo,
                                   double grid_hi, std::size_t grid_size = 2048) {
  if (sample.empty()) throw data_error("kde_summary: empty sample");
  if (!(bandwidth > 0.0)) throw std::domain_error("kde_summary: bandwidth > 0");
  DensityEstimate d;
  d.bandwidth = bandwidth;
  d.grid.resize(grid_size);
  d.density.resize(grid_size);
  const double step = (grid_hi - grid_lo) / static_cast<double>(grid_size - 1);
  const double norm =
      1.0 / (static_cast<double>(sample.size()) * bandwidth *
             std::sqrt(2.0 * 3.14159265358979323846));
  std::size_t argmax = 0;
  for (std::size_t g = 0; g < grid_size; ++g) {
    const double x = grid_lo + step * static_cast<double>(g);
    double acc = 0.0;
    for (double s : sample) {
      const double z = (x - s) / bandwidth;
      acc += std::exp(-0.5 * z * z);
    }
    d.grid[g] = x;
    d.density[g] = acc * norm;
    if (d.density[g] > d.density[argmax]) argmax = g;
  }
  d.mode = d.grid[argmax];
  d.median = sample_quantile(sample, 0.5);
  d.q25 = sample_quantile(sample, 0.25);
  d.q75 = sample_quantile(sample, 0.75);
  return d;
}

// Empirical pmf of the number of change-points.
inline std::map<std::size_t, double> k_distribution(const PosteriorEnsemble& ens) {
  if (ens.samples.empty()) throw data_error("k_distribution: empty ensemble");
  std::map<std::size_t, double> pmf;
  for (const auto& s : ens.samples) pmf[s.k()] += 1.0;
  for (auto& [k, v] : pmf) v /= static_cast<double>(ens.samples.size());
  return pmf;
}

namespace detail {

inline std::vector<std::vector<double>> pooled_by_index(
    const PosteriorEnsemble& ens, std::size_t k_star, bool heights) {
  std::vector<std::vector<double>> pools(heights ? k_star + 1 : k_star);
  std::size_t found = 0;
  for (const auto& s : ens.samples) {
    if (s.k() != k_star) continue;
    ++found;
    if (heights)
      for (std::size_t j = 0; j <= k_star; ++j) pools[j].push_back(s.heights[j]);
    else
      for (std::size_t j = 0; j < k_star; ++j)
        pools[j].push_back(s.changepoints[j]);
  }
  if (found == 0) {
    std::string ks;
    for (const auto& [k, v] : k_distribution(ens))
      ks += (ks.empty() ? "" : ", ") + std::to_string(k);
    throw data_error("no posterior samples with k = " + std::to_string(k_star) +
                     " (available k: " + ks + ")");
  }
  return pools;
}

}  // namespace detail

// Per-change-point location densities among samples with k = k_star.
inline std::vector<DensityEstimate> location_summaries(
    const PosteriorEnsemble& ens, std::size_t k_star, double bandwidth) {
  const auto pools = detail::pooled_by_index(ens, k_star, false);
  std::vector<DensityEstimate> out;
  out.reserve(pools.size());
  for (const auto& pool : pools)
    out.push_back(kde_summary(pool, bandwidth, 0.0, ens.horizon));
  return out;
}

// Per-step height densities among samples with k = k_star.
inline std::vector<DensityEstimate> height_summaries(const PosteriorEnsemble& ens,
                                                     std::size_t k_star,
                                                     double bandwidth) {
  const auto pools = detail::pooled_by_index(ens, k_star, true);
  std::vector<DensityEstimate> out;
  out.reserve(pools.size());
  for (const auto& pool : pools) {
    const double hi = *std::max_element(pool.begin(), pool.end()) * 1.2;
    out.push_back(kde_summary(pool, bandwidth, 0.0, std::max(hi, bandwidth)));
  }
  return out;
}

// Pointwise posterior mean of lambda(t) on the grid; max_samples = 0 uses
// the whole ensemble, otherwise an evenly strided subset.
inline std::vector<double> mean_rate(const PosteriorEnsemble& ens,
                                     const std::vector<double>& grid,
                                     std::size_t max_samples = 0) {
  if (ens.samples.empty()) throw data_error("mean_rate: empty ensemble");
  std::size_t stride = 1;
  if (max_samples > 0 && ens.samples.size() > max_samples)
    stride = ens.samples.size() / max_samples;
  std::vector<double> out(grid.size(), 0.0);
  std::size_t used = 0;
  for (std::size_t i = 0; i < ens.samples.size(); i += stride) {
    const auto& s = ens.samples[i];
    for (std::size_t g = 0; g < grid.size(); ++g) out[g] += s.value_at(grid[g]);
    ++used;
  }
  for (double& v : out) v /= static_cast<double>(used);
  return out;
}

// Assembled point estimate: argmax k (ties to smaller k), KDE modes for
// positions and heights; falls back to per-index medians if the modes do
// not form a valid ordering.
inline StepRate point_estimate(const PosteriorEnsemble& ens, double loc_bw,
                               double h_bw) {
  const auto pmf = k_distribution(ens);
  std::size_t k_hat = 0;
  double best = -1.0;
  for (const auto& [k, p] : pmf)
    if (p > best) {  // map iteration is ascending, so ties stay at smaller k
      best = p;
      k_hat = k;
    }
  StepRate est;
  est.horizon = ens.horizon;
  const auto hs = height_summaries(ens, k_hat, h_bw);
  if (k_hat > 0) {
    const auto ls = location_summaries(ens, k_hat, loc_bw);
    for (const auto& d : ls) est.changepoints.push_back(d.mode);
    const bool ordered = std::is_sorted(est.changepoints.begin(),
                                        est.changepoints.end()) &&
                         est.changepoints.front() > 0.0 &&
                         est.changepoints.back() < est.horizon &&
                         std::adjacent_find(est.changepoints.begin(),
                                            est.changepoints.end()) ==
                             est.changepoints.end();
    if (!ordered) {
      est.changepoints.clear();
      for (const auto& d : ls) est.changepoints.push_back(d.median);
      if (!std::is_sorted(est.changepoints.begin(), est.changepoints.end()))
        throw data_error("point_estimate: modes and medians both unordered");
    }
  }
  for (const auto& d : hs) est.heights.push_back(d.mode > 0.0 ? d.mode : d.median);
  est.validate();
  return est;
}

}  // namespace exrate
