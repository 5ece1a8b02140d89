#pragma once

// Raw daily series -> declustered exceedance series: imputation, seasonal
// (and optional log-linear) detrending, quantile thresholding,
// declusterisation and the Wald-Wolfowitz runs test.

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "exrate/types.hpp"

namespace exrate {

// --- imputation -----------------------------------------------------------

// Each missing value is replaced by a draw from the empirical distribution
// of non-missing values within +-half_window days (windows truncated at the
// series edges). Only masked positions change.
template <class Rng>
DailySeries impute_missing(const DailySeries& series, std::size_t half_window,
                           Rng& rng) {
  series.validate();
  DailySeries out = series;
  const std::size_t n = series.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!series.missing[i]) continue;
    const std::size_t lo = i >= half_window ? i - half_window : 0;
    const std::size_t hi = std::min(n - 1, i + half_window);
    std::vector<double> pool;
    for (std::size_t j = lo; j <= hi; ++j)
      if (!series.missing[j]) pool.push_back(series.values[j]);
    if (pool.empty())
      throw data_error("impute_missing: empty window around index " +
                       std::to_string(i));
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    out.values[i] = pool[pick(rng)];
    out.missing[i] = false;
  }
  return out;
}

// --- deseasonalisation ----------------------------------------------------

struct SeasonalFit {
  double a = 0.0;     // cos coefficient
  double b = 0.0;     // sin coefficient
  double c = 0.0;     // intercept
  double beta = 0.0;  // log-linear slope (0 when trend disabled)
  double omega = 2.0 * 3.14159265358979323846 / 365.0;
};

namespace detail {

// Solve a small symmetric linear system in place by Gaussian elimination
// with partial pivoting.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> m,
                                       std::vector<double> rhs) {
  const std::size_t n = rhs.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(m[r][col]) > std::fabs(m[piv][col])) piv = r;
    std::swap(m[col], m[piv]);
    std::swap(rhs[col], rhs[piv]);
    if (m[col][col] == 0.0) throw numerical_error("singular regression system");
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m[r][col] / m[col][col];
      for (std::size_t c2 = col; c2 < n; ++c2) m[r][c2] -= f * m[col][c2];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t ri = n; ri-- > 0;) {
    double s = rhs[ri];
    for (std::size_t c2 = ri + 1; c2 < n; ++c2) s -= m[ri][c2] * x[c2];
    x[ri] = s / m[ri][ri];
  }
  return x;
}

}  // namespace detail

// OLS of log X(t) on {cos wt, sin wt, 1} (plus {-t} with include_trend);
// t is the 1-based day index.
inline SeasonalFit fit_seasonal(const DailySeries& series, bool include_trend) {
  series.validate();
  if (series.has_missing())
    throw data_error("fit_seasonal: series must be complete (impute first)");
  SeasonalFit fit;
  const std::size_t n = series.size();
  const std::size_t p = include_trend ? 4 : 3;
  std::vector<std::vector<double>> xtx(p, std::vector<double>(p, 0.0));
  std::vector<double> xty(p, 0.0);
  std::array<double, 4> row{};
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i + 1);
    if (!(series.values[i] > 0.0))
      throw data_error("fit_seasonal: non-positive value at index " +
                       std::to_string(i));
    const double y = std::log(series.values[i]);
    row[0] = std::cos(fit.omega * t);
    row[1] = std::sin(fit.omega * t);
    row[2] = 1.0;
    row[3] = -t;
    for (std::size_t r = 0; r < p; ++r) {
      for (std::size_t c = 0; c < p; ++c) xtx[r][c] += row[r] * row[c];
      xty[r] += row[r] * y;
    }
  }
  const auto coef = detail::solve_dense(std::move(xtx), std::move(xty));
  fit.a = coef[0];
  fit.b = coef[1];
  fit.c = coef[2];
  fit.beta = include_trend ? coef[3] : 0.0;
  return fit;
}

// log X~(t) = log X(t) + beta t - a cos wt - b sin wt - c, elementwise.
inline DailySeries deseasonalise(const DailySeries& series, const SeasonalFit& fit) {
  series.validate();
  if (series.has_missing())
    throw data_error("deseasonalise: series must be complete (impute first)");
  DailySeries out = series;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double t = static_cast<double>(i + 1);
    out.values[i] = std::exp(std::log(series.values[i]) + fit.beta * t -
                             fit.a * std::cos(fit.omega * t) -
                             fit.b * std::sin(fit.omega * t) - fit.c);
  }
  return out;
}

// --- thresholding ---------------------------------------------------------

struct ThresholdResult {
  double threshold = 0.0;
  ExceedanceSeries events;
  BinarySequence binary;
};

// Empirical quantile as the order statistic at index ceil(q*n) (1-based);
// events are the 1-based day indices with value strictly above it.
inline ThresholdResult threshold_exceedances(const DailySeries& series,
                                             double quantile) {
  series.validate();
  if (series.has_missing())
    throw data_error("threshold_exceedances: series must be complete");
  if (!(quantile > 0.0 && quantile < 1.0))
    throw std::domain_error("threshold_exceedances: quantile must be in (0,1)");
  const std::size_t n = series.size();
  std::vector<double> sorted = series.values;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t idx = static_cast<std::size_t>(
      std::ceil(quantile * static_cast<double>(n)));
  ThresholdResult r;
  r.threshold = sorted[std::min(n, std::max<std::size_t>(idx, 1)) - 1];
  r.events.horizon = static_cast<double>(n);
  r.binary.symbols.reserve(n);
  r.binary.start_times.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool above = series.values[i] > r.threshold;
    r.binary.symbols.push_back(above ? Symbol::above : Symbol::below);
    r.binary.start_times.push_back(static_cast<double>(i + 1));
    if (above) r.events.times.push_back(static_cast<double>(i + 1));
  }
  return r;
}

// --- declusterisation -----------------------------------------------------

struct DeclusterResult {
  ExceedanceSeries events;       // one representative per cluster
  BinarySequence relabelled;     // cluster + following m0 minuses merged
  std::vector<double> relabelled_values;
  std::size_t n_clusters = 0;
};

// A cluster opens at a plus and stays active until m0 consecutive minuses;
// the representative is the time of the cluster maximum (earliest on ties).
inline DeclusterResult decluster(const BinarySequence& binary,
                                 const std::vector<double>& values,
                                 std::size_t m0) {
  if (m0 < 1) throw std::domain_error("decluster: m0 must be >= 1");
  if (values.size() != binary.size())
    throw data_error("decluster: values must align with the binary sequence");
  const std::size_t n = binary.size();
  DeclusterResult r;
  r.events.horizon = static_cast<double>(n);
  std::size_t i = 0;
  while (i < n) {
    if (binary.symbols[i] == Symbol::below) {
      r.relabelled.symbols.push_back(Symbol::below);
      r.relabelled.start_times.push_back(binary.start_times[i]);
      r.relabelled_values.push_back(values[i]);
      ++i;
      continue;
    }
    // cluster scan
    const std::size_t start = i;
    std::size_t best = i;
    std::size_t below_run = 0;
    std::size_t j = i;
    for (; j < n; ++j) {
      if (binary.symbols[j] == Symbol::above) {
        below_run = 0;
        if (values[j] > values[best]) best = j;
      } else if (++below_run == m0) {
        ++j;  // consume the closing minus
        break;
      }
    }
    r.events.times.push_back(binary.start_times[best]);
    r.relabelled.symbols.push_back(Symbol::above);
    r.relabelled.start_times.push_back(binary.start_times[start]);
    r.relabelled_values.push_back(values[best]);
    ++r.n_clusters;
    i = j;
  }
  return r;
}

// --- runs test ------------------------------------------------------------

// Wald-Wolfowitz runs test conditioned on the observed number of pluses.
inline TestResult runs_test(const BinarySequence& binary) {
  const std::size_t n = binary.size();
  if (n < 2) throw data_error("runs_test: need n >= 2");
  const std::size_t np = binary.n_plus();
  if (np == 0 || np == n)
    throw data_error("runs_test: degenerate sample (all one symbol)");
  std::size_t runs = 1;
  for (std::size_t i = 1; i < n; ++i)
    if (binary.symbols[i] != binary.symbols[i - 1]) ++runs;
  const double dn = static_cast<double>(n);
  const double mu = 1.0 + 2.0 * static_cast<double>(np) *
                              static_cast<double>(n - np) / dn;
  const double var = (mu - 1.0) * (mu - 2.0) / (dn - 1.0);
  const double z = (static_cast<double>(runs) - mu) / std::sqrt(var);
  return make_two_tailed(z, normal_cdf(z), n, "runs");
}

}  // namespace exrate
