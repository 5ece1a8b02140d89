#pragma once

// Classical tests for the homogeneous model M0 (uniformity, change-point,
// log-linear fit) and Bayes factors comparing M0, the log-linear model M1
// and the one-change-point model M2.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "exrate/special.hpp"
#include "exrate/types.hpp"

namespace exrate {

inline double scaled_sum(const ExceedanceSeries& events) {
  double s = 0.0;
  for (double t : events.times) s += t / events.horizon;
  return s;
}

// U_n = (S_n - n/2) / sqrt(n/12), approximately standard normal under M0.
inline TestResult u_test(const ExceedanceSeries& events) {
  const std::size_t n = events.size();
  if (n == 0) throw data_error("u_test: need at least one event");
  const double sn = scaled_sum(events);
  const double u = (sn - n / 2.0) / std::sqrt(n / 12.0);
  return make_two_tailed(u, normal_cdf(u), n, "u");
}

// Military Handbook statistic -2 sum log(t_i/T) ~ chi-square(2n) under M0.
inline TestResult mhb_test(const ExceedanceSeries& events) {
  const std::size_t n = events.size();
  if (n == 0) throw data_error("mhb_test: need at least one event");
  double stat = 0.0;
  for (double t : events.times) {
    if (!(t > 0.0)) throw std::domain_error("mhb_test: t_i must be > 0");
    stat += std::log(t / events.horizon);
  }
  stat *= -2.0;
  return make_two_tailed(stat, chi_square_cdf(stat, 2.0 * n), n, "mhb");
}

// One-sample Kolmogorov-Smirnov test of rescaled arrivals against the
// uniform law, with the Stephens small-sample multiplier.
inline TestResult ks_test(const std::vector<double>& rescaled) {
  const std::size_t n = rescaled.size();
  if (n == 0) throw data_error("ks_test: need at least one value");
  double d = 0.0;
  double prev = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rescaled[i];
    if (u < prev) throw data_error("ks_test: input must be sorted");
    prev = u;
    const double fi = static_cast<double>(i);
    d = std::max(d, std::fabs(u - fi / n));
    d = std::max(d, std::fabs(u - (fi + 1.0) / n));
  }
  const double rn = std::sqrt(static_cast<double>(n));
  const double lambda = (rn + 0.12 + 0.11 / rn) * d;
  const double p_upper = kolmogorov_q(lambda);
  TestResult r;
  r.statistic = d;
  r.p_upper = p_upper;
  r.p_lower = 1.0 - p_upper;
  r.p_two_sided = std::min(1.0, 2.0 * std::min(r.p_lower, r.p_upper));
  r.n = n;
  r.method = "ks";
  return r;
}

inline double changepoint_g(double i, double n, double u) {
  return i * std::sqrt((1.0 - u) / u) - (n - i) * std::sqrt(u / (1.0 - u));
}

// Tail approximation for the change-point statistic (Ornstein-Uhlenbeck
// crossing probability); valid for large z. For small z the bracket turns
// negative and the approximation breaks down, so the result saturates at 1
// (no evidence against homogeneity).
inline double changepoint_tail(double z) {
  const double xi = std::log(0.99 / 0.01);
  const double p = std::sqrt(2.0 / 3.14159265358979323846) *
                   std::exp(-0.5 * z * z) * (xi * z - xi / z + 1.0 / z);
  if (!(p > 0.0)) return 1.0;
  return std::min(1.0, p);
}

// Akman-Raftery statistic for M0 against the one-change-point model M2.
inline TestResult changepoint_test(const ExceedanceSeries& events) {
  const double n = static_cast<double>(events.size());
  double best = -1.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const double u = events.times[i] / events.horizon;
    if (u < 0.01 || u > 0.99) continue;
    ++used;
    const double fi = static_cast<double>(i + 1);
    best = std::max(best, std::fabs(changepoint_g(fi - 1.0, n, u)));
    best = std::max(best, std::fabs(changepoint_g(fi, n, u)));
  }
  if (used == 0)
    throw data_error("changepoint_test: no arrival with t/T in [0.01, 0.99]");
  TestResult r;
  r.statistic = best / std::sqrt(n);
  r.p_upper = changepoint_tail(r.statistic);
  r.p_lower = 1.0 - r.p_upper;
  r.p_two_sided = std::min(1.0, 2.0 * std::min(r.p_lower, r.p_upper));
  r.n = events.size();
  r.method = "changepoint";
  return r;
}

// --- log-linear model M1 --------------------------------------------------

namespace detail {

// phi(x) = 1/x - 1/(e^x - 1); decreasing from 1 (x -> -inf) to 0 (x -> inf),
// with phi(0) = 1/2. This is the left side of the MLE equation in x = beta*T.
inline double loglinear_phi(double x) {
  if (std::fabs(x) < 1e-8) return 0.5 - x / 12.0;
  return 1.0 / x - 1.0 / std::expm1(x);
}

}  // namespace detail

// MLE of the log-linear slope beta: solves phi(beta*T) = S_n/n by bracketed
// bisection; beta = 0 exactly when S_n/n = 1/2.
inline double loglinear_mle(const ExceedanceSeries& events) {
  const std::size_t n = events.size();
  if (n < 2) throw data_error("loglinear_mle: need n >= 2");
  const double target = scaled_sum(events) / static_cast<double>(n);
  if (target == 0.5) return 0.0;
  // phi is decreasing: target < 1/2 needs x > 0, target > 1/2 needs x < 0
  double lo, hi;
  if (target < 0.5) {
    lo = 0.0;
    hi = 1.0;
    for (int it = 0; detail::loglinear_phi(hi) > target; ++it) {
      hi *= 2.0;
      if (it > 200) throw numerical_error("loglinear_mle: root not bracketed");
    }
  } else {
    hi = 0.0;
    lo = -1.0;
    for (int it = 0; detail::loglinear_phi(lo) < target; ++it) {
      lo *= 2.0;
      if (it > 200) throw numerical_error("loglinear_mle: root not bracketed");
    }
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (detail::loglinear_phi(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi) / events.horizon;
}

// Rescaling under the fitted log-linear rate: t'_i = (1-e^{-beta t_i}) /
// (1-e^{-beta T}); degenerates to t_i/T at beta = 0.
inline std::vector<double> loglinear_rescale(const ExceedanceSeries& events,
                                             double beta) {
  std::vector<double> out;
  out.reserve(events.size());
  if (beta == 0.0) {
    for (double t : events.times) out.push_back(t / events.horizon);
    return out;
  }
  const double denom = -std::expm1(-beta * events.horizon);
  for (double t : events.times) out.push_back(-std::expm1(-beta * t) / denom);
  return out;
}

// --- Bayes factors --------------------------------------------------------

struct BayesFactorResult {
  double B = 1.0;
  double log_B = 0.0;
  double two_log_B = 0.0;
  std::string evidence;
  double quadrature_error = 0.0;
};

// Table 2 evidence buckets for 2 log B.
inline std::string calibrate(double two_log_B) {
  if (two_log_B < 0.0) return "Negative";
  if (two_log_B < 2.0) return "Barely worth mentioning";
  if (two_log_B < 5.0) return "Positive";
  if (two_log_B < 10.0) return "Strong";
  return "Very strong";
}

namespace detail {

inline BayesFactorResult finish_bayes(double log_B, double err) {
  BayesFactorResult r;
  r.log_B = log_B;
  r.B = std::exp(log_B);
  r.two_log_B = 2.0 * log_B;
  r.evidence = calibrate(r.two_log_B);
  r.quadrature_error = err;
  return r;
}

// Log of the B01 integrand: -S_n y + (n-1) log(y / (1-e^{-y})).
inline double b01_log_integrand(double y, double sn, double nm1) {
  if (y <= 0.0) return 0.0;
  const double ratio = -std::expm1(-y) / y;  // (1-e^{-y})/y, -> 1 as y -> 0
  return -sn * y - nm1 * std::log(ratio);
}

}  // namespace detail

// Log of the integral in the B01 formula, evaluated by peak-shifted
// adaptive quadrature. Exposed separately so an independent quadrature
// scheme can be cross-checked against it.
inline double bayes01_log_integral(double sn, std::size_t n, double tol,
                                   double* err_out, bool use_gauss = false) {
  const double nm1 = static_cast<double>(n - 1);
  // locate the mode: f'(y) = -sn + (n-1) phi(y), phi decreasing (0, 1/2)
  double peak = 0.0;
  const double target = sn / nm1;
  if (nm1 > 0.0 && target < 0.5) {
    double lo = 0.0, hi = 1.0;
    while (detail::loglinear_phi(hi) > target) hi *= 2.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (detail::loglinear_phi(mid) > target ? lo : hi) = mid;
    }
    peak = 0.5 * (lo + hi);
  }
  const double fmax = detail::b01_log_integrand(peak, sn, nm1);
  double hi = peak + 1.0;
  while (detail::b01_log_integrand(hi, sn, nm1) > fmax - 60.0) hi *= 2.0;
  const auto g = [sn, nm1, fmax](double y) {
    return std::exp(detail::b01_log_integrand(y, sn, nm1) - fmax);
  };
  double err = 0.0;
  const double val = use_gauss ? integrate_gauss(g, 0.0, hi, 256)
                               : integrate_adaptive(g, 0.0, hi, tol, &err);
  if (!(val > 0.0) || !std::isfinite(val))
    throw numerical_error("bayes_factor_01: quadrature failed");
  if (err_out) *err_out = err / val;
  return fmax + std::log(val);
}

// B01 = 0.6449 (n-1) / integral (M0 against the log-linear model M1).
inline BayesFactorResult bayes_factor_01(const ExceedanceSeries& events,
                                         double tol = 1e-12) {
  const std::size_t n = events.size();
  if (n < 2) throw data_error("bayes_factor_01: need n >= 2");
  double err = 0.0;
  const double log_i = bayes01_log_integral(scaled_sum(events), n, tol, &err);
  const double log_B =
      std::log(0.6449) + std::log(static_cast<double>(n - 1)) - log_i;
  return detail::finish_bayes(log_B, err);
}

// Log of J_i = int_{a}^{b} x^{-(i+1/2)} (1-x)^{-(n-i+1/2)} dx, computed
// after the substitution x = sin^2(theta) which removes the endpoint
// singularities at 0 and 1.
inline double bayes02_log_j(double a, double b, std::size_t i, std::size_t n,
                            double tol, double* err_out) {
  if (!(b > a)) return -std::numeric_limits<double>::infinity();
  const double ci = 2.0 * static_cast<double>(i);
  const double cn = 2.0 * static_cast<double>(n - i);
  const double ta = std::asin(std::sqrt(a));
  const double tb = std::asin(std::sqrt(b));
  const auto logh = [ci, cn](double th) {
    double v = std::log(2.0);
    if (ci > 0.0) v -= ci * std::log(std::sin(th));
    if (cn > 0.0) v -= cn * std::log(std::cos(th));
    return v;
  };
  // the integrand has an interior minimum (at sin^2 = i/n) and attains its
  // maximum at one of the endpoints
  const double gmax = std::max(logh(ta), logh(tb));
  const auto g = [&](double th) { return std::exp(logh(th) - gmax); };
  double err = 0.0;
  const double val = integrate_adaptive(g, ta, tb, tol, &err);
  if (!(val > 0.0) || !std::isfinite(val))
    throw numerical_error("bayes_factor_02: quadrature failed on J_" +
                          std::to_string(i));
  if (err_out) *err_out = err / val;
  return gmax + std::log(val);
}

// B02 = 4 sqrt(pi) Gamma(n+1/2) / sum_i J_i Gamma(i+1/2) Gamma(n-i+1/2)
// (M0 against the one-change-point model M2), combined in log space.
inline BayesFactorResult bayes_factor_02(const ExceedanceSeries& events,
                                         double tol = 1e-12) {
  const std::size_t n = events.size();
  if (n == 0) throw data_error("bayes_factor_02: need n >= 1");
  std::vector<double> u;
  u.reserve(n + 2);
  u.push_back(0.0);
  for (double t : events.times) u.push_back(t / events.horizon);
  u.push_back(1.0);
  std::vector<double> log_terms;
  log_terms.reserve(n + 1);
  double max_err = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    double err = 0.0;
    const double lj = bayes02_log_j(u[i], u[i + 1], i, n, tol, &err);
    max_err = std::max(max_err, err);
    if (std::isfinite(lj))
      log_terms.push_back(lj + std::lgamma(i + 0.5) +
                          std::lgamma(static_cast<double>(n - i) + 0.5));
  }
  const double log_denom = log_sum_exp(log_terms);
  const double log_B = std::log(4.0) +
                       0.5 * std::log(3.14159265358979323846) +
                       std::lgamma(static_cast<double>(n) + 0.5) - log_denom;
  return detail::finish_bayes(log_B, max_err);
}

// B12 = B02 / B01 (log-linear model M1 against the change-point model M2).
inline BayesFactorResult bayes_factor_12(const ExceedanceSeries& events,
                                         double tol = 1e-12) {
  const auto b01 = bayes_factor_01(events, tol);
  const auto b02 = bayes_factor_02(events, tol);
  auto r = detail::finish_bayes(b02.log_B - b01.log_B,
                                b01.quadrature_error + b02.quadrature_error);
  return r;
}

}  // namespace exrate
