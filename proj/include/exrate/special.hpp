#pragma once

// Scalar special functions and quadrature helpers used across the
// statistical tests and Bayes-factor integrals.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace exrate {

struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Standard normal CDF.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Regularized lower incomplete gamma P(a, x), by series (x < a+1) or
// continued fraction (x >= a+1).
inline double gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::domain_error("gamma_p: a>0, x>=0 required");
  if (x == 0.0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    // series: P(a,x) = x^a e^{-x} / Gamma(a) * sum x^n / (a)_{n+1}
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 1000; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-16)
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    throw numerical_error("gamma_p: series did not converge");
  }
  // Lentz continued fraction for Q(a,x)
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) {
      const double q = std::exp(-x + a * std::log(x) - lg) * h;
      return 1.0 - q;
    }
  }
  throw numerical_error("gamma_p: continued fraction did not converge");
}

inline double gamma_q(double a, double x) { return 1.0 - gamma_p(a, x); }

// Chi-square CDF with `dof` degrees of freedom.
inline double chi_square_cdf(double x, double dof) { return gamma_p(dof / 2.0, x / 2.0); }

// Upper-tail probability of the Kolmogorov distribution,
// Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
inline double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  const double a = -2.0 * lambda * lambda;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = sign * std::exp(a * j * j);
    sum += term;
    if (std::fabs(term) < 1e-16) break;
    sign = -sign;
  }
  const double q = 2.0 * sum;
  return std::min(1.0, std::max(0.0, q));
}

inline double log_sum_exp(const std::vector<double>& logs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : logs) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : logs) s += std::exp(v - m);
  return m + std::log(s);
}

namespace detail {

inline double simpson(const std::function<double(double)>& f, double a, double b,
                      double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a,
                                   double b, double fa, double fm, double fb,
                                   double whole, double tol, int depth,
                                   double* err_acc) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(f, a, m, fa, flm, fm);
  const double right = simpson(f, m, b, fm, frm, fb);
  const double delta = left + right - whole;
  if (depth <= 0) throw numerical_error("adaptive quadrature: recursion limit");
  if (std::fabs(delta) <= 15.0 * tol) {
    if (err_acc) *err_acc += std::fabs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1, err_acc) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1, err_acc);
}

}  // namespace detail

// Adaptive Simpson quadrature of f over [a, b]; err_out receives an estimate
// of the absolute error if non-null.
inline double integrate_adaptive(const std::function<double(double)>& f, double a,
                                 double b, double tol = 1e-10,
                                 double* err_out = nullptr) {
  if (!(b > a)) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = detail::simpson(f, a, b, fa, fm, fb);
  double err = 0.0;
  const double r =
      detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 60, &err);
  if (err_out) *err_out = err;
  return r;
}

// Fixed composite 20-point Gauss-Legendre rule; used as an independent
// cross-check against the adaptive scheme.
inline double integrate_gauss(const std::function<double(double)>& f, double a,
                              double b, int panels = 64) {
  static const double xs[10] = {
      0.0765265211334973, 0.2277858511416451, 0.3737060887154195,
      0.5108670019508271, 0.6360536807265150, 0.7463319064601508,
      0.8391169718222188, 0.9122344282513259, 0.9639719272779138,
      0.9931285991850949};
  static const double ws[10] = {
      0.1527533871307258, 0.1491729864726037, 0.1420961093183820,
      0.1316886384491766, 0.1181945319615184, 0.1019301198172404,
      0.0832767415767048, 0.0626720483341091, 0.0406014298003869,
      0.0176140071391521};
  double total = 0.0;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double c = a + (p + 0.5) * h;
    const double hw = 0.5 * h;
    double s = 0.0;
    for (int i = 0; i < 10; ++i)
      s += ws[i] * (f(c - hw * xs[i]) + f(c + hw * xs[i]));
    total += s * hw;
  }
  return total;
}

// log(1 - exp(-y)) stable for small y.
inline double log1m_exp_neg(double y) {
  if (y <= 0.0) throw std::domain_error("log1m_exp_neg: y > 0 required");
  if (y < 0.693) return std::log(-std::expm1(-y));
  return std::log1p(-std::exp(-y));
}

}  // namespace exrate
