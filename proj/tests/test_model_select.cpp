#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "exrate/model_select.hpp"
#include "exrate/simulate.hpp"

using namespace exrate;

namespace {

ExceedanceSeries uniform_events(std::size_t n, double horizon,
                                std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, horizon);
  ExceedanceSeries e;
  e.horizon = horizon;
  for (std::size_t i = 0; i < n; ++i) e.times.push_back(unif(rng));
  std::sort(e.times.begin(), e.times.end());
  return e;
}

// Plain trapezoid-rule oracle for the B01 integral, independent of the
// adaptive log-space quadrature in the library.
double b01_integral_oracle(double sn, std::size_t n) {
  const double nm1 = static_cast<double>(n - 1);
  const double upper = 200.0;
  const std::size_t steps = 400000;
  const double h = upper / steps;
  double acc = 0.0;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double y = i * h;
    const double f =
        y == 0.0 ? 1.0
                 : std::exp(-sn * y) * std::pow(y / -std::expm1(-y), nm1);
    acc += (i == 0 || i == steps) ? 0.5 * f : f;
  }
  return acc * h;
}

}  // namespace

TEST_CASE("u statistic: symmetric samples give U = 0") {
  ExceedanceSeries e{{2.0, 5.0, 8.0}, 10.0};
  const TestResult r = u_test(e);
  CHECK(r.statistic == Catch::Approx(0.0).margin(1e-12));
  CHECK(r.p_two_sided == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("two-sided normal p-value at U = -0.4781") {
  CHECK(2.0 * normal_cdf(-0.4781) == Catch::Approx(0.6326).margin(5e-4));
  // the same number must come out of the test object
  ExceedanceSeries e{{1.0, 2.0, 3.0}, 10.0};
  const TestResult r = u_test(e);
  const double sn = 0.6;
  CHECK(r.statistic == Catch::Approx((sn - 1.5) / std::sqrt(0.25)).epsilon(1e-12));
  CHECK(r.p_two_sided ==
        Catch::Approx(2.0 * normal_cdf(r.statistic)).epsilon(1e-10));
}

TEST_CASE("u test rejects an empty series") {
  CHECK_THROWS_AS(u_test(ExceedanceSeries{{}, 1.0}), data_error);
}

TEST_CASE("mhb statistic for a single event at T/e^2") {
  ExceedanceSeries e{{10.0 * std::exp(-2.0)}, 10.0};
  const TestResult r = mhb_test(e);
  CHECK(r.statistic == Catch::Approx(4.0).epsilon(1e-12));
  CHECK(r.p_upper == Catch::Approx(std::exp(-2.0)).epsilon(1e-8));
}

TEST_CASE("chi-square lower-tail p at 496.3036 with 514 dof") {
  CHECK(chi_square_cdf(496.3036, 514.0) == Catch::Approx(0.2954).margin(2e-3));
}

TEST_CASE("mhb statistic mean is 2n under homogeneity") {
  std::mt19937_64 rng(21);
  const std::size_t n = 257;
  double acc = 0.0;
  const int sims = 2000;
  for (int s = 0; s < sims; ++s)
    acc += mhb_test(uniform_events(n, 1.0, rng)).statistic;
  CHECK(acc / sims == Catch::Approx(514.0).margin(3.0 * std::sqrt(1028.0 / sims)));
}

TEST_CASE("mhb rejects t = 0") {
  CHECK_THROWS_AS(mhb_test(ExceedanceSeries{{0.0, 1.0}, 2.0}),
                  std::domain_error);
}

TEST_CASE("ks statistic of a perfectly spaced sample is 1/(2n)") {
  const std::size_t n = 20;
  std::vector<double> u;
  for (std::size_t i = 1; i <= n; ++i)
    u.push_back((static_cast<double>(i) - 0.5) / n);
  CHECK(ks_test(u).statistic == Catch::Approx(1.0 / (2.0 * n)).epsilon(1e-12));
}

TEST_CASE("ks p-value at D = 0.0633, n = 257") {
  const double rn = std::sqrt(257.0);
  const double lambda = (rn + 0.12 + 0.11 / rn) * 0.0633;
  CHECK(kolmogorov_q(lambda) == Catch::Approx(0.246).margin(2e-3));
}

TEST_CASE("ks test rejects unsorted input") {
  CHECK_THROWS_AS(ks_test({0.5, 0.2}), data_error);
}

TEST_CASE("scale invariance of the homogeneity tests") {
  ExceedanceSeries e{{1.0, 4.0, 7.5, 9.0}, 10.0};
  ExceedanceSeries scaled{{100.0, 400.0, 750.0, 900.0}, 1000.0};
  CHECK(u_test(e).statistic == Catch::Approx(u_test(scaled).statistic).epsilon(1e-12));
  CHECK(mhb_test(e).statistic ==
        Catch::Approx(mhb_test(scaled).statistic).epsilon(1e-12));
  CHECK(changepoint_test(e).statistic ==
        Catch::Approx(changepoint_test(scaled).statistic).epsilon(1e-12));
}

TEST_CASE("change-point tail approximation at z = 2.8949") {
  CHECK(changepoint_tail(2.8949) == Catch::Approx(0.1459).margin(5e-4));
  CHECK(changepoint_tail(0.01) == 1.0);  // clamped where the formula blows up
}

TEST_CASE("change-point statistic for a single central event") {
  ExceedanceSeries e{{0.5}, 1.0};
  const TestResult r = changepoint_test(e);
  CHECK(changepoint_g(0.0, 1.0, 0.5) == Catch::Approx(-1.0).epsilon(1e-12));
  CHECK(changepoint_g(1.0, 1.0, 0.5) == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(r.statistic == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("g is antisymmetric and the statistic is reversal invariant") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> unif(0.02, 0.98);
  for (int it = 0; it < 200; ++it) {
    const double u = unif(rng);
    const double i = std::floor(unif(rng) * 30.0);
    CHECK(changepoint_g(i, 30.0, u) ==
          Catch::Approx(-changepoint_g(30.0 - i, 30.0, 1.0 - u)).margin(1e-9));
  }
  const ExceedanceSeries e = uniform_events(80, 1.0, rng);
  ExceedanceSeries rev;
  rev.horizon = 1.0;
  for (auto it = e.times.rbegin(); it != e.times.rend(); ++it)
    rev.times.push_back(1.0 - *it);
  CHECK(changepoint_test(e).statistic ==
        Catch::Approx(changepoint_test(rev).statistic).margin(1e-10));
}

TEST_CASE("change-point test needs an interior arrival") {
  CHECK_THROWS_AS(changepoint_test(ExceedanceSeries{{0.001}, 1.0}), data_error);
}

TEST_CASE("test calibration at the 5% level under homogeneity") {
  std::mt19937_64 rng(23);
  const int sims = 2000;
  int rej_u = 0, rej_mhb = 0, rej_ks = 0, rej_cp = 0;
  for (int s = 0; s < sims; ++s) {
    const ExceedanceSeries e = uniform_events(257, 1.0, rng);
    if (u_test(e).p_two_sided < 0.05) ++rej_u;
    if (mhb_test(e).p_two_sided < 0.05) ++rej_mhb;
    if (ks_test(time_rescale(e, StepRate{{}, {1.0}, 1.0})).p_upper < 0.05)
      ++rej_ks;
  }
  CHECK(rej_u / static_cast<double>(sims) == Catch::Approx(0.05).margin(0.02));
  CHECK(rej_mhb / static_cast<double>(sims) == Catch::Approx(0.05).margin(0.02));
  CHECK(rej_ks / static_cast<double>(sims) == Catch::Approx(0.05).margin(0.02));
  // the tail formula is asymptotic; wider band, n = 133 per its derivation
  for (int s = 0; s < sims; ++s)
    if (changepoint_test(uniform_events(133, 1.0, rng)).p_upper < 0.05)
      ++rej_cp;
  const double rate_cp = rej_cp / static_cast<double>(sims);
  CHECK(rate_cp >= 0.02);
  CHECK(rate_cp <= 0.09);
}

TEST_CASE("log-linear MLE is zero exactly at the symmetric sum") {
  ExceedanceSeries e{{2.0, 8.0}, 10.0};  // S_n/n = 1/2
  CHECK(loglinear_mle(e) == 0.0);
}

TEST_CASE("log-linear MLE residual vanishes at the root") {
  std::mt19937_64 rng(24);
  for (int it = 0; it < 30; ++it) {
    const ExceedanceSeries e = uniform_events(40, 100.0, rng);
    const double beta = loglinear_mle(e);
    const double x = beta * e.horizon;
    const double lhs = std::fabs(x) < 1e-8
                           ? 0.5 - x / 12.0
                           : 1.0 / x - 1.0 / std::expm1(x);
    CHECK(lhs == Catch::Approx(scaled_sum(e) / 40.0).margin(1e-10));
  }
}

TEST_CASE("log-linear MLE recovers a synthetic decay rate") {
  const double beta = 3e-4, horizon = 6206.0;
  const double c = 0.2131;  // tuned so the expected count is about 600
  std::mt19937_64 rng(25);
  double acc = 0.0;
  const int runs = 20;
  for (int i = 0; i < runs; ++i) {
    const auto sim = simulate_thinning(
        [=](double t) { return c * std::exp(-beta * t); }, c, horizon, rng);
    acc += loglinear_mle(sim);
  }
  CHECK(acc / runs == Catch::Approx(beta).margin(1e-4));
}

TEST_CASE("log-linear rescaling formula") {
  ExceedanceSeries e{{0.5}, 1.0};
  CHECK(loglinear_rescale(e, 0.0)[0] == 0.5);
  CHECK(loglinear_rescale(e, 1.0)[0] ==
        Catch::Approx(-std::expm1(-0.5) / -std::expm1(-1.0)).epsilon(1e-12));
  CHECK(loglinear_rescale(e, 1.0)[0] == Catch::Approx(0.622459).margin(1e-6));
  ExceedanceSeries ends{{0.0, 10.0}, 10.0};
  const auto u = loglinear_rescale(ends, 0.3);
  CHECK(u.front() == 0.0);
  CHECK(u.back() == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("evidence calibration buckets") {
  CHECK(calibrate(-3.0) == "Negative");
  CHECK(calibrate(1.0) == "Barely worth mentioning");
  CHECK(calibrate(3.0) == "Positive");
  CHECK(calibrate(7.0) == "Strong");
  CHECK(calibrate(12.0) == "Very strong");
}

TEST_CASE("B01 integral matches the trapezoid oracle") {
  struct Case {
    double sn;
    std::size_t n;
  };
  for (const Case c : {Case{1.0, 2}, Case{2.3, 6}, Case{5.1, 11}}) {
    double err = 0.0;
    const double lib = bayes01_log_integral(c.sn, c.n, 1e-12, &err);
    CHECK(lib == Catch::Approx(std::log(b01_integral_oracle(c.sn, c.n))).margin(1e-6));
    const double gauss = bayes01_log_integral(c.sn, c.n, 1e-12, nullptr, true);
    CHECK(lib == Catch::Approx(gauss).margin(1e-8));
  }
}

TEST_CASE("B01 on a moderately large sample stays finite and consistent") {
  std::mt19937_64 rng(26);
  const ExceedanceSeries e = uniform_events(257, 6206.0, rng);
  const auto r = bayes_factor_01(e);
  CHECK(std::isfinite(r.log_B));
  CHECK(r.two_log_B == Catch::Approx(2.0 * r.log_B).epsilon(1e-12));
  CHECK(r.B == Catch::Approx(std::exp(r.log_B)).epsilon(1e-12));
  const double gauss = bayes01_log_integral(scaled_sum(e), 257, 1e-12, nullptr, true);
  double err = 0.0;
  CHECK(bayes01_log_integral(scaled_sum(e), 257, 1e-12, &err) ==
        Catch::Approx(gauss).margin(1e-7));
}

TEST_CASE("B02 closed form: one central event gives B = 1") {
  ExceedanceSeries e{{0.5}, 1.0};
  const auto r = bayes_factor_02(e);
  CHECK(r.B == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("B02 is invariant under time reversal") {
  std::mt19937_64 rng(27);
  const ExceedanceSeries e = uniform_events(15, 1.0, rng);
  ExceedanceSeries rev;
  rev.horizon = 1.0;
  for (auto it = e.times.rbegin(); it != e.times.rend(); ++it)
    rev.times.push_back(1.0 - *it);
  CHECK(bayes_factor_02(e).log_B ==
        Catch::Approx(bayes_factor_02(rev).log_B).margin(1e-7));
}

TEST_CASE("B12 is the ratio of the other two factors") {
  std::mt19937_64 rng(28);
  const ExceedanceSeries e = uniform_events(30, 10.0, rng);
  const auto b01 = bayes_factor_01(e);
  const auto b02 = bayes_factor_02(e);
  const auto b12 = bayes_factor_12(e);
  CHECK(b12.log_B == Catch::Approx(b02.log_B - b01.log_B).margin(1e-12));
}

TEST_CASE("Bayes factors demand enough events") {
  CHECK_THROWS_AS(bayes_factor_01(ExceedanceSeries{{0.5}, 1.0}), data_error);
  CHECK_THROWS_AS(bayes_factor_02(ExceedanceSeries{{}, 1.0}), data_error);
}
