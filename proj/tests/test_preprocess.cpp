#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "exrate/preprocess.hpp"
#include "exrate/special.hpp"

using namespace exrate;

namespace {

DailySeries make_series(std::vector<double> values) {
  DailySeries s;
  s.values = std::move(values);
  s.missing.assign(s.values.size(), false);
  return s;
}

BinarySequence make_binary(const std::string& pattern) {
  BinarySequence b;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    b.symbols.push_back(pattern[i] == '+' ? Symbol::above : Symbol::below);
    b.start_times.push_back(static_cast<double>(i + 1));
  }
  return b;
}

}  // namespace

TEST_CASE("imputation fills only masked positions with window values") {
  DailySeries s = make_series({1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0});
  s.values[2] = 0.0;
  s.missing[2] = true;
  s.values[5] = 0.0;
  s.missing[5] = true;
  std::mt19937_64 rng(1);
  const DailySeries out = impute_missing(s, 2, rng);
  CHECK_FALSE(out.has_missing());
  for (std::size_t i : {0u, 1u, 3u, 4u, 6u})
    CHECK(out.values[i] == s.values[i]);
  // index 2: window indices 0..4 minus the masked ones -> {1, 2, 4}
  const std::set<double> w2{1.0, 2.0, 4.0};
  CHECK(w2.count(out.values[2]) == 1);
  // index 5: window indices 3..6 minus the masked one -> {4, 5, 7}
  const std::set<double> w5{4.0, 5.0, 7.0};
  CHECK(w5.count(out.values[5]) == 1);
}

TEST_CASE("imputation is deterministic under a fixed seed") {
  DailySeries s = make_series(std::vector<double>(200, 1.0));
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unif(1.0, 9.0);
  for (auto& v : s.values) v = unif(rng);
  for (std::size_t i = 0; i < s.size(); i += 13) {
    s.values[i] = 0.0;
    s.missing[i] = true;
  }
  std::mt19937_64 a(5), b(5);
  CHECK(impute_missing(s, 65, a).values == impute_missing(s, 65, b).values);
}

TEST_CASE("imputation with an all-missing window fails loudly") {
  DailySeries s = make_series({1.0, 2.0});
  s.missing[0] = s.missing[1] = true;
  std::mt19937_64 rng(2);
  CHECK_THROWS_AS(impute_missing(s, 65, rng), data_error);
}

TEST_CASE("seasonal fit recovers exact harmonic coefficients") {
  const double a = 0.4, b = -0.25, c = 1.7;
  SeasonalFit truth;
  DailySeries s;
  for (int t = 1; t <= 1500; ++t) {
    s.values.push_back(std::exp(a * std::cos(truth.omega * t) +
                                b * std::sin(truth.omega * t) + c));
    s.missing.push_back(false);
  }
  const SeasonalFit fit = fit_seasonal(s, false);
  CHECK(fit.a == Catch::Approx(a).margin(1e-8));
  CHECK(fit.b == Catch::Approx(b).margin(1e-8));
  CHECK(fit.c == Catch::Approx(c).margin(1e-8));
  CHECK(fit.beta == 0.0);
  // removing the fitted signal leaves a flat unit series
  const DailySeries flat = deseasonalise(s, fit);
  for (double v : flat.values) CHECK(v == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("seasonal fit with trend recovers the log-linear slope") {
  const double a = 0.3, b = 0.1, c = 0.9, beta = 3e-4;
  SeasonalFit truth;
  DailySeries s;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int t = 1; t <= 4000; ++t) {
    s.values.push_back(std::exp(a * std::cos(truth.omega * t) +
                                b * std::sin(truth.omega * t) + c -
                                beta * t + noise(rng)));
    s.missing.push_back(false);
  }
  const SeasonalFit fit = fit_seasonal(s, true);
  CHECK(fit.a == Catch::Approx(a).margin(0.01));
  CHECK(fit.b == Catch::Approx(b).margin(0.01));
  CHECK(fit.beta == Catch::Approx(beta).margin(3e-5));
}

TEST_CASE("seasonal fit rejects incomplete or non-positive series") {
  DailySeries s = make_series({1.0, 2.0, 3.0});
  s.missing[1] = true;
  CHECK_THROWS_AS(fit_seasonal(s, false), data_error);
  DailySeries neg = make_series({1.0, -2.0, 3.0});
  CHECK_THROWS_AS(fit_seasonal(neg, false), data_error);
}

TEST_CASE("quantile threshold is the ceil(q n) order statistic") {
  const DailySeries s =
      make_series({3.0, 1.0, 4.0, 1.5, 5.0, 9.0, 2.0, 6.0, 8.0, 7.0});
  const auto r90 = threshold_exceedances(s, 0.9);
  CHECK(r90.threshold == 8.0);  // 9th smallest of 10
  CHECK(r90.events.times == std::vector<double>{6.0});
  CHECK(r90.events.horizon == 10.0);
  const auto r25 = threshold_exceedances(s, 0.25);
  CHECK(r25.threshold == 2.0);  // ceil(2.5) = 3rd smallest
  CHECK(r25.events.times == std::vector<double>({1.0, 3.0, 5.0, 6.0, 8.0, 9.0, 10.0}));
  CHECK(r25.binary.n_plus() == 7);
  CHECK_THROWS_AS(threshold_exceedances(s, 0.0), std::domain_error);
  CHECK_THROWS_AS(threshold_exceedances(s, 1.0), std::domain_error);
}

TEST_CASE("thresholding keeps roughly (1-q) of a continuous sample above") {
  DailySeries s;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < 5000; ++i) {
    s.values.push_back(unif(rng));
    s.missing.push_back(false);
  }
  const auto r = threshold_exceedances(s, 0.9);
  // strictly-above with ties impossible a.s.: exactly n - ceil(qn) events
  CHECK(r.events.size() == 500);
}

TEST_CASE("declusterisation merges clusters and keeps the earliest maximum") {
  const std::vector<double> v{5.0, 9.0, 1.0, 7.0, 2.0, 3.0, 8.0};
  const BinarySequence b = make_binary("++-+--+");

  const auto r2 = decluster(b, v, 2);
  CHECK(r2.n_clusters == 2);
  CHECK(r2.events.times == std::vector<double>({2.0, 7.0}));
  CHECK(r2.relabelled.start_times == std::vector<double>({1.0, 7.0}));
  CHECK(r2.relabelled_values == std::vector<double>({9.0, 8.0}));
  CHECK(r2.relabelled.n_plus() == 2);

  const auto r1 = decluster(b, v, 1);
  CHECK(r1.n_clusters == 3);
  CHECK(r1.events.times == std::vector<double>({2.0, 4.0, 7.0}));
  CHECK(r1.relabelled.start_times == std::vector<double>({1.0, 4.0, 6.0, 7.0}));
  CHECK(r1.relabelled.symbols[2] == Symbol::below);
}

TEST_CASE("declusterisation tie-break picks the earliest cluster maximum") {
  const std::vector<double> v{6.0, 6.0, 1.0};
  const auto r = decluster(make_binary("++-"), v, 1);
  CHECK(r.events.times == std::vector<double>{1.0});
}

TEST_CASE("declusterisation keeps isolated events and merges closing minuses") {
  const std::vector<double> v{9.0, 1.0, 8.0, 1.0, 7.0};
  const auto r = decluster(make_binary("+-+-+"), v, 1);
  CHECK(r.events.times == std::vector<double>({1.0, 3.0, 5.0}));
  // each cluster absorbs its closing minus into a single plus
  CHECK(r.relabelled.size() == 3);
  CHECK(r.relabelled.n_plus() == 3);
  CHECK(r.relabelled.start_times == std::vector<double>({1.0, 3.0, 5.0}));
}

TEST_CASE("declusterisation input contracts") {
  const BinarySequence b = make_binary("+-");
  CHECK_THROWS_AS(decluster(b, {1.0}, 1), data_error);
  CHECK_THROWS_AS(decluster(b, {1.0, 2.0}, 0), std::domain_error);
}

TEST_CASE("runs test matches hand arithmetic on an alternating sequence") {
  const BinarySequence b = make_binary("+-+-+-+-+-");
  const TestResult r = runs_test(b);
  // runs = 10, mu = 1 + 2*5*5/10 = 6, var = 5*4/9
  const double z = 4.0 / std::sqrt(20.0 / 9.0);
  CHECK(r.statistic == Catch::Approx(z).epsilon(1e-12));
  CHECK(r.statistic == Catch::Approx(2.6833).margin(5e-5));
  CHECK(r.p_two_sided == Catch::Approx(2.0 * (1.0 - normal_cdf(z))).epsilon(1e-10));
  CHECK(r.p_two_sided < 0.01);
}

TEST_CASE("runs test is near zero for a balanced mixed sequence") {
  const TestResult r = runs_test(make_binary("++--+-+--+"));
  // runs = 7, mu = 6, var = 20/9
  CHECK(r.statistic == Catch::Approx(1.0 / std::sqrt(20.0 / 9.0)).epsilon(1e-12));
  CHECK(r.p_two_sided > 0.4);
}

TEST_CASE("runs test rejects degenerate sequences") {
  CHECK_THROWS_AS(runs_test(make_binary("+")), data_error);
  CHECK_THROWS_AS(runs_test(make_binary("++++")), data_error);
  CHECK_THROWS_AS(runs_test(make_binary("----")), data_error);
}

TEST_CASE("runs test calibration under independence") {
  std::mt19937_64 rng(6);
  std::bernoulli_distribution coin(0.3);
  int reject = 0;
  const int sims = 2000;
  for (int s = 0; s < sims; ++s) {
    BinarySequence b;
    for (int i = 0; i < 300; ++i) {
      b.symbols.push_back(coin(rng) ? Symbol::above : Symbol::below);
      b.start_times.push_back(i + 1.0);
    }
    const std::size_t np = b.n_plus();
    if (np == 0 || np == b.size()) continue;
    if (runs_test(b).p_two_sided < 0.05) ++reject;
  }
  CHECK(static_cast<double>(reject) / sims == Catch::Approx(0.05).margin(0.02));
}
