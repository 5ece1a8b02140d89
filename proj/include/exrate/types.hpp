#pragma once

// Core domain types shared across the pipeline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "exrate/special.hpp"

namespace exrate {

// --- calendar dates -------------------------------------------------------

struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;
};

// Days since 1970-01-01 (proleptic Gregorian).
inline std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline Date civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m),
              static_cast<int>(d)};
}

inline Date parse_iso_date(const std::string& s) {
  int y, m, d;
  char a, b;
  if (std::sscanf(s.c_str(), "%d%c%d%c%d", &y, &a, &m, &b, &d) != 5 || a != '-' ||
      b != '-' || m < 1 || m > 12 || d < 1 || d > 31)
    throw data_error("unparseable ISO date: '" + s + "'");
  return Date{y, m, d};
}

inline std::string format_iso_date(const Date& dt) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", dt.year, dt.month, dt.day);
  return buf;
}

// Calendar date of day index `t` (1-based) in a series starting at `start`.
inline Date date_of_day_index(const Date& start, double t) {
  const std::int64_t off =
      static_cast<std::int64_t>(std::llround(t)) - 1;
  return civil_from_days(days_from_civil(start.year, start.month, start.day) + off);
}

// --- point-process data ---------------------------------------------------

// Strictly increasing event times on (0, T].
struct ExceedanceSeries {
  std::vector<double> times;
  double horizon = 0.0;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }

  void validate() const {
    if (!(horizon > 0.0)) throw data_error("ExceedanceSeries: horizon must be > 0");
    double prev = 0.0;
    for (double t : times) {
      if (!(t > prev) || !(t <= horizon))
        throw data_error("ExceedanceSeries: times must satisfy 0 < t_1 < ... <= T");
      prev = t;
    }
  }
};

// Dated daily observations with an explicit missing mask.
struct DailySeries {
  Date start_date;
  std::vector<double> values;
  std::vector<bool> missing;

  std::size_t size() const { return values.size(); }

  void validate() const {
    if (values.empty() || values.size() != missing.size())
      throw data_error("DailySeries: values/missing must be nonempty and aligned");
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!missing[i] && (!std::isfinite(values[i]) || values[i] <= 0.0))
        throw data_error("DailySeries: non-missing values must be finite and > 0");
  }

  bool has_missing() const {
    return std::find(missing.begin(), missing.end(), true) != missing.end();
  }
};

// +/- encoding of above/below-threshold days.
enum class Symbol : std::uint8_t { below = 0, above = 1 };

struct BinarySequence {
  std::vector<Symbol> symbols;
  // original day index (1-based) at which each symbol starts; identity for
  // unmerged sequences, cluster start after relabelling
  std::vector<double> start_times;

  std::size_t size() const { return symbols.size(); }
  std::size_t n_plus() const {
    return static_cast<std::size_t>(
        std::count(symbols.begin(), symbols.end(), Symbol::above));
  }
};

// Nondecreasing counting process sampled on a grid.
struct CountingPath {
  std::vector<double> grid;
  std::vector<double> counts;
};

// A test statistic with all three tail p-values.
struct TestResult {
  double statistic = 0.0;
  double p_lower = 0.0;
  double p_upper = 0.0;
  double p_two_sided = 0.0;
  std::size_t n = 0;
  std::string method;
};

inline TestResult make_two_tailed(double stat, double p_lower, std::size_t n,
                                  std::string method) {
  TestResult r;
  r.statistic = stat;
  r.p_lower = p_lower;
  r.p_upper = 1.0 - p_lower;
  r.p_two_sided = std::min(1.0, 2.0 * std::min(r.p_lower, r.p_upper));
  r.n = n;
  r.method = std::move(method);
  return r;
}

}  // namespace exrate
