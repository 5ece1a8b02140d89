#pragma once

// File formats: daily-series CSV, exceedance tables, ensemble tables,
// seasonal-fit blocks and the JSON report documents.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "exrate/model_select.hpp"
#include "exrate/posterior.hpp"
#include "exrate/preprocess.hpp"
#include "exrate/validation.hpp"

namespace exrate {

using json = nlohmann::json;

// FNV-1a, used for the provenance line on output files.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string provenance_line(const std::string& config_dump,
                                   std::uint64_t seed) {
  std::ostringstream os;
  os << "# config=" << std::hex << fnv1a(config_dump) << std::dec
     << " seed=" << seed;
  return os.str();
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

// --- daily series CSV -----------------------------------------------------

// Header `date,value`; ISO dates; an empty value field marks a missing day.
inline DailySeries read_daily_csv(std::istream& in) {
  DailySeries s;
  std::string line;
  std::size_t line_no = 0;
  bool first_row = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = detail::split_csv_line(line);
    if (line_no == 1 && !fields.empty() && fields[0] == "date") continue;
    if (fields.size() != 2)
      throw data_error("CSV line " + std::to_string(line_no) +
                       ": expected 'date,value'");
    Date d;
    try {
      d = parse_iso_date(fields[0]);
    } catch (const data_error& e) {
      throw data_error("CSV line " + std::to_string(line_no) + ": " + e.what());
    }
    if (first_row) {
      s.start_date = d;
      first_row = false;
    }
    if (fields[1].empty()) {
      s.values.push_back(0.0);
      s.missing.push_back(true);
    } else {
      try {
        s.values.push_back(std::stod(fields[1]));
      } catch (const std::exception&) {
        throw data_error("CSV line " + std::to_string(line_no) +
                         ": unparseable value '" + fields[1] + "'");
      }
      s.missing.push_back(false);
    }
  }
  if (s.values.empty()) throw data_error("CSV input holds no data rows");
  return s;
}

inline DailySeries read_daily_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open input file: " + path);
  return read_daily_csv(in);
}

// --- exceedance series ----------------------------------------------------

inline void write_exceedances(std::ostream& out, const ExceedanceSeries& events,
                              const std::string& provenance = "") {
  if (!provenance.empty()) out << provenance << "\n";
  out << "# horizon=" << std::setprecision(17) << events.horizon << "\n";
  out << "t,\n";
  for (double t : events.times) out << std::setprecision(17) << t << ",\n";
}

inline ExceedanceSeries read_exceedances(std::istream& in) {
  ExceedanceSeries s;
  std::string line;
  bool have_horizon = false;
  while (std::getline(in, line)) {
    if (line.rfind("# horizon=", 0) == 0) {
      s.horizon = std::stod(line.substr(10));
      have_horizon = true;
      continue;
    }
    if (line.empty() || line[0] == '#' || line.rfind("t,", 0) == 0) continue;
    const auto fields = detail::split_csv_line(line);
    try {
      s.times.push_back(std::stod(fields[0]));
    } catch (const std::exception&) {
      throw data_error("exceedance file: unparseable time '" + fields[0] + "'");
    }
  }
  if (!have_horizon) throw data_error("exceedance file: missing horizon line");
  s.validate();
  return s;
}

inline ExceedanceSeries read_exceedances_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open exceedance file: " + path);
  return read_exceedances(in);
}

// --- seasonal fit ---------------------------------------------------------

inline void write_seasonal_fit(std::ostream& out, const SeasonalFit& fit,
                               const std::string& provenance = "") {
  if (!provenance.empty()) out << provenance << "\n";
  out << std::setprecision(17) << "a=" << fit.a << "\nb=" << fit.b
      << "\nc=" << fit.c << "\nbeta=" << fit.beta << "\nomega=" << fit.omega
      << "\n";
}

inline SeasonalFit read_seasonal_fit(std::istream& in) {
  SeasonalFit fit;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw data_error("seasonal fit file: expected key=value, got '" + line + "'");
    const std::string key = line.substr(0, eq);
    const double value = std::stod(line.substr(eq + 1));
    if (key == "a")
      fit.a = value;
    else if (key == "b")
      fit.b = value;
    else if (key == "c")
      fit.c = value;
    else if (key == "beta")
      fit.beta = value;
    else if (key == "omega")
      fit.omega = value;
    else
      throw data_error("seasonal fit file: unknown key '" + key + "'");
  }
  return fit;
}

// --- posterior ensemble ---------------------------------------------------

// Row per sample: k, s_1..s_k, h_0..h_k. Diagnostics as leading comments.
inline void write_ensemble(std::ostream& out, const PosteriorEnsemble& ens,
                           const std::string& provenance = "") {
  if (!provenance.empty()) out << provenance << "\n";
  out << "# horizon=" << std::setprecision(17) << ens.horizon << "\n";
  static const char* names[4] = {"height", "position", "birth", "death"};
  for (std::size_t m = 0; m < 4; ++m)
    out << "# accept_" << names[m] << "="
        << ens.diagnostics.acceptance_rate(static_cast<MoveType>(m)) << "\n";
  for (const auto& s : ens.samples) {
    out << s.k();
    for (double v : s.changepoints) out << "," << std::setprecision(17) << v;
    for (double v : s.heights) out << "," << std::setprecision(17) << v;
    out << "\n";
  }
}

inline PosteriorEnsemble read_ensemble(std::istream& in) {
  PosteriorEnsemble ens;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# horizon=", 0) == 0) {
      ens.horizon = std::stod(line.substr(10));
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    const auto fields = detail::split_csv_line(line);
    const std::size_t k = static_cast<std::size_t>(std::stoul(fields[0]));
    if (fields.size() != 1 + k + (k + 1))
      throw data_error("ensemble file: row width does not match k");
    StepRate rate;
    rate.horizon = ens.horizon;
    for (std::size_t j = 0; j < k; ++j)
      rate.changepoints.push_back(std::stod(fields[1 + j]));
    for (std::size_t j = 0; j <= k; ++j)
      rate.heights.push_back(std::stod(fields[1 + k + j]));
    rate.validate();
    ens.samples.push_back(std::move(rate));
  }
  if (!(ens.horizon > 0.0)) throw data_error("ensemble file: missing horizon");
  return ens;
}

inline PosteriorEnsemble read_ensemble_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open ensemble file: " + path);
  return read_ensemble(in);
}

// --- JSON documents -------------------------------------------------------

inline json test_result_json(const TestResult& t) {
  return json{{"statistic", t.statistic}, {"p_lower", t.p_lower},
              {"p_upper", t.p_upper},     {"p_two_sided", t.p_two_sided},
              {"n", t.n},                 {"method", t.method}};
}

inline json bayes_factor_json(const BayesFactorResult& b) {
  return json{{"B", b.B},
              {"log_B", b.log_B},
              {"two_log_B", b.two_log_B},
              {"evidence", b.evidence},
              {"quadrature_error", b.quadrature_error}};
}

inline json density_json(const DensityEstimate& d, bool with_median) {
  json j{{"mode", d.mode}, {"q25", d.q25}, {"q75", d.q75},
         {"bandwidth", d.bandwidth}};
  if (with_median) j["median"] = d.median;
  return j;
}

// Table-3/4-style posterior summary: k pmf, per-change-point location
// block (with calendar dates when a start date is given), per-height block.
inline json posterior_summary_json(const PosteriorEnsemble& ens, double loc_bw,
                                   double h_bw, const Date* start_date = nullptr) {
  json j;
  const auto pmf = k_distribution(ens);
  json jk = json::object();
  std::size_t k_hat = 0;
  double best = -1.0;
  for (const auto& [k, p] : pmf) {
    jk[std::to_string(k)] = p;
    if (p > best) {
      best = p;
      k_hat = k;
    }
  }
  j["k_pmf"] = jk;
  j["k_hat"] = k_hat;
  j["changepoints"] = json::array();
  if (k_hat > 0)
    for (const auto& d : location_summaries(ens, k_hat, loc_bw)) {
      json cj = density_json(d, false);
      if (start_date) {
        cj["date_mode"] = format_iso_date(date_of_day_index(*start_date, d.mode));
        cj["date_q25"] = format_iso_date(date_of_day_index(*start_date, d.q25));
        cj["date_q75"] = format_iso_date(date_of_day_index(*start_date, d.q75));
      }
      j["changepoints"].push_back(cj);
    }
  j["heights"] = json::array();
  for (const auto& d : height_summaries(ens, k_hat, h_bw))
    j["heights"].push_back(density_json(d, true));
  return j;
}

// Per-segment classical tests and Bayes factors.
inline json segment_report_json(const ExceedanceSeries& events,
                                const std::vector<double>& changepoints) {
  json segments = json::array();
  std::vector<double> bounds{0.0};
  for (double s : changepoints) bounds.push_back(s);
  bounds.push_back(events.horizon);
  for (std::size_t j = 0; j + 1 < bounds.size(); ++j) {
    const double lo = bounds[j], hi = bounds[j + 1];
    ExceedanceSeries seg;
    seg.horizon = hi - lo;
    for (double t : events.times)
      if (t > lo && (t <= hi || (j + 2 == bounds.size() && t <= events.horizon)))
        seg.times.push_back(t - lo);
    json sj{{"lo", lo}, {"hi", hi}, {"n", seg.size()}};
    if (seg.size() < 2) {
      sj["skipped"] = "fewer than 2 events in segment";
    } else {
      sj["u_test"] = test_result_json(u_test(seg));
      sj["mhb_test"] = test_result_json(mhb_test(seg));
      std::vector<double> u;
      for (double t : seg.times) u.push_back(t / seg.horizon);
      sj["ks_test"] = test_result_json(ks_test(u));
      try {
        sj["changepoint_test"] = test_result_json(changepoint_test(seg));
      } catch (const data_error& e) {
        sj["changepoint_test"] = json{{"skipped", e.what()}};
      }
      try {
        const auto b01 = bayes_factor_01(seg);
        const auto b02 = bayes_factor_02(seg);
        const auto b12 = bayes_factor_12(seg);
        sj["bayes_factor_01"] = bayes_factor_json(b01);
        sj["bayes_factor_02"] = bayes_factor_json(b02);
        sj["bayes_factor_12"] = bayes_factor_json(b12);
      } catch (const numerical_error& e) {
        sj["bayes_factors_error"] = e.what();
      }
    }
    segments.push_back(sj);
  }
  return json{{"segments", segments}};
}

inline json segment_tests_json(const std::vector<SegmentRunsTest>& tests) {
  json arr = json::array();
  for (const auto& t : tests) {
    json tj{{"lo", t.lo}, {"hi", t.hi}};
    if (t.tested)
      tj["runs_test"] = test_result_json(t.result);
    else
      tj["skipped"] = t.skip_reason;
    arr.push_back(tj);
  }
  return arr;
}

inline json step_rate_json(const StepRate& r) {
  return json{{"k", r.k()},
              {"changepoints", r.changepoints},
              {"heights", r.heights},
              {"horizon", r.horizon}};
}

inline json pipeline_report_json(const PipelineReport& rep) {
  json j;
  j["preprocess"] = {{"missing_fraction", rep.missing_fraction},
                     {"threshold", rep.threshold},
                     {"n_raw_exceedances", rep.n_raw_exceedances},
                     {"n_clusters", rep.n_clusters}};
  if (rep.whole_series_runs_valid)
    j["preprocess"]["whole_series_runs"] = test_result_json(rep.whole_series_runs);
  j["rough_estimate"] = step_rate_json(rep.rough_estimate);
  j["raw_segment_tests"] = segment_tests_json(rep.raw_segment_tests);
  j["iterations"] = json::array();
  for (const auto& it : rep.iterations)
    j["iterations"].push_back(
        {{"estimate", step_rate_json(it.estimate)},
         {"declustered_segment_tests",
          segment_tests_json(it.declustered_segment_tests)},
         {"all_segments_accept", it.all_segments_accept}});
  j["converged"] = rep.converged;
  j["final_estimate"] = step_rate_json(rep.final_estimate);
  return j;
}

// Replication output: grid, mean, lo, hi, observed.
inline void write_replication_csv(std::ostream& out, const ReplicationEnsemble& r,
                                  const CountingPath& observed,
                                  const std::string& provenance = "") {
  if (!provenance.empty()) out << provenance << "\n";
  out << "grid,mean,lo,hi,observed\n";
  for (std::size_t g = 0; g < r.pointwise_mean.grid.size(); ++g)
    out << r.pointwise_mean.grid[g] << "," << r.pointwise_mean.counts[g] << ","
        << r.envelope_lo[g] << "," << r.envelope_hi[g] << ","
        << observed.counts[g] << "\n";
}

inline void write_density_csv(std::ostream& out, const DensityEstimate& d,
                              const std::string& provenance = "") {
  if (!provenance.empty()) out << provenance << "\n";
  out << "grid,density\n";
  for (std::size_t g = 0; g < d.grid.size(); ++g)
    out << d.grid[g] << "," << d.density[g] << "\n";
}

}  // namespace exrate
