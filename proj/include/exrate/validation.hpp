#pragma once

// Posterior-predictive replication against observed counting paths, and
// the iterative decluster/estimate workflow.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "exrate/model_select.hpp"
#include "exrate/posterior.hpp"
#include "exrate/preprocess.hpp"
#include "exrate/simulate.hpp"

namespace exrate {

struct ReplicationEnsemble {
  std::vector<CountingPath> paths;
  bool conditional = false;
  CountingPath pointwise_mean;
  std::vector<double> envelope_lo;  // central 90% band
  std::vector<double> envelope_hi;
};

// Draw n_rep rate functions from the ensemble and replicate counting
// paths; conditional replicates fix the total count at n_obs.
template <class Rng>
ReplicationEnsemble replicate_predictive(const PosteriorEnsemble& ens,
                                         std::size_t n_rep, bool conditional,
                                         std::size_t n_obs,
                                         const std::vector<double>& grid,
                                         Rng& rng, bool reversed = false) {
  if (ens.samples.empty() || n_rep == 0)
    throw data_error("replicate_predictive: need samples and n_rep >= 1");
  ReplicationEnsemble out;
  out.conditional = conditional;
  out.paths.reserve(n_rep);
  std::uniform_int_distribution<std::size_t> pick(0, ens.samples.size() - 1);
  for (std::size_t r = 0; r < n_rep; ++r) {
    const StepRate& rate = ens.samples[pick(rng)];
    const ExceedanceSeries sim = conditional
                                     ? simulate_conditional(rate, n_obs, rng)
                                     : simulate_direct(rate, rng);
    CountingPath path = counting_path(sim, grid);
    if (reversed) {
      const double total = path.counts.empty() ? 0.0 : path.counts.back();
      std::reverse(path.counts.begin(), path.counts.end());
      for (double& c : path.counts) c = total - c;
    }
    out.paths.push_back(std::move(path));
  }
  out.pointwise_mean.grid = grid;
  out.pointwise_mean.counts.assign(grid.size(), 0.0);
  out.envelope_lo.resize(grid.size());
  out.envelope_hi.resize(grid.size());
  std::vector<double> column(n_rep);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t r = 0; r < n_rep; ++r) column[r] = out.paths[r].counts[g];
    for (double c : column) out.pointwise_mean.counts[g] += c;
    out.pointwise_mean.counts[g] /= static_cast<double>(n_rep);
    out.envelope_lo[g] = sample_quantile(column, 0.05);
    out.envelope_hi[g] = sample_quantile(column, 0.95);
  }
  return out;
}

// --- iterative decluster/estimate workflow --------------------------------

struct SegmentRunsTest {
  double lo = 0.0;
  double hi = 0.0;
  bool tested = false;
  TestResult result;
  std::string skip_reason;
};

struct PipelineOptions {
  double quantile = 0.9;
  std::size_t m0 = 1;
  std::size_t half_window = 65;
  bool include_trend = false;
  PriorConfig prior;
  ChainConfig chain;
  double location_bandwidth = 95.0;
  double height_bandwidth = 0.003;
  std::size_t n_rep = 1000;
  bool conditional_replication = false;
  std::size_t max_iterations = 5;
  double stability_tolerance = 30.0;  // days
  double runs_alpha = 0.05;
  std::size_t replication_grid_size = 256;
};

struct PipelineIteration {
  StepRate estimate;
  std::vector<SegmentRunsTest> declustered_segment_tests;
  bool all_segments_accept = false;
};

struct PipelineReport {
  double missing_fraction = 0.0;
  SeasonalFit seasonal_fit;
  double threshold = 0.0;
  std::size_t n_raw_exceedances = 0;
  std::size_t n_clusters = 0;
  TestResult whole_series_runs;
  bool whole_series_runs_valid = false;
  StepRate rough_estimate;  // from the raw (clustered) exceedances
  std::vector<SegmentRunsTest> raw_segment_tests;
  std::vector<PipelineIteration> iterations;
  bool converged = false;
  StepRate final_estimate;
  ExceedanceSeries declustered_events;
  ReplicationEnsemble replication;
};

namespace detail {

// Runs test on the subsequence of symbols whose start time lies in (lo, hi].
inline SegmentRunsTest segment_runs_test(const BinarySequence& binary, double lo,
                                         double hi) {
  SegmentRunsTest s;
  s.lo = lo;
  s.hi = hi;
  BinarySequence sub;
  for (std::size_t i = 0; i < binary.size(); ++i)
    if (binary.start_times[i] > lo && binary.start_times[i] <= hi) {
      sub.symbols.push_back(binary.symbols[i]);
      sub.start_times.push_back(binary.start_times[i]);
    }
  const std::size_t np = sub.n_plus();
  if (sub.size() < 2 || np == 0 || np == sub.size()) {
    s.skip_reason = "degenerate segment (n=" + std::to_string(sub.size()) +
                    ", n_plus=" + std::to_string(np) + ")";
    return s;
  }
  s.tested = true;
  s.result = runs_test(sub);
  return s;
}

inline std::vector<SegmentRunsTest> all_segment_runs(const BinarySequence& binary,
                                                     const StepRate& est) {
  std::vector<SegmentRunsTest> out;
  for (std::size_t j = 0; j <= est.k(); ++j)
    out.push_back(segment_runs_test(binary, est.boundary(j), est.boundary(j + 1)));
  return out;
}

inline bool segments_accept(const std::vector<SegmentRunsTest>& tests,
                            double alpha) {
  for (const auto& t : tests)
    if (t.tested && t.result.p_two_sided < alpha) return false;
  return true;
}

inline bool stable(const StepRate& a, const StepRate& b, double tol) {
  if (a.k() != b.k()) return false;
  for (std::size_t j = 0; j < a.k(); ++j)
    if (std::fabs(a.changepoints[j] - b.changepoints[j]) >= tol) return false;
  return true;
}

}  // namespace detail

// Full preprocessing + iterative MCMC/declusterisation workflow.
template <class Rng>
PipelineReport iterate_pipeline(const DailySeries& raw, const PipelineOptions& opt,
                                Rng& rng) {
  PipelineReport rep;
  raw.validate();
  const std::size_t n_missing =
      static_cast<std::size_t>(std::count(raw.missing.begin(), raw.missing.end(), true));
  rep.missing_fraction = static_cast<double>(n_missing) / raw.size();

  const DailySeries complete = impute_missing(raw, opt.half_window, rng);
  rep.seasonal_fit = fit_seasonal(complete, opt.include_trend);
  const DailySeries detrended = deseasonalise(complete, rep.seasonal_fit);
  const ThresholdResult th = threshold_exceedances(detrended, opt.quantile);
  rep.threshold = th.threshold;
  rep.n_raw_exceedances = th.events.size();
  {
    const std::size_t np = th.binary.n_plus();
    if (th.binary.size() >= 2 && np > 0 && np < th.binary.size()) {
      rep.whole_series_runs = runs_test(th.binary);
      rep.whole_series_runs_valid = true;
    }
  }

  const DeclusterResult dec = decluster(th.binary, detrended.values, opt.m0);
  rep.n_clusters = dec.n_clusters;
  rep.declustered_events = dec.events;

  // (i) rough identification on the raw exceedances
  PosteriorEnsemble rough = run_chain(th.events, opt.prior, opt.chain, rng);
  rep.rough_estimate =
      point_estimate(rough, opt.location_bandwidth, opt.height_bandwidth);
  // (ii) raw-data segment tests, expected to reject
  rep.raw_segment_tests = detail::all_segment_runs(th.binary, rep.rough_estimate);

  // (iii)-(v) decluster / re-estimate loop
  StepRate current = rep.rough_estimate;
  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    PipelineIteration step;
    step.declustered_segment_tests =
        detail::all_segment_runs(dec.relabelled, current);
    step.all_segments_accept =
        detail::segments_accept(step.declustered_segment_tests, opt.runs_alpha);
    PosteriorEnsemble ens = run_chain(dec.events, opt.prior, opt.chain, rng);
    step.estimate =
        point_estimate(ens, opt.location_bandwidth, opt.height_bandwidth);
    rep.iterations.push_back(step);
    const bool done = step.all_segments_accept &&
                      detail::stable(current, step.estimate, opt.stability_tolerance);
    current = step.estimate;
    if (done) {
      rep.converged = true;
      break;
    }
  }
  rep.final_estimate = current;

  // (vi) posterior-predictive replication from a fresh chain on the final data
  PosteriorEnsemble final_ens = run_chain(dec.events, opt.prior, opt.chain, rng);
  std::vector<double> grid;
  grid.reserve(opt.replication_grid_size);
  for (std::size_t g = 0; g < opt.replication_grid_size; ++g)
    grid.push_back(dec.events.horizon * static_cast<double>(g + 1) /
                   static_cast<double>(opt.replication_grid_size));
  rep.replication =
      replicate_predictive(final_ens, opt.n_rep, opt.conditional_replication,
                           dec.events.size(), grid, rng);
  return rep;
}

}  // namespace exrate
