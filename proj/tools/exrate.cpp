// Command-line pipeline for change-point analysis of threshold-exceedance
// rates: preprocess, fit, test, validate, pipeline.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "exrate/io.hpp"

namespace fs = std::filesystem;
using exrate::json;

namespace {

json default_config() {
  return json{
      {"input", ""},
      {"quantile", 0.9},
      {"m0", 1},
      {"half_window", 65},
      {"include_trend", false},
      {"prior",
       {{"mu", 4.5}, {"k_max", 20}, {"gamma", 0.0}, {"height_log_step", 1.0}}},
      {"chain",
       {{"burn_in", 20000}, {"n_updates", 500000}, {"thin", 40}, {"seed", 1}}},
      {"bandwidths", {{"location", 95.0}, {"height", 0.003}}},
      {"replication", {{"n_rep", 1000}, {"conditional", false}}},
  };
}

void merge_into(json& base, const json& overlay) {
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    if (it.value().is_object() && base.contains(it.key()) &&
        base[it.key()].is_object())
      merge_into(base[it.key()], it.value());
    else
      base[it.key()] = it.value();
  }
}

void apply_set(json& cfg, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos)
    throw exrate::data_error("--set expects key=value, got '" + kv + "'");
  const std::string key = kv.substr(0, eq);
  const std::string raw = kv.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;  // bare strings
  }
  json* node = &cfg;
  std::size_t pos = 0;
  for (;;) {
    const auto dot = key.find('.', pos);
    const std::string part = key.substr(pos, dot - pos);
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    pos = dot + 1;
  }
}

struct Options {
  json cfg = default_config();
  exrate::PipelineOptions pipeline;

  void finalize() {
    pipeline.quantile = cfg["quantile"].get<double>();
    pipeline.m0 = cfg["m0"].get<std::size_t>();
    pipeline.half_window = cfg["half_window"].get<std::size_t>();
    pipeline.include_trend = cfg["include_trend"].get<bool>();
    pipeline.prior.mu = cfg["prior"]["mu"].get<double>();
    pipeline.prior.k_max = cfg["prior"]["k_max"].get<std::size_t>();
    pipeline.prior.gamma = cfg["prior"]["gamma"].get<double>();
    pipeline.prior.height_log_step = cfg["prior"]["height_log_step"].get<double>();
    pipeline.chain.burn_in = cfg["chain"]["burn_in"].get<std::size_t>();
    pipeline.chain.n_updates = cfg["chain"]["n_updates"].get<std::size_t>();
    pipeline.chain.thin = cfg["chain"]["thin"].get<std::size_t>();
    pipeline.chain.seed = cfg["chain"]["seed"].get<std::uint64_t>();
    pipeline.location_bandwidth = cfg["bandwidths"]["location"].get<double>();
    pipeline.height_bandwidth = cfg["bandwidths"]["height"].get<double>();
    pipeline.n_rep = cfg["replication"]["n_rep"].get<std::size_t>();
    pipeline.conditional_replication =
        cfg["replication"]["conditional"].get<bool>();
  }

  std::string provenance() const {
    return exrate::provenance_line(cfg.dump(), pipeline.chain.seed);
  }
};

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw exrate::data_error("cannot write " + path.string());
  out << content;
}

template <class Writer>
void write_with(const fs::path& path, Writer&& w) {
  std::ofstream out(path);
  if (!out) throw exrate::data_error("cannot write " + path.string());
  w(out);
}

int cmd_preprocess(const Options& opt, const std::string& input,
                   const fs::path& out_dir) {
  const auto series = exrate::read_daily_csv_file(input);
  std::mt19937_64 rng(opt.pipeline.chain.seed);
  const auto complete =
      exrate::impute_missing(series, opt.pipeline.half_window, rng);
  const auto fit = exrate::fit_seasonal(complete, opt.pipeline.include_trend);
  const auto detrended = exrate::deseasonalise(complete, fit);
  const auto th = exrate::threshold_exceedances(detrended, opt.pipeline.quantile);
  const auto dec =
      exrate::decluster(th.binary, detrended.values, opt.pipeline.m0);

  const std::string prov = opt.provenance();
  write_with(out_dir / "exceedances.csv", [&](std::ostream& o) {
    exrate::write_exceedances(o, dec.events, prov);
  });
  write_with(out_dir / "raw_exceedances.csv", [&](std::ostream& o) {
    exrate::write_exceedances(o, th.events, prov);
  });
  write_with(out_dir / "seasonal_fit.txt", [&](std::ostream& o) {
    exrate::write_seasonal_fit(o, fit, prov);
  });

  json rep;
  const std::size_t n_missing = static_cast<std::size_t>(
      std::count(series.missing.begin(), series.missing.end(), true));
  rep["missing_fraction"] =
      static_cast<double>(n_missing) / static_cast<double>(series.size());
  rep["threshold"] = th.threshold;
  rep["n_raw_exceedances"] = th.events.size();
  rep["n_clusters"] = dec.n_clusters;
  rep["n_declustered_events"] = dec.events.size();
  const std::size_t np = th.binary.n_plus();
  if (th.binary.size() >= 2 && np > 0 && np < th.binary.size())
    rep["whole_series_runs"] = exrate::test_result_json(exrate::runs_test(th.binary));
  {
    const std::size_t rnp = dec.relabelled.n_plus();
    if (dec.relabelled.size() >= 2 && rnp > 0 && rnp < dec.relabelled.size())
      rep["declustered_runs"] =
          exrate::test_result_json(exrate::runs_test(dec.relabelled));
  }
  rep["provenance"] = prov;
  write_text(out_dir / "preprocess_report.json", rep.dump(2) + "\n");
  return 0;
}

int cmd_fit(const Options& opt, const std::string& exceedance_path,
            const fs::path& out_dir, const std::optional<exrate::Date>& start) {
  const auto events = exrate::read_exceedances_file(exceedance_path);
  if (events.empty())
    throw exrate::data_error("fit: empty exceedance set (gamma = T/N undefined)");
  const auto ens =
      exrate::run_chain(events, opt.pipeline.prior, opt.pipeline.chain);
  const std::string prov = opt.provenance();
  write_with(out_dir / "ensemble.csv", [&](std::ostream& o) {
    exrate::write_ensemble(o, ens, prov);
  });
  json summary = exrate::posterior_summary_json(
      ens, opt.pipeline.location_bandwidth, opt.pipeline.height_bandwidth,
      start ? &*start : nullptr);
  summary["provenance"] = prov;
  write_text(out_dir / "posterior_summary.json", summary.dump(2) + "\n");

  const std::size_t k_hat = summary["k_hat"].get<std::size_t>();
  if (k_hat > 0) {
    const auto locs =
        exrate::location_summaries(ens, k_hat, opt.pipeline.location_bandwidth);
    for (std::size_t j = 0; j < locs.size(); ++j)
      write_with(out_dir / ("density_s" + std::to_string(j + 1) + ".csv"),
                 [&](std::ostream& o) {
                   exrate::write_density_csv(o, locs[j], prov);
                 });
  }
  const auto hs =
      exrate::height_summaries(ens, k_hat, opt.pipeline.height_bandwidth);
  for (std::size_t j = 0; j < hs.size(); ++j)
    write_with(out_dir / ("density_h" + std::to_string(j) + ".csv"),
               [&](std::ostream& o) { exrate::write_density_csv(o, hs[j], prov); });
  return 0;
}

int cmd_test(const Options& opt, const std::string& exceedance_path,
             const std::vector<double>& changepoints, const fs::path& out_dir) {
  const auto events = exrate::read_exceedances_file(exceedance_path);
  json rep = exrate::segment_report_json(events, changepoints);
  rep["provenance"] = opt.provenance();
  write_text(out_dir / "segment_report.json", rep.dump(2) + "\n");
  return 0;
}

int cmd_validate(const Options& opt, const std::string& ensemble_path,
                 const std::string& exceedance_path, const fs::path& out_dir) {
  const auto ens = exrate::read_ensemble_file(ensemble_path);
  const auto events = exrate::read_exceedances_file(exceedance_path);
  std::mt19937_64 rng(opt.pipeline.chain.seed);
  std::vector<double> grid;
  const std::size_t gsize = 256;
  for (std::size_t g = 0; g < gsize; ++g)
    grid.push_back(events.horizon * static_cast<double>(g + 1) /
                   static_cast<double>(gsize));
  const auto rep = exrate::replicate_predictive(
      ens, opt.pipeline.n_rep, opt.pipeline.conditional_replication,
      events.size(), grid, rng);
  const auto observed = exrate::counting_path(events, grid);
  const std::string prov = opt.provenance();
  write_with(out_dir / "replication.csv", [&](std::ostream& o) {
    exrate::write_replication_csv(o, rep, observed, prov);
  });
  json j;
  j["conditional"] = rep.conditional;
  j["n_rep"] = rep.paths.size();
  j["observed_n"] = events.size();
  double inside = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g)
    if (observed.counts[g] >= rep.envelope_lo[g] &&
        observed.counts[g] <= rep.envelope_hi[g])
      inside += 1.0;
  j["envelope_coverage"] = inside / static_cast<double>(grid.size());
  j["provenance"] = prov;
  write_text(out_dir / "validation_report.json", j.dump(2) + "\n");
  return 0;
}

int cmd_pipeline(const Options& opt, const std::string& input,
                 const fs::path& out_dir) {
  const auto series = exrate::read_daily_csv_file(input);
  std::mt19937_64 rng(opt.pipeline.chain.seed);
  const auto rep = exrate::iterate_pipeline(series, opt.pipeline, rng);
  const std::string prov = opt.provenance();
  json j = exrate::pipeline_report_json(rep);
  j["provenance"] = prov;
  write_text(out_dir / "pipeline_report.json", j.dump(2) + "\n");
  write_with(out_dir / "exceedances.csv", [&](std::ostream& o) {
    exrate::write_exceedances(o, rep.declustered_events, prov);
  });
  const auto observed = exrate::counting_path(rep.declustered_events,
                                              rep.replication.pointwise_mean.grid);
  write_with(out_dir / "replication.csv", [&](std::ostream& o) {
    exrate::write_replication_csv(o, rep.replication, observed, prov);
  });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Change-point analysis of threshold-exceedance rates"};
  app.require_subcommand(1);

  std::string config_path, out_dir_str = ".", input, exceedance_path,
              ensemble_path, start_date_str, changepoints_str;
  std::optional<std::uint64_t> seed_flag;
  std::vector<std::string> sets;

  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--seed", seed_flag, "Override chain.seed");
  app.add_option("--out", out_dir_str, "Output directory");
  app.add_option("--set", sets, "Override a config entry, e.g. chain.thin=10");

  auto* pre = app.add_subcommand("preprocess", "CSV -> declustered exceedances");
  pre->add_option("input", input, "Daily series CSV (date,value)");
  auto* fit = app.add_subcommand("fit", "Run the RJMCMC sampler");
  fit->add_option("exceedances", exceedance_path, "Exceedance file");
  fit->add_option("--start-date", start_date_str,
                  "Series start date for calendar translation (ISO)");
  auto* tst = app.add_subcommand("test", "Classical tests and Bayes factors");
  tst->add_option("exceedances", exceedance_path, "Exceedance file");
  tst->add_option("--changepoints", changepoints_str,
                  "Comma-separated change-point times (empty = one segment)");
  auto* val = app.add_subcommand("validate", "Posterior-predictive replication");
  val->add_option("ensemble", ensemble_path, "Ensemble file");
  val->add_option("exceedances", exceedance_path, "Exceedance file");
  auto* pipe = app.add_subcommand("pipeline", "Full iterative workflow");
  pipe->add_option("input", input, "Daily series CSV (date,value)");

  CLI11_PARSE(app, argc, argv);

  try {
    Options opt;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw exrate::data_error("cannot open config: " + config_path);
      json file_cfg = json::parse(in);
      merge_into(opt.cfg, file_cfg);
    }
    for (const auto& kv : sets) apply_set(opt.cfg, kv);
    if (seed_flag) opt.cfg["chain"]["seed"] = *seed_flag;
    opt.finalize();
    if (input.empty() && opt.cfg.contains("input"))
      input = opt.cfg["input"].get<std::string>();

    fs::path out_dir(out_dir_str);
    fs::create_directories(out_dir);

    if (pre->parsed()) return cmd_preprocess(opt, input, out_dir);
    if (fit->parsed()) {
      std::optional<exrate::Date> start;
      if (!start_date_str.empty())
        start = exrate::parse_iso_date(start_date_str);
      return cmd_fit(opt, exceedance_path, out_dir, start);
    }
    if (tst->parsed()) {
      std::vector<double> cps;
      std::string cur;
      for (char c : changepoints_str + ",") {
        if (c == ',') {
          if (!cur.empty()) cps.push_back(std::stod(cur));
          cur.clear();
        } else {
          cur.push_back(c);
        }
      }
      return cmd_test(opt, exceedance_path, cps, out_dir);
    }
    if (val->parsed()) return cmd_validate(opt, ensemble_path, exceedance_path, out_dir);
    if (pipe->parsed()) return cmd_pipeline(opt, input, out_dir);
  } catch (const exrate::numerical_error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const exrate::data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
