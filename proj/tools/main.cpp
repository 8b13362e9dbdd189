#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "coastfpca/pipeline.hpp"

namespace {

using coastfpca::PipelineState;
using coastfpca::RunConfig;

struct CliOverrides {
  std::vector<std::pair<std::string, std::string>> entries;
};

// Every config-file key is also a CLI flag of the same name; flags win.
void add_config_flags(CLI::App* cmd, std::string& config_path, CliOverrides& overrides) {
  cmd->add_option("--config", config_path, "key = value config file");
  static const char* keys[] = {"samples",       "sites",          "precipitation",
                               "river_flow",    "covariate_map",  "provinces",
                               "cutoff_year",   "detection_limit", "fve_threshold",
                               "k_override",    "bandwidth_candidates", "cv_folds",
                               "alpha",         "seed",           "out_dir"};
  for (const char* key : keys) {
    cmd->add_option_function<std::string>(
        std::string("--") + key,
        [key, &overrides](const std::string& value) { overrides.entries.emplace_back(key, value); },
        std::string("config key '") + key + "'");
  }
}

RunConfig build_config(const std::string& config_path, const CliOverrides& overrides) {
  RunConfig config;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw coastfpca::Error("cannot open config file '" + config_path + "'");
    config = coastfpca::parse_config(in);
  }
  for (const auto& [key, value] : overrides.entries)
    coastfpca::apply_config_entry(config, key, value);
  return config;
}

int run_stages(const RunConfig& config, const std::string& last_stage) {
  PipelineState state;
  state.config = config;
  coastfpca::stage_ingest(state);
  if (last_stage == "ingest") {
    std::cout << "ingested " << state.store->sample_count() << " samples at "
              << state.store->sites().size() << " registered sites; "
              << state.rejected_rows.size() << " rows rejected\n";
    return 0;
  }
  coastfpca::stage_preprocess(state);
  if (last_stage == "preprocess") {
    std::cout << "retained " << state.bacteria.size() << " of " << state.report.by_site.size()
              << " sites\n";
    return 0;
  }
  coastfpca::stage_fit(state);
  if (last_stage == "fit") {
    std::cout << "fitted K=" << state.model->k << " components, sigma2=" << state.model->sigma2
              << "\n";
    return 0;
  }
  coastfpca::stage_scores(state);
  if (last_stage == "scores") {
    std::cout << "scored " << state.scores.size() << " sites\n";
    return 0;
  }
  coastfpca::stage_associate(state);
  if (last_stage == "associate") {
    std::cout << "wrote " << state.associations.size() << " association rows\n";
    return 0;
  }
  coastfpca::stage_export(state);
  if (last_stage == "export") {
    std::cout << "exported bins.geojson and plots/\n";
    return 0;
  }
  coastfpca::write_run_log(state);
  std::cout << "pipeline complete: " << state.bacteria.size() << " sites, K=" << state.model->k
            << ", outputs in " << config.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse FPCA pipeline for longitudinal water-quality monitoring"};
  app.require_subcommand(1);

  std::string config_path;
  CliOverrides overrides;
  const char* stage_names[] = {"ingest", "preprocess", "fit", "scores", "associate", "export",
                               "run"};
  const char* stage_help[] = {
      "parse and validate the input files",
      "apply exclusions and pool weekly series",
      "fit the FPCA model (writes model.json)",
      "conditional-expectation scores with percentiles and decile bins",
      "correlation analyses (associations.csv, extrema_groups.csv)",
      "GeoJSON decile map and SVG curve plots",
      "full pipeline plus run_log.json"};
  std::vector<CLI::App*> stage_cmds;
  for (std::size_t i = 0; i < std::size(stage_names); ++i) {
    CLI::App* cmd = app.add_subcommand(stage_names[i], stage_help[i]);
    add_config_flags(cmd, config_path, overrides);
    stage_cmds.push_back(cmd);
  }

  CLI::App* simulate = app.add_subcommand("simulate", "write a synthetic dataset + truth.json");
  int n_sites = 400;
  double observe_prob = 0.6, sigma2 = 0.04;
  std::vector<double> lambda = {1.0, 0.25};
  std::uint64_t sim_seed = 42;
  std::string sim_out = "out";
  simulate->add_option("--n_sites", n_sites, "number of simulated sites");
  simulate->add_option("--observe_prob", observe_prob, "per-week observation probability");
  simulate->add_option("--sigma2", sigma2, "measurement-error variance");
  simulate->add_option("--lambda", lambda, "component variances, descending")->delimiter(',');
  simulate->add_option("--seed", sim_seed, "random seed");
  simulate->add_option("--out_dir", sim_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      coastfpca::write_simulation(
          coastfpca::default_scenario(n_sites, observe_prob, sigma2, lambda, sim_seed), sim_out);
      std::cout << "simulated " << n_sites << " sites into " << sim_out << "\n";
      return 0;
    }
    for (std::size_t i = 0; i < stage_cmds.size(); ++i) {
      if (stage_cmds[i]->parsed())
        return run_stages(build_config(config_path, overrides), stage_names[i]);
    }
  } catch (const std::exception& e) {
    // PipelineError messages already carry their stage tag.
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
