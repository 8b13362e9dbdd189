#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "coastfpca/association.hpp"
#include "coastfpca/fpca.hpp"
#include "coastfpca/store.hpp"
#include "coastfpca/synth.hpp"
#include "coastfpca/weekly.hpp"

namespace coastfpca {

/// Everything a run needs; file keys are overridable one-for-one by CLI
/// flags of the same name.
struct RunConfig {
  std::string samples;
  std::string sites;
  std::string precipitation;  // optional covariate stream
  std::string river_flow;     // optional covariate stream
  std::string covariate_map;  // required when either covariate is given
  std::vector<Province> provinces = {Province::BC};
  int cutoff_year = 1999;
  double detection_limit = 2.0;
  double fve_threshold = 0.95;
  std::optional<int> k_override;
  std::vector<double> bandwidth_candidates;  // empty -> default geometric grid
  int cv_folds = 5;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
};

/// Parse `key = value` lines ('#' comments, blank lines ignored).
RunConfig parse_config(std::istream& in);
/// Apply one key/value pair (shared by the file parser and CLI overrides).
void apply_config_entry(RunConfig& config, const std::string& key, const std::string& value);

/// In-memory state threaded through the stages.
struct PipelineState {
  RunConfig config;
  WeekWindow window;
  // ingest
  std::optional<LongitudinalStore> store;
  std::vector<RowError> rejected_rows;
  // preprocess
  std::vector<WeeklySeries> bacteria;      // log10 weekly means, windowed
  std::vector<WeeklySeries> site_precip;   // per-site cumulative precipitation
  std::vector<WeeklySeries> flow;          // per-location weekly flow
  ExclusionReport report;
  std::size_t unknown_site_samples = 0;
  // fit / scores
  std::optional<FpcaModel> model;
  std::vector<ScoreVector> scores;
  // associate
  std::vector<AssociationResult> associations;       // global + precipitation rows
  std::vector<AssociationResult> flow_associations;  // per-site flow rows
  ExtremaGroups groups;
  MaxVsFpc1Result max_table;
  // bookkeeping for the run log
  std::vector<std::string> notes;
};

// Stages; each throws PipelineError tagged with its stage name and writes
// its artifacts under config.out_dir.
void stage_ingest(PipelineState& state);
void stage_preprocess(PipelineState& state);
void stage_fit(PipelineState& state);
void stage_scores(PipelineState& state);
void stage_associate(PipelineState& state);
void stage_export(PipelineState& state);
void write_run_log(const PipelineState& state);

/// Full run: ingest, preprocess, fit, scores, associate, export, run log.
/// Idempotent for fixed inputs and seed.
PipelineState run_pipeline(const RunConfig& config);

/// `simulate` subcommand: write samples.csv / sites.csv / truth.json for a
/// Karhunen-Loeve scenario into out_dir.
void write_simulation(const SimulateParams& params, const std::string& out_dir);

}  // namespace coastfpca
