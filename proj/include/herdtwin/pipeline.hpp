#pragma once

// End-to-end run: synth, ingest, aggregate, filter, fit, train, twin, report.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "herdtwin/fit.hpp"
#include "herdtwin/lstm.hpp"
#include "herdtwin/synth.hpp"
#include "herdtwin/twin.hpp"

namespace herdtwin {

struct PipelineConfig {
  std::filesystem::path out_dir = "run";
  std::uint64_t seed = 7;
  int jobs = 1;

  HerdSpec herd;           // desk roster unless a config overrides it
  bool herd_seed_set = false;

  FirSettings fir;

  ArityGrid fit_grid = default_arity_grid();
  FitOptions fit_options;

  LstmConfig lstm;
  bool lstm_seed_set = false;
  double split = 0.9;

  CohortKey focus_cohort{Breed::Brahman, Sex::Female, CombinedTreatment(Procedure::None, Relief::PositiveControl)};
  StateLabel focus_state = StateLabel::Resting;

  int holdout_days = 3;
  UpdateOptions update;

  Breed pain_breed = Breed::Brahman;
  Sex pain_sex = Sex::Female;
  PainWeights pain_weights;

  // Throws Error(InvalidConfig).
  void validate() const;
};

// 14 positive-control Brahman females plus three each of dehorned Brahman
// females under N, T, M and T+M, over 52 days, noiseless.
HerdSpec desk_herd();

PipelineConfig default_pipeline_config();

// Overlays a JSON document on `config`; absent keys keep their values.
// Errors: InvalidConfig.
void apply_pipeline_json(std::string_view json_text, PipelineConfig& config);
std::string pipeline_config_json(const PipelineConfig& config);

struct Artifact {
  std::string path;  // relative to out_dir, '/' separated
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct PipelineResult {
  std::vector<Artifact> artifacts;  // sorted by path
  std::vector<std::string> stages_completed;
  std::string manifest_digest;  // SHA-256 of manifest.json
  std::size_t records = 0;
  std::size_t cohorts = 0;
  std::string best_family;
  double test_mse = 0.0;
  std::optional<double> prediction_rms_vs_template;
  std::vector<double> drift_mse;
  std::string least_pain;
  std::string most_pain;
};

// Stage errors propagate after a manifest covering the finished stages and
// the failure has been written.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace herdtwin
