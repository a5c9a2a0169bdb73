#pragma once

#include <filesystem>
#include <vector>

#include "mtsim/config.hpp"
#include "mtsim/metrics.hpp"

namespace mtsim {

struct RunSummary {
  long long steps = 0;
  int vehicles = 0;
  int capacity = 0;
  double occupancy_percent = 0.0;
  long long completed_trips = 0;
  long long predictions_total = 0;
  long long predictions_refused = 0;
  long long violations = 0;
  long long jam_reports = 0;
};

struct RunArtifacts {
  std::filesystem::path out_dir;
  std::filesystem::path metrics_csv;
  std::filesystem::path jam_csv;
  std::filesystem::path manifest;
  std::vector<std::filesystem::path> model_files;
  RunSummary summary;
};

// Deterministic scenario execution: place vehicles, loop
// snapshot -> sense/decide -> commit -> learn -> sample, write all
// artifacts. Identical config and seed give byte-identical CSVs, for any
// worker count.
RunArtifacts run_scenario(const ScenarioConfig& cfg);

struct PretrainArtifacts {
  std::filesystem::path manifest;
  std::vector<std::filesystem::path> model_files;  // best model first
  bool no_completed_trips = false;
};

// Low-density training run; ranks the learners by accumulated normalised
// reward over the final quarter of the run and writes the top-k models
// plus a ranking manifest.
PretrainArtifacts pretrain(const ScenarioConfig& cfg);

}  // namespace mtsim
