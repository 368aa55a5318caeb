#pragma once

// Pipeline configuration: every tunable of the workflow, read from a JSON file
// layered over built-in defaults. See README for the grammar.

#include "romnet/fem.hpp"
#include "romnet/hfm.hpp"
#include "romnet/mesh.hpp"
#include "romnet/rom.hpp"
#include "romnet/thermal.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace romnet {

struct DoeConfig {
  int maxproj_points = 80;
  int sobol_points = 120;
  int maxproj_iterations = 20000;
};

struct ClusterConfig {
  int clusters = 2;
  int restarts = 10;
  int snapshots_per_cluster = 20;
};

struct ClassifierConfig {
  double relevance_threshold = 0.05;
  int features = 11;
  int redundancy_pairs = 800;
  int folds = 5;
  std::vector<double> c_grid{1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
  std::vector<double> l1_grid{0.1, 0.4, 0.7, 1.0};
};

struct GappyConfig {
  int folds = 5;
  int grid_size = 30;
};

struct UqConfig {
  int draws = 64;
  double zone_fraction = 0.4;
  int kde_points = 200;
  int histogram_bins = 20;
};

struct ValidationConfig {
  int draws = 20;
};

struct Seeds {
  std::uint64_t doe = 1;
  std::uint64_t cluster = 2;
  std::uint64_t cv = 3;
  std::uint64_t mc = 4;
  std::uint64_t redundancy = 5;
  std::uint64_t validation = 6;
};

struct PipelineConfig {
  BladeParams blade;
  LoadSchedule loading;
  MaterialParams material;
  ThermalParams thermal;
  SolverOptions solver;
  DoeConfig doe;
  ClusterConfig cluster;
  RomTrainingOptions rom;
  ClassifierConfig classifier;
  GappyConfig gappy;
  UqConfig uq;
  ValidationConfig validation;
  Seeds seeds;
  int workers = 1;

  /// Throws Error on violated invariants (positive tolerances, DoE size
  /// versus clusters x snapshots, ...).
  void validate() const;
};

/// Material tables used when the configuration does not override them.
MaterialParams default_material();
/// Thermal model parameters used when the configuration does not override them.
ThermalParams default_thermal();

/// Defaults, optionally overridden by a JSON file. Unknown keys are errors.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& json_text);
PipelineConfig default_config();

/// Canonical JSON of the full resolved configuration (sorted keys).
std::string config_to_json(const PipelineConfig& cfg);

/// Hash of the listed top-level sections of the canonical JSON (a dotted
/// name such as "seeds.mc" selects a nested key).
std::uint64_t config_hash(const PipelineConfig& cfg, const std::vector<std::string>& keys);

}  // namespace romnet
