#pragma once

// Stage graph of the workflow: mesh, thermal model, designs of experiments,
// high-fidelity snapshots, clustering, local ROMs, classifier, Gappy
// surrogates, Monte Carlo and validation. Every stage reads its inputs from
// and writes its outputs to an ArtifactStore.

#include "romnet/classifier.hpp"
#include "romnet/cluster.hpp"
#include "romnet/config.hpp"
#include "romnet/doe.hpp"
#include "romnet/features.hpp"
#include "romnet/rom.hpp"
#include "romnet/store.hpp"
#include "romnet/thermal.hpp"
#include "romnet/uq.hpp"

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace romnet {

struct StageSpec {
  std::string name;     // artifact name
  std::string dir;      // store directory
  std::string command;  // CLI subcommand producing it
  std::vector<std::string> config_keys;
  std::vector<std::string> upstream;
};

/// The declared stage graph, in execution order.
const std::vector<StageSpec>& stage_graph();
const StageSpec& stage_spec(const std::string& name);

struct DoeArtifact {
  Design maxproj, sobol;
  std::vector<LoadingCoords> coords;  // maxproj samples first, then Sobol
  int num_maxproj() const { return static_cast<int>(maxproj.points.rows()); }
  int num_samples() const { return static_cast<int>(coords.size()); }
  std::array<double, 5> chi(int sample) const;
};

struct ClusterArtifact {
  std::vector<int> labels_maxproj;
  std::vector<int> labels_sobol;
  std::vector<int> sobol_ties;
  std::vector<int> medoids;                   // sample ids
  std::vector<std::vector<int>> snapshots;    // per cluster, sample ids
  Mat dissimilarity;                          // MaxProj samples
  MdsResult mds;
  double cost = 0.0;
  double mislabel_rate = 0.0;                 // versus the Bernoulli indicator
  std::vector<Vec> medoid_fields;             // p_cum at the end of the cycle
};

struct ClassifierArtifact {
  FeatureSelection selection;
  Classifier classifier;
  ClassificationReport test_report;  // on the MaxProj samples
  double gp_signal = 0.0, gp_length = 0.0, gp_noise = 0.0;
  Vec pair_distances, pair_mi;
};

/// Result of the online path: recommendation, reduced solve, reconstruction.
struct RomPathResult {
  int cluster = -1;
  Vec p_cum;       // nip, end of cycle
  Mat stress;      // 6 x nip, maximum speed
  double seconds = 0.0;
  int newton_iterations = 0;
};

struct ValidationDraw {
  bool ok = false;
  std::string error;
  std::array<double, 5> chi{};
  int predicted_cluster = -1;
  int true_cluster = -1;
  double hfm_seconds = 0.0;
  double rom_seconds = 0.0;
  FieldErrors p_cum, sigma_eq;
};

struct ValidationReport {
  std::vector<ValidationDraw> draws;
  int failures = 0;
  FieldErrors mean_p_cum, mean_sigma_eq;
  double mean_hfm_seconds = 0.0, mean_rom_seconds = 0.0, speedup = 0.0;
  double recommendation_accuracy = 0.0;
  std::string to_string() const;
};

/// Exit status of a stage run from the command line.
enum class StageStatus { Ran, UpToDate };

class Pipeline {
 public:
  Pipeline(PipelineConfig config, std::filesystem::path root, std::ostream& log);
  ~Pipeline();

  const PipelineConfig& config() const { return config_; }
  ArtifactStore& store() { return store_; }

  /// Expected identity of an artifact under the current configuration.
  std::uint64_t expected_hash(const std::string& artifact) const;
  /// Throws MissingArtifactError / StaleArtifactError naming the command to
  /// rerun when an upstream artifact of `artifact` is not current.
  void require_upstream(const std::string& artifact) const;
  bool is_current(const std::string& artifact) const;

  StageStatus run_mesh(bool force = false);
  StageStatus run_thermal(bool force = false);
  StageStatus run_doe(bool force = false);
  /// All samples (and the reference loading) when sample < 0; the stage
  /// manifest is written once every sample is present.
  StageStatus run_hfm(bool force = false, int sample = -1);
  StageStatus run_cluster(bool force = false);
  StageStatus run_train_rom(bool force = false, int cluster = -1);
  StageStatus run_train_classifier(bool force = false);
  StageStatus run_train_gappy(bool force = false);
  StageStatus run_uq(bool force = false);
  StageStatus run_validate(bool force = false);
  void run_all(bool force = false);
  /// Text summary of every produced artifact.
  std::string report() const;

  // Artifact access (loaded lazily from the store).
  const Mesh& mesh();
  const FemModel& model();
  const ThermalModel& thermal();
  const DoeArtifact& doe();
  Trajectory load_trajectory(int sample) const;
  Trajectory load_reference() const;
  const ClusterArtifact& clusters();
  const LocalROM& rom(int cluster);
  const ClassifierArtifact& classifier();
  const ZoneOfInterest& zone();
  UqReport load_uq() const;
  ValidationReport load_validation() const;

  /// Temperature field at maximum speed of a DoE sample.
  Vec sample_temperature_field(int sample);
  /// Classifier recommendation, reduced solve and Gappy reconstruction.
  RomPathResult rom_path(const Vec& t_max, int forced_cluster = -1);
  /// Cluster of an HFM end-of-cycle p_cum field (closest medoid).
  int true_cluster(const Vec& p_cum_final);

 private:
  Manifest make_manifest(const std::string& artifact) const;
  bool skip_if_current(const std::string& artifact, bool force) const;
  std::filesystem::path sample_path(int sample) const;
  bool sample_current(int sample) const;
  void solve_sample(int sample);

  PipelineConfig config_;
  ArtifactStore store_;
  std::ostream& log_;
  std::unique_ptr<Mesh> mesh_;
  std::unique_ptr<FemModel> model_;
  std::unique_ptr<ThermalModel> thermal_;
  std::unique_ptr<DoeArtifact> doe_;
  std::unique_ptr<ClusterArtifact> clusters_;
  std::map<int, std::unique_ptr<LocalROM>> roms_;
  std::unique_ptr<ClassifierArtifact> classifier_;
  std::unique_ptr<ZoneOfInterest> zone_;
};

/// Plain-text classifier table (classes, hyperparameters, per-node weights).
std::string classifier_to_text(const Classifier& c, const std::vector<int>& nodes);
Classifier classifier_from_text(const std::string& text, std::vector<int>* nodes);

}  // namespace romnet
