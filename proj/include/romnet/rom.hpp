#pragma once

// Local hyper-reduced ROM: primal and dual POD bases, ECM reduced quadrature
// and the online Galerkin-Newton solve over the loading cycle.

#include "romnet/container.hpp"
#include "romnet/ecm.hpp"
#include "romnet/gappy.hpp"
#include "romnet/hfm.hpp"
#include "romnet/pod.hpp"

#include <array>
#include <vector>

namespace romnet {

inline constexpr int kNumDual = 7;  // p_cum^o then the 6 stress components

/// Name of dual variable d (0 = p_cum, 1..6 = sigma_11..sigma_12).
const char* dual_name(int d);

struct RomTrainingOptions {
  double primal_tolerance = 1e-8;
  double dual_tolerance = 1e-4;
  double ecm_tolerance = 5e-4;
};

struct LocalROM {
  int cluster_id = 0;
  std::vector<int> snapshot_samples;
  ReducedBasis primal;                      // nodal displacement, lumped-mass weights
  std::array<ReducedBasis, kNumDual> dual;  // IP fields, IP-volume weights
  ReducedQuadrature quadrature;
  // Zero-weight points where the constitutive law is also evaluated online so
  // that every dual basis is observable from the RID values.
  std::vector<int> dual_sampling;
  std::array<GappySurrogate, kNumDual> gappy;
  bool has_gappy = false;

  // Online operators (rebuilt by prepare_online).
  std::vector<Eigen::Matrix<double, 6, Eigen::Dynamic>> reduced_b;  // B_p Psi per RID point
  Vec reduced_centrifugal;
  Vec reduced_pressure;

  int num_modes() const { return static_cast<int>(primal.size()); }
  /// ECM points followed by the dual sampling points.
  std::vector<int> rid_points() const;
  /// Restriction of dual basis d to the RID rows.
  Mat dual_rows(int d) const;
};

/// Snapshot matrices gathered from trajectories (all steps after the initial
/// state).
struct SnapshotSet {
  Mat displacement;                     // ndof x (samples * steps)
  std::array<Mat, kNumDual> dual;       // nip x (samples * steps)
  std::vector<Mat> stress;              // per snapshot, 6 x nip
};

SnapshotSet gather_snapshots(const std::vector<const Trajectory*>& trajectories);

/// Rows of the ECM integrand matrix: for every snapshot and primal mode i the
/// IP-wise value (B psi_i)_p . sigma_p, plus one constant row.
Mat ecm_integrands(const FemModel& model, const Mat& primal_modes, const std::vector<Mat>& stresses);

/// Points completing the RID so that each dual basis restricted to it has full
/// column rank: the leading pivots of a column-pivoted QR of each basis
/// transpose, skipping points already present.
std::vector<int> dual_sampling_points(const std::array<ReducedBasis, kNumDual>& dual, const std::vector<int>& rid);

LocalROM train_local_rom(const FemModel& model, const std::vector<const Trajectory*>& trajectories,
                         int cluster_id, const std::vector<int>& sample_ids,
                         const RomTrainingOptions& options = {});

/// Precomputes B_p Psi at the RID points and the reduced unit loads.
void prepare_online(LocalROM& rom, const FemModel& model);

struct ReducedTrajectory {
  std::vector<double> times;
  Mat coordinates;  // N x (steps + 1)
  Mat rid_stress;   // 6 |RID| x (steps + 1)
  Mat rid_p_cum;    // |RID| x (steps + 1)
  int newton_iterations = 0;
  int bisections = 0;
  double wall_seconds = 0.0;

  /// Values of dual variable d at the RID points at a step.
  Vec rid_dual(int d, int step) const;
};

/// Hyper-reduced Newton solve of the cycle; mirrors solve_cycle, with
/// constitutive updates only at RID points.
ReducedTrajectory reduced_solve(const LocalROM& rom, const FemModel& model, const Vec& t_max,
                                const SolverOptions& options = {});

/// Persistence in the binary container (online operators are rebuilt on load).
Container rom_to_container(const LocalROM& rom);
LocalROM rom_from_container(const Container& c, const FemModel& model);

}  // namespace romnet
