#pragma once

// Stochastic model of the maximum-speed temperature field: reference field,
// trailing-edge perturbation and Karhunen-Loeve fluctuation modes built on the
// outer surface with a geodesic exponential correlation, each extended
// harmonically into the bulk.

#include "romnet/fem.hpp"
#include "romnet/mesh.hpp"

#include <Eigen/SparseCholesky>

#include <array>
#include <memory>
#include <vector>

namespace romnet {

struct GeodesicMatrix {
  std::vector<int> surface_nodes;  // row/column order
  Mat distance;
};

/// All-pairs shortest paths on the surface edge graph.
GeodesicMatrix surface_geodesic_matrix(const Mesh& mesh);

/// P1 stiffness (Laplacian) matrix of the mesh.
SparseMat laplacian_matrix(const Mesh& mesh);

/// Solves the discrete steady heat equation with Dirichlet data on all
/// surface nodes.
class HarmonicExtension {
 public:
  explicit HarmonicExtension(const Mesh& mesh);
  /// `surface_values` ordered as surface_nodes().
  Vec extend(const Vec& surface_values) const;
  /// Restriction of a nodal field to the surface nodes.
  Vec restrict(const Vec& nodal) const;
  /// ||(K u)_interior|| / ||K_IB u_B|| (0 when there are no interior nodes).
  double interior_residual(const Vec& nodal) const;
  const std::vector<int>& surface_nodes() const { return surface_; }
  const std::vector<int>& interior_nodes() const { return interior_; }

 private:
  std::size_t n_;
  std::vector<int> surface_;
  std::vector<int> interior_;
  SparseMat laplacian_;
  SparseMat k_ii_, k_ib_;
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMat>> solver_;
};

struct ThermalParams {
  double reference_temperature = 293.0;  // T0
  double melting_temperature = 1600.0;
  double std_dev = 15.0;                 // surface standard deviation, K
  double correlation_length = -1.0;      // d_G^0; <= 0 means 0.25 * root chord
  int num_modes = 4;
  // Analytic reference field.
  double t_leading = 1250.0;
  double t_trailing = 1150.0;
  double t_root = 900.0;
  double root_decay = 0.15;   // spanwise decay length (fraction of span)
  double span_bump = 30.0;    // mid-span extra heating, K
  // Trailing-edge perturbation.
  double perturbation_max = 50.0;
  double perturbation_radius = 6.0;   // geodesic length
  double perturbation_span = 0.5;     // spanwise location of its centre
};

struct ThermalModel {
  ThermalParams params;
  Vec t_ref;
  Vec delta_t0;
  std::vector<Vec> modes;          // delta T_1..delta T_n, nodal
  Vec eigenvalues;                 // surface covariance eigenvalues, descending
  std::vector<int> surface_nodes;
  double correlation_length = 0.0;
};

/// Surface covariance sigma_T^2 exp(-d_G / d_G^0).
Mat surface_covariance(const GeodesicMatrix& geo, double std_dev, double correlation_length);

struct FluctuationModes {
  std::vector<Vec> nodal;          // harmonic extensions
  std::vector<Vec> surface;        // sqrt(lambda) * eigenvector
  Vec eigenvalues;                 // all, non-increasing
};

FluctuationModes build_fluctuation_modes(const Mesh& mesh, const GeodesicMatrix& geo,
                                         const HarmonicExtension& ext, double correlation_length,
                                         double std_dev, int n_modes);

ThermalModel build_thermal_model(const Mesh& mesh, const ThermalParams& params,
                                 double root_chord);

struct ThermalSample {
  std::array<double, 5> upsilon{};
  Vec t_max;
  int out_of_range = 0;  // nodes outside [0, T_melt]; values are not clamped
};

ThermalSample sample_temperature(const ThermalModel& model, const std::array<double, 5>& upsilon);

/// (1 - omega(t)) T0 + omega(t) T_max.
Vec thermal_at_time(const ThermalSample& sample, double t, const LoadSchedule& schedule);

}  // namespace romnet
