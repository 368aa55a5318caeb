#pragma once

// Small-strain quasi-static finite-element assembly on linear tetrahedra:
// internal forces from the crystal-plasticity integrator, centrifugal body
// force and pressure traction.

#include "romnet/crystal.hpp"
#include "romnet/mesh.hpp"

#include <Eigen/Sparse>

#include <vector>

namespace romnet {

using SparseMat = Eigen::SparseMatrix<double>;
using Mat6x12 = Eigen::Matrix<double, 6, 12>;

/// Rotation speed profile and load magnitudes over one cycle. Times are
/// t_k = k t_c / num_steps for k = 0..num_steps.
struct LoadSchedule {
  double cycle_time = 1000.0;
  int num_steps = 11;
  double omega_max = 1500.0;        // rad/s at omega = 1
  double density = 8.9e-9;          // t/mm^3
  double pressure_max = 1.0;        // MPa at omega = 1
  double pressure_ambient = 0.0;    // MPa at omega = 0
  double reference_temperature = 293.0;
  // omega at t_0..t_num_steps; empty means the default take-off / cruise /
  // landing profile.
  std::vector<double> omega_profile;

  double time(int k) const { return cycle_time * k / num_steps; }
  double omega(int k) const;
  /// Piecewise-linear omega at an arbitrary time.
  double omega_at(double t) const;
  double pressure_at(double t) const;
  /// Index of the first step of the cruise plateau.
  int cruise_step() const;
};

/// Default profile: ramp over steps 1-3, hold over 4-8, ramp down over 9-11.
std::vector<double> default_omega_profile(int num_steps);

/// Volumic centrifugal force rho Omega_max^2 omega^2 r_perp at a point.
Vec3 centrifugal_force(const Vec3& point, double omega, const LoadSchedule& schedule,
                       const Mesh& mesh);

struct AssemblyResult {
  Vec residual;                    // zero rows at Dirichlet DOFs
  Vec internal_force;              // all DOFs, including Dirichlet rows
  std::vector<Vec6> stress;        // per IP
  std::vector<MaterialState> states;
  SparseMat tangent;               // only when requested
  int sinh_caps = 0;
};

class FemModel {
 public:
  FemModel(const Mesh& mesh, MaterialParams material, LoadSchedule schedule);

  const Mesh& mesh() const { return *mesh_; }
  const MaterialParams& material() const { return material_; }
  const LoadSchedule& schedule() const { return schedule_; }

  /// External load at time t: omega^2 F_centrifugal + p(t) F_pressure.
  Vec external_force(double t) const;
  const Vec& unit_centrifugal_load() const { return unit_centrifugal_; }
  const Vec& unit_pressure_load() const { return unit_pressure_; }
  const std::vector<char>& dirichlet_mask() const { return dirichlet_mask_; }
  const Mat6x12& strain_operator(std::size_t tet) const { return b_[tet]; }
  std::array<int, 12> element_dofs(std::size_t tet) const;

  /// Tensor-component strain at an IP.
  Vec6 strain(const Vec& u, std::size_t tet) const;
  /// Temperature at an IP: mean of the element's nodal temperatures.
  double ip_temperature(const Vec& nodal_temperature, std::size_t tet) const;
  IntegrationOptions options_for(std::size_t tet) const;

  /// Residual F_int(u) - F_ext(t_new) with material states advanced from
  /// `states_old` over dt at the given nodal temperature.
  AssemblyResult assemble_residual(const Vec& u, const std::vector<MaterialState>& states_old,
                                   const Vec& nodal_temperature, double t_new, double dt,
                                   bool with_tangent, int workers = 1) const;

  /// Zero material states at the reference temperature.
  std::vector<MaterialState> initial_states() const;

 private:
  const Mesh* mesh_;
  MaterialParams material_;
  LoadSchedule schedule_;
  std::vector<Mat6x12> b_;
  Vec unit_centrifugal_;
  Vec unit_pressure_;
  std::vector<char> dirichlet_mask_;
};

}  // namespace romnet
