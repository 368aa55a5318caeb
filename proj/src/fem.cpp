#include "romnet/fem.hpp"

#include <cmath>

namespace romnet {

std::vector<double> default_omega_profile(int num_steps) {
  std::vector<double> w(static_cast<std::size_t>(num_steps) + 1, 0.0);
  if (num_steps == 11) {
    const double third = 1.0 / 3.0;
    return {0.0, third, 2 * third, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2 * third, third, 0.0};
  }
  // Generic trapezoid: ramp over the first and last quarter.
  const int ramp = std::max(1, num_steps / 4);
  for (int k = 0; k <= num_steps; ++k) {
    double v = 1.0;
    if (k < ramp) v = static_cast<double>(k) / ramp;
    if (k > num_steps - ramp) v = static_cast<double>(num_steps - k) / ramp;
    w[static_cast<std::size_t>(k)] = std::clamp(v, 0.0, 1.0);
  }
  return w;
}

double LoadSchedule::omega(int k) const {
  if (!omega_profile.empty()) return omega_profile.at(static_cast<std::size_t>(k));
  return default_omega_profile(num_steps).at(static_cast<std::size_t>(k));
}

double LoadSchedule::omega_at(double t) const {
  const double x = t / cycle_time * num_steps;
  if (x <= 0.0) return omega(0);
  if (x >= num_steps) return omega(num_steps);
  const int k = static_cast<int>(std::floor(x));
  const double w = x - k;
  return (1.0 - w) * omega(k) + w * omega(std::min(k + 1, num_steps));
}

double LoadSchedule::pressure_at(double t) const {
  const double w = omega_at(t);
  return (1.0 - w) * pressure_ambient + w * pressure_max;
}

int LoadSchedule::cruise_step() const {
  // First step strictly inside the plateau of maximal omega.
  double wmax = 0.0;
  for (int k = 0; k <= num_steps; ++k) wmax = std::max(wmax, omega(k));
  int first = -1;
  for (int k = 0; k <= num_steps; ++k)
    if (omega(k) >= wmax - 1e-12) {
      first = k;
      break;
    }
  if (first < num_steps && omega(first + 1) >= wmax - 1e-12) return first + 1;
  return first;
}

Vec3 centrifugal_force(const Vec3& point, double omega, const LoadSchedule& schedule,
                       const Mesh& mesh) {
  const Vec3 rel = point - mesh.rotation_axis_point;
  const Vec3 axis = mesh.rotation_axis_dir.normalized();
  const Vec3 r_perp = rel - rel.dot(axis) * axis;
  return schedule.density * schedule.omega_max * schedule.omega_max * omega * omega * r_perp;
}

FemModel::FemModel(const Mesh& mesh, MaterialParams material, LoadSchedule schedule)
    : mesh_(&mesh), material_(std::move(material)), schedule_(std::move(schedule)) {
  const std::size_t ne = mesh.num_tets();
  const auto ndof = static_cast<Eigen::Index>(mesh.num_dofs());
  b_.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    Mat6x12 b = Mat6x12::Zero();
    const auto& g = mesh.gradients[e];
    for (int a = 0; a < 4; ++a) {
      const double gx = g(0, a), gy = g(1, a), gz = g(2, a);
      const int c = 3 * a;
      b(0, c) = gx;
      b(1, c + 1) = gy;
      b(2, c + 2) = gz;
      b(3, c + 1) = gz;
      b(3, c + 2) = gy;
      b(4, c) = gz;
      b(4, c + 2) = gx;
      b(5, c) = gy;
      b(5, c + 1) = gx;
    }
    b_[e] = b;
  }

  // Exact integration of the linear field r_perp against linear shape
  // functions: int N_a N_b = V (1 + delta_ab) / 20.
  unit_centrifugal_ = Vec::Zero(ndof);
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& t = mesh.tets[e];
    std::array<Vec3, 4> f;
    Vec3 sum = Vec3::Zero();
    for (int a = 0; a < 4; ++a) {
      f[a] = centrifugal_force(mesh.nodes[t[a]], 1.0, schedule_, mesh);
      sum += f[a];
    }
    const double v = mesh.ips[e].weight;
    for (int a = 0; a < 4; ++a)
      unit_centrifugal_.segment<3>(3 * t[a]) += v / 20.0 * (f[a] + sum);
  }

  unit_pressure_ = Vec::Zero(ndof);
  for (int fi : mesh.pressure_facets) {
    const auto& f = mesh.facets[static_cast<std::size_t>(fi)];
    const Vec3 load = -mesh.facet_normals[fi] * mesh.facet_areas[fi] / 3.0;
    for (int n : f) unit_pressure_.segment<3>(3 * n) += load;
  }

  dirichlet_mask_.assign(mesh.num_dofs(), 0);
  for (const auto& d : mesh.dirichlet)
    for (int c = 0; c < 3; ++c) dirichlet_mask_[static_cast<std::size_t>(3 * d.node + c)] = 1;
}

Vec FemModel::external_force(double t) const {
  const double w = schedule_.omega_at(t);
  return w * w * unit_centrifugal_ + schedule_.pressure_at(t) * unit_pressure_;
}

std::array<int, 12> FemModel::element_dofs(std::size_t tet) const {
  std::array<int, 12> dofs;
  const auto& t = mesh_->tets[tet];
  for (int a = 0; a < 4; ++a)
    for (int c = 0; c < 3; ++c) dofs[static_cast<std::size_t>(3 * a + c)] = 3 * t[a] + c;
  return dofs;
}

Vec6 FemModel::strain(const Vec& u, std::size_t tet) const {
  Eigen::Matrix<double, 12, 1> ue;
  const auto dofs = element_dofs(tet);
  for (int i = 0; i < 12; ++i) ue[i] = u[dofs[static_cast<std::size_t>(i)]];
  Vec6 eps = b_[tet] * ue;
  eps.tail<3>() *= 0.5;
  return eps;
}

double FemModel::ip_temperature(const Vec& nodal_temperature, std::size_t tet) const {
  const auto& t = mesh_->tets[tet];
  return 0.25 * (nodal_temperature[t[0]] + nodal_temperature[t[1]] +
                 nodal_temperature[t[2]] + nodal_temperature[t[3]]);
}

IntegrationOptions FemModel::options_for(std::size_t tet) const {
  IntegrationOptions opt;
  opt.elastic_only = mesh_->regions[tet] == Region::Foot;
  return opt;
}

std::vector<MaterialState> FemModel::initial_states() const {
  std::vector<MaterialState> s(mesh_->num_tets());
  for (auto& st : s) st.temperature = material_.reference_temperature;
  return s;
}

AssemblyResult FemModel::assemble_residual(const Vec& u,
                                           const std::vector<MaterialState>& states_old,
                                           const Vec& nodal_temperature, double t_new,
                                           double dt, bool with_tangent, int workers) const {
  const std::size_t ne = mesh_->num_tets();
  const auto ndof = static_cast<Eigen::Index>(mesh_->num_dofs());
  AssemblyResult out;
  out.stress.resize(ne);
  out.states.resize(ne);
  std::vector<Mat6> tangents(with_tangent ? ne : 0);
  std::vector<int> caps(ne, 0);
  std::vector<std::exception_ptr> failures(ne);

  parallel_for(ne, workers, [&](std::size_t e) {
    try {
      const Vec6 eps = strain(u, e);
      const double temp = ip_temperature(nodal_temperature, e);
      const IntegrationOptions opt = options_for(e);
      PointResult r = integrate_point(states_old[e], eps, temp, dt, material_, opt);
      if (with_tangent)
        tangents[e] = numerical_tangent(states_old[e], eps, temp, dt, material_, opt, r);
      out.stress[e] = r.stress;
      out.states[e] = r.state;
      caps[e] = r.sinh_caps;
    } catch (const ConvergenceError& err) {
      failures[e] = std::make_exception_ptr(
          ConvergenceError(std::string(err.what()) + " at integration point " +
                               std::to_string(e),
                           static_cast<int>(e)));
    } catch (...) {
      failures[e] = std::current_exception();
    }
  });
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);

  // Ordered reduction over elements.
  out.internal_force = Vec::Zero(ndof);
  std::vector<Eigen::Triplet<double>> trips;
  if (with_tangent) trips.reserve(ne * 144);
  for (std::size_t e = 0; e < ne; ++e) {
    const double v = mesh_->ips[e].weight;
    const auto dofs = element_dofs(e);
    const Eigen::Matrix<double, 12, 1> fe = v * b_[e].transpose() * out.stress[e];
    for (int i = 0; i < 12; ++i) out.internal_force[dofs[static_cast<std::size_t>(i)]] += fe[i];
    out.sinh_caps += caps[e];
    if (with_tangent) {
      const Eigen::Matrix<double, 12, 12> ke = v * b_[e].transpose() * tangents[e] * b_[e];
      for (int i = 0; i < 12; ++i) {
        const int gi = dofs[static_cast<std::size_t>(i)];
        if (dirichlet_mask_[static_cast<std::size_t>(gi)]) continue;
        for (int j = 0; j < 12; ++j) {
          const int gj = dofs[static_cast<std::size_t>(j)];
          if (dirichlet_mask_[static_cast<std::size_t>(gj)]) continue;
          trips.emplace_back(gi, gj, ke(i, j));
        }
      }
    }
  }
  out.residual = out.internal_force - external_force(t_new);
  for (Eigen::Index i = 0; i < ndof; ++i)
    if (dirichlet_mask_[static_cast<std::size_t>(i)]) out.residual[i] = 0.0;
  if (with_tangent) {
    for (Eigen::Index i = 0; i < ndof; ++i)
      if (dirichlet_mask_[static_cast<std::size_t>(i)]) trips.emplace_back(i, i, 1.0);
    out.tangent.resize(ndof, ndof);
    out.tangent.setFromTriplets(trips.begin(), trips.end());
  }
  return out;
}

}  // namespace romnet
