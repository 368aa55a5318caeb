#include "romnet/thermal.hpp"

#include "romnet/hfm.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

namespace romnet {

GeodesicMatrix surface_geodesic_matrix(const Mesh& mesh) {
  GeodesicMatrix out;
  out.surface_nodes = mesh.surface_nodes();
  const std::size_t s = out.surface_nodes.size();
  std::vector<int> local(mesh.num_nodes(), -1);
  for (std::size_t i = 0; i < s; ++i) local[static_cast<std::size_t>(out.surface_nodes[i])] = static_cast<int>(i);

  std::vector<std::vector<std::pair<int, double>>> adj(s);
  std::set<std::pair<int, int>> seen;
  for (const auto& f : mesh.facets) {
    for (int e = 0; e < 3; ++e) {
      int a = local[static_cast<std::size_t>(f[e])];
      int b = local[static_cast<std::size_t>(f[(e + 1) % 3])];
      if (a > b) std::swap(a, b);
      if (!seen.insert({a, b}).second) continue;
      const double len = (mesh.nodes[static_cast<std::size_t>(f[e])] -
                          mesh.nodes[static_cast<std::size_t>(f[(e + 1) % 3])]).norm();
      adj[static_cast<std::size_t>(a)].emplace_back(b, len);
      adj[static_cast<std::size_t>(b)].emplace_back(a, len);
    }
  }

  out.distance = Mat::Constant(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s),
                               std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  for (std::size_t src = 0; src < s; ++src) {
    auto dist = out.distance.col(static_cast<Eigen::Index>(src));
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    dist[static_cast<Eigen::Index>(src)] = 0.0;
    pq.emplace(0.0, static_cast<int>(src));
    while (!pq.empty()) {
      auto [d, v] = pq.top();
      pq.pop();
      if (d > dist[v]) continue;
      for (auto [w, len] : adj[static_cast<std::size_t>(v)]) {
        if (d + len < dist[w]) {
          dist[w] = d + len;
          pq.emplace(d + len, w);
        }
      }
    }
  }
  // Connectivity check from the first column.
  std::vector<int> unreachable;
  for (std::size_t i = 0; i < s; ++i)
    if (!std::isfinite(out.distance(static_cast<Eigen::Index>(i), 0)))
      unreachable.push_back(out.surface_nodes[i]);
  if (!unreachable.empty()) {
    // Label components for the diagnostic.
    std::vector<int> comp(s, -1);
    int nc = 0;
    for (std::size_t i = 0; i < s; ++i) {
      if (comp[i] >= 0) continue;
      for (std::size_t j = 0; j < s; ++j)
        if (std::isfinite(out.distance(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i))))
          comp[j] = nc;
      ++nc;
    }
    std::ostringstream os;
    os << "surface graph is disconnected: " << nc << " components; sizes:";
    for (int c = 0; c < nc; ++c) os << ' ' << std::count(comp.begin(), comp.end(), c);
    throw Error(os.str());
  }
  // Symmetrize round-off of the two Dijkstra directions.
  out.distance = 0.5 * (out.distance + out.distance.transpose()).eval();
  return out;
}

SparseMat laplacian_matrix(const Mesh& mesh) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(mesh.num_tets() * 16);
  for (std::size_t e = 0; e < mesh.num_tets(); ++e) {
    const auto& g = mesh.gradients[e];
    const Eigen::Matrix4d ke = mesh.ips[e].weight * (g.transpose() * g);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) trips.emplace_back(mesh.tets[e][a], mesh.tets[e][b], ke(a, b));
  }
  const auto n = static_cast<Eigen::Index>(mesh.num_nodes());
  SparseMat k(n, n);
  k.setFromTriplets(trips.begin(), trips.end());
  return k;
}

namespace {

SparseMat select(const SparseMat& k, const std::vector<int>& rows, const std::vector<int>& cols,
                 std::size_t n) {
  std::vector<int> rmap(n, -1), cmap(n, -1);
  for (std::size_t i = 0; i < rows.size(); ++i) rmap[static_cast<std::size_t>(rows[i])] = static_cast<int>(i);
  for (std::size_t i = 0; i < cols.size(); ++i) cmap[static_cast<std::size_t>(cols[i])] = static_cast<int>(i);
  std::vector<Eigen::Triplet<double>> trips;
  for (int c = 0; c < k.outerSize(); ++c)
    for (SparseMat::InnerIterator it(k, c); it; ++it) {
      const int r = rmap[static_cast<std::size_t>(it.row())];
      const int cc = cmap[static_cast<std::size_t>(it.col())];
      if (r >= 0 && cc >= 0) trips.emplace_back(r, cc, it.value());
    }
  SparseMat out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

}  // namespace

HarmonicExtension::HarmonicExtension(const Mesh& mesh) : n_(mesh.num_nodes()) {
  surface_ = mesh.surface_nodes();
  std::vector<char> on(n_, 0);
  for (int s : surface_) on[static_cast<std::size_t>(s)] = 1;
  for (std::size_t i = 0; i < n_; ++i)
    if (!on[i]) interior_.push_back(static_cast<int>(i));
  laplacian_ = laplacian_matrix(mesh);
  if (!interior_.empty()) {
    k_ii_ = select(laplacian_, interior_, interior_, n_);
    k_ib_ = select(laplacian_, interior_, surface_, n_);
    solver_ = std::make_shared<Eigen::SimplicialLDLT<SparseMat>>(k_ii_);
    if (solver_->info() != Eigen::Success) throw Error("interior Laplacian factorization failed");
  }
}

Vec HarmonicExtension::extend(const Vec& surface_values) const {
  if (static_cast<std::size_t>(surface_values.size()) != surface_.size())
    throw Error("surface field size mismatch in harmonic extension");
  Vec out = Vec::Zero(static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < surface_.size(); ++i) out[surface_[i]] = surface_values[static_cast<Eigen::Index>(i)];
  if (!interior_.empty()) {
    const Vec rhs = -(k_ib_ * surface_values);
    const Vec ui = solver_->solve(rhs);
    for (std::size_t i = 0; i < interior_.size(); ++i) out[interior_[i]] = ui[static_cast<Eigen::Index>(i)];
  }
  return out;
}

Vec HarmonicExtension::restrict(const Vec& nodal) const {
  Vec out(static_cast<Eigen::Index>(surface_.size()));
  for (std::size_t i = 0; i < surface_.size(); ++i) out[static_cast<Eigen::Index>(i)] = nodal[surface_[i]];
  return out;
}

double HarmonicExtension::interior_residual(const Vec& nodal) const {
  if (interior_.empty()) return 0.0;
  Vec ui(static_cast<Eigen::Index>(interior_.size()));
  for (std::size_t i = 0; i < interior_.size(); ++i) ui[static_cast<Eigen::Index>(i)] = nodal[interior_[i]];
  const Vec ub = restrict(nodal);
  const Vec boundary_part = k_ib_ * ub;
  const double denom = std::max(boundary_part.norm(), (k_ii_ * ui).norm());
  if (denom == 0.0) return 0.0;
  return (k_ii_ * ui + boundary_part).norm() / denom;
}

Mat surface_covariance(const GeodesicMatrix& geo, double std_dev, double correlation_length) {
  if (!(correlation_length > 0.0)) throw Error("correlation length must be positive");
  return std_dev * std_dev * (-geo.distance.array() / correlation_length).exp().matrix();
}

FluctuationModes build_fluctuation_modes(const Mesh& mesh, const GeodesicMatrix& geo,
                                         const HarmonicExtension& ext, double correlation_length,
                                         double std_dev, int n_modes) {
  (void)mesh;
  const Mat cov = surface_covariance(geo, std_dev, correlation_length);
  Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
  if (eig.info() != Eigen::Success) throw Error("covariance eigen-solver did not converge");
  const Eigen::Index s = cov.rows();
  FluctuationModes out;
  out.eigenvalues = eig.eigenvalues().reverse();
  for (int i = 0; i < n_modes && i < s; ++i) {
    Vec v = eig.eigenvectors().col(s - 1 - i);
    Eigen::Index imax;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0.0) v = -v;
    const double lambda = std::max(out.eigenvalues[i], 0.0);
    Vec surf = std::sqrt(lambda) * v;
    out.surface.push_back(surf);
    out.nodal.push_back(ext.extend(surf));
  }
  return out;
}

ThermalModel build_thermal_model(const Mesh& mesh, const ThermalParams& params,
                                 double root_chord) {
  ThermalModel model;
  model.params = params;
  model.correlation_length =
      params.correlation_length > 0.0 ? params.correlation_length : 0.25 * root_chord;
  HarmonicExtension ext(mesh);
  const GeodesicMatrix geo = surface_geodesic_matrix(mesh);
  model.surface_nodes = geo.surface_nodes;

  // Reference: analytic trace, then harmonic extension.
  Vec trace(static_cast<Eigen::Index>(geo.surface_nodes.size()));
  for (std::size_t i = 0; i < geo.surface_nodes.size(); ++i) {
    const auto n = static_cast<std::size_t>(geo.surface_nodes[i]);
    const double s = mesh.chord_coord[n];
    const double zeta = mesh.span_coord[n];
    const double t_air = params.t_leading + (params.t_trailing - params.t_leading) * s;
    const double ramp = 1.0 - std::exp(-zeta / params.root_decay);
    trace[static_cast<Eigen::Index>(i)] = params.t_root + (t_air - params.t_root) * ramp +
                                          params.span_bump * std::sin(M_PI * zeta);
  }
  model.t_ref = ext.extend(trace);

  // Trailing-edge bump centred on the trailing-edge surface node closest to
  // the requested span position and to mid-thickness.
  std::size_t centre = 0;
  double best = std::numeric_limits<double>::infinity();
  Vec3 mid_te = Vec3::Zero();
  {
    // Mid-thickness trailing-edge point at the requested span, averaged over
    // the trailing-edge nodes at the closest span station.
    double best_dz = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < geo.surface_nodes.size(); ++i) {
      const auto n = static_cast<std::size_t>(geo.surface_nodes[i]);
      if (mesh.chord_coord[n] < 1.0 - 1e-12) continue;
      best_dz = std::min(best_dz, std::abs(mesh.span_coord[n] - params.perturbation_span));
    }
    int count = 0;
    for (std::size_t i = 0; i < geo.surface_nodes.size(); ++i) {
      const auto n = static_cast<std::size_t>(geo.surface_nodes[i]);
      if (mesh.chord_coord[n] < 1.0 - 1e-12) continue;
      if (std::abs(std::abs(mesh.span_coord[n] - params.perturbation_span) - best_dz) > 1e-12)
        continue;
      mid_te += mesh.nodes[n];
      ++count;
    }
    mid_te /= std::max(count, 1);
  }
  for (std::size_t i = 0; i < geo.surface_nodes.size(); ++i) {
    const auto n = static_cast<std::size_t>(geo.surface_nodes[i]);
    const double d = (mesh.nodes[n] - mid_te).norm();
    if (d < best) {
      best = d;
      centre = i;
    }
  }
  Vec bump(static_cast<Eigen::Index>(geo.surface_nodes.size()));
  for (Eigen::Index i = 0; i < bump.size(); ++i) {
    const double d = geo.distance(i, static_cast<Eigen::Index>(centre)) / params.perturbation_radius;
    bump[i] = std::exp(-d * d);
  }
  Vec dt0 = ext.extend(bump);
  dt0 *= params.perturbation_max / dt0.maxCoeff();
  model.delta_t0 = dt0;

  FluctuationModes fm = build_fluctuation_modes(mesh, geo, ext, model.correlation_length,
                                                params.std_dev, params.num_modes);
  model.modes = std::move(fm.nodal);
  model.eigenvalues = fm.eigenvalues;
  return model;
}

ThermalSample sample_temperature(const ThermalModel& model, const std::array<double, 5>& upsilon) {
  if (upsilon[0] != 0.0 && upsilon[0] != 1.0) throw Error("Upsilon_0 must be 0 or 1");
  ThermalSample s;
  s.upsilon = upsilon;
  s.t_max = model.t_ref + upsilon[0] * model.delta_t0;
  for (std::size_t i = 0; i < model.modes.size() && i < 4; ++i) s.t_max += upsilon[i + 1] * model.modes[i];
  for (Eigen::Index i = 0; i < s.t_max.size(); ++i)
    if (s.t_max[i] < 0.0 || s.t_max[i] > model.params.melting_temperature) ++s.out_of_range;
  return s;
}

Vec thermal_at_time(const ThermalSample& sample, double t, const LoadSchedule& schedule) {
  return temperature_at(sample.t_max, schedule.omega_at(t), schedule.reference_temperature);
}

}  // namespace romnet
