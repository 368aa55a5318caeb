#include "romnet/mesh.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace romnet {

double signed_tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

double Mesh::total_volume() const {
  double v = 0.0;
  for (const auto& ip : ips) v += ip.weight;
  return v;
}

std::vector<int> Mesh::surface_nodes() const {
  std::vector<char> on(nodes.size(), 0);
  for (const auto& f : facets)
    for (int n : f) on[static_cast<std::size_t>(n)] = 1;
  std::vector<int> out;
  for (std::size_t i = 0; i < on.size(); ++i)
    if (on[i]) out.push_back(static_cast<int>(i));
  return out;
}

Vec Mesh::lumped_node_weights() const {
  Vec w = Vec::Zero(static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t e = 0; e < tets.size(); ++e)
    for (int n : tets[e]) w[n] += ips[e].weight / 4.0;
  return w;
}

Vec Mesh::ip_weights() const {
  Vec w(static_cast<Eigen::Index>(ips.size()));
  for (std::size_t i = 0; i < ips.size(); ++i) w[static_cast<Eigen::Index>(i)] = ips[i].weight;
  return w;
}

void finalize_mesh(Mesh& mesh) {
  const std::size_t ne = mesh.tets.size();
  mesh.ips.resize(ne);
  mesh.gradients.resize(ne);
  if (mesh.regions.size() != ne) mesh.regions.assign(ne, Region::Airfoil);

  std::vector<std::size_t> inverted;
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& t = mesh.tets[e];
    const Vec3& x0 = mesh.nodes[t[0]];
    const Vec3& x1 = mesh.nodes[t[1]];
    const Vec3& x2 = mesh.nodes[t[2]];
    const Vec3& x3 = mesh.nodes[t[3]];
    const double vol = signed_tet_volume(x0, x1, x2, x3);
    if (!(vol > 0.0)) {
      inverted.push_back(e);
      continue;
    }
    Eigen::Matrix3d jac;
    jac.col(0) = x1 - x0;
    jac.col(1) = x2 - x0;
    jac.col(2) = x3 - x0;
    const Eigen::Matrix3d inv = jac.inverse();
    Eigen::Matrix<double, 3, 4> g;
    for (int a = 0; a < 3; ++a) g.col(a + 1) = inv.row(a).transpose();
    g.col(0) = -(g.col(1) + g.col(2) + g.col(3));
    mesh.gradients[e] = g;
    mesh.ips[e] = {(x0 + x1 + x2 + x3) / 4.0, vol};
  }
  if (!inverted.empty()) {
    std::ostringstream os;
    os << "mesh has " << inverted.size() << " inverted or degenerate tets; cells:";
    for (std::size_t i = 0; i < std::min<std::size_t>(inverted.size(), 20); ++i)
      os << ' ' << inverted[i];
    if (inverted.size() > 20) os << " ...";
    throw Error(os.str());
  }

  // Boundary facets: faces owned by exactly one tet.
  static constexpr int kFaces[4][4] = {{1, 2, 3, 0}, {0, 3, 2, 1}, {0, 1, 3, 2}, {0, 2, 1, 3}};
  std::map<std::array<int, 3>, std::pair<int, std::array<int, 4>>> faces;
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& t = mesh.tets[e];
    for (const auto& f : kFaces) {
      std::array<int, 3> key = {t[f[0]], t[f[1]], t[f[2]]};
      std::sort(key.begin(), key.end());
      auto& entry = faces[key];
      entry.first += 1;
      entry.second = {t[f[0]], t[f[1]], t[f[2]], t[f[3]]};
    }
  }
  mesh.facets.clear();
  mesh.facet_normals.clear();
  mesh.facet_areas.clear();
  for (const auto& [key, entry] : faces) {
    if (entry.first != 1) continue;
    std::array<int, 3> f = {entry.second[0], entry.second[1], entry.second[2]};
    const Vec3& a = mesh.nodes[f[0]];
    Vec3 n = (mesh.nodes[f[1]] - a).cross(mesh.nodes[f[2]] - a);
    if (n.dot(mesh.nodes[entry.second[3]] - a) > 0.0) {
      std::swap(f[1], f[2]);
      n = -n;
    }
    const double area2 = n.norm();
    mesh.facets.push_back(f);
    mesh.facet_normals.push_back(n / area2);
    mesh.facet_areas.push_back(0.5 * area2);
  }
}

Mesh generate_toy_blade_mesh(const BladeParams& p) {
  if (p.nx < 1 || p.ny < 1 || p.nz < 1) throw Error("blade divisions must be >= 1");
  if (!(p.root_chord > 0.0) || !(p.tip_chord > 0.0) || !(p.length > 0.0) ||
      !(p.thickness > 0.0))
    throw Error("blade dimensions and taper must be positive");

  Mesh mesh;
  const int nx = p.nx, ny = p.ny, nz = p.nz;
  auto node_id = [&](int i, int j, int k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
  for (int k = 0; k <= nz; ++k) {
    const double zeta = static_cast<double>(k) / nz;
    const double chord = p.root_chord + (p.tip_chord - p.root_chord) * zeta;
    const double thick = p.thickness * chord / p.root_chord;
    const double theta = p.twist * zeta;
    const double ct = std::cos(theta), st = std::sin(theta);
    for (int j = 0; j <= ny; ++j) {
      for (int i = 0; i <= nx; ++i) {
        const double s = static_cast<double>(i) / nx;
        const double eta = static_cast<double>(j) / ny;
        const double x0 = (s - 0.5) * chord;
        const double y0 = (eta - 0.5) * thick;
        mesh.nodes.emplace_back(ct * x0 - st * y0, st * x0 + ct * y0, zeta * p.length);
        mesh.chord_coord.push_back(s);
        mesh.span_coord.push_back(zeta);
      }
    }
  }

  // Kuhn split of each hex along the v0-v6 diagonal; conforming across cells.
  static constexpr int kKuhn[6][4] = {{0, 1, 2, 6}, {0, 2, 3, 6}, {0, 3, 7, 6},
                                      {0, 7, 4, 6}, {0, 4, 5, 6}, {0, 5, 1, 6}};
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const std::array<int, 8> v = {node_id(i, j, k),         node_id(i + 1, j, k),
                                      node_id(i + 1, j + 1, k), node_id(i, j + 1, k),
                                      node_id(i, j, k + 1),     node_id(i + 1, j, k + 1),
                                      node_id(i + 1, j + 1, k + 1), node_id(i, j + 1, k + 1)};
        for (const auto& kt : kKuhn) {
          std::array<int, 4> t = {v[kt[0]], v[kt[1]], v[kt[2]], v[kt[3]]};
          // Orientation is fixed on the untwisted lattice so that twisting
          // can only show up as inversion.
          auto ref = [&](int n) {
            const int ii = n % (nx + 1);
            const int jj = (n / (nx + 1)) % (ny + 1);
            const int kk = n / ((nx + 1) * (ny + 1));
            return Vec3(ii, jj, kk);
          };
          if (signed_tet_volume(ref(t[0]), ref(t[1]), ref(t[2]), ref(t[3])) < 0.0)
            std::swap(t[2], t[3]);
          mesh.tets.push_back(t);
          mesh.regions.push_back(k < p.foot_layers ? Region::Foot : Region::Airfoil);
        }
      }
    }
  }
  finalize_mesh(mesh);

  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) mesh.dirichlet.push_back({node_id(i, j, 0), Vec3::Zero()});

  // Pressure side: the lateral face at the largest thickness coordinate.
  auto on_pressure_side = [&](int n) { return (n / (nx + 1)) % (ny + 1) == ny; };
  for (std::size_t f = 0; f < mesh.facets.size(); ++f) {
    const auto& fa = mesh.facets[f];
    if (on_pressure_side(fa[0]) && on_pressure_side(fa[1]) && on_pressure_side(fa[2]))
      mesh.pressure_facets.push_back(static_cast<int>(f));
  }
  mesh.rotation_axis_point = Vec3(0.0, p.axis_y, p.axis_z);
  mesh.rotation_axis_dir = Vec3::UnitX();
  return mesh;
}

}  // namespace romnet
