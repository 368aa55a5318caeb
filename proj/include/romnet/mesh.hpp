#pragma once

// Procedural tapered, twisted toy blade: a structured hexahedral lattice split
// into linear tetrahedra with one integration point per element.

#include "romnet/common.hpp"

#include <array>
#include <string>
#include <vector>

namespace romnet {

enum class Region { Foot, Airfoil };

struct BladeParams {
  double length = 50.0;        // span, along z
  double root_chord = 20.0;    // along x
  double tip_chord = 15.0;
  double thickness = 4.0;      // along y at the root; scales with chord
  double twist = 0.2;          // radians, root to tip
  int nx = 4, ny = 2, nz = 12;
  int foot_layers = 1;         // element layers in z tagged as foot
  // Rotation axis: parallel to x, passing through (y, z) = axis_y, axis_z.
  double axis_y = 0.0;
  double axis_z = -250.0;
};

struct IntegrationPoint {
  Vec3 position;
  double weight;  // tet volume
};

struct DirichletCondition {
  int node;
  Vec3 value;
};

struct Mesh {
  std::vector<Vec3> nodes;
  std::vector<std::array<int, 4>> tets;
  std::vector<std::array<int, 3>> facets;  // oriented with outward normals
  std::vector<Vec3> facet_normals;
  std::vector<double> facet_areas;
  std::vector<int> pressure_facets;        // indices into facets
  std::vector<DirichletCondition> dirichlet;
  std::vector<IntegrationPoint> ips;       // one per tet
  std::vector<Region> regions;             // one per tet
  // Shape-function gradients per tet: column a is grad N_a.
  std::vector<Eigen::Matrix<double, 3, 4>> gradients;
  // Chordwise and spanwise reference coordinates of each node in [0, 1].
  std::vector<double> chord_coord;
  std::vector<double> span_coord;
  Vec3 rotation_axis_point = Vec3::Zero();
  Vec3 rotation_axis_dir = Vec3::UnitX();

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_tets() const { return tets.size(); }
  std::size_t num_dofs() const { return 3 * nodes.size(); }
  double total_volume() const;
  /// Nodes on the boundary surface, ascending.
  std::vector<int> surface_nodes() const;
  /// Row-sum lumped mass weights per node (volume / 4 per incident tet).
  Vec lumped_node_weights() const;
  /// Integration weights as a vector.
  Vec ip_weights() const;
};

double signed_tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// Builds the blade mesh. Throws Error listing inverted cells if any tet has
/// non-positive volume.
Mesh generate_toy_blade_mesh(const BladeParams& params);

/// Recomputes facets, normals, integration points and gradients from nodes and
/// tets; used by the generator and by tests building meshes by hand.
void finalize_mesh(Mesh& mesh);

}  // namespace romnet
