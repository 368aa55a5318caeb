#pragma once

// Snapshot POD under a diagonal (lumped-mass or integration-weight) inner
// product.

#include "romnet/common.hpp"

namespace romnet {

struct ReducedBasis {
  Mat modes;          // n x N, orthonormal under diag(weights)
  Vec eigenvalues;    // lambda_i of the snapshot correlation matrix, retained modes
  Vec all_eigenvalues;
  Vec weights;        // inner-product weights, one per row
  double tolerance = 0.0;

  Eigen::Index size() const { return modes.cols(); }
  /// Coefficients <psi_i, u>.
  Vec project(const Vec& u) const;
  Vec reconstruct(const Vec& coefficients) const { return modes * coefficients; }
  /// ||u - Pi u|| / ||u|| in the weighted norm (0 for u = 0).
  double projection_error(const Vec& u) const;
};

double weighted_norm(const Vec& u, const Vec& weights);
double weighted_dot(const Vec& a, const Vec& b, const Vec& weights);

/// Keeps the modes with lambda_i / lambda_1 >= tol^2 (singular-value ratio
/// >= tol). Computed from the SVD of diag(w)^1/2 S, which spans the same
/// modes as the eigenvectors of the correlation matrix S^T diag(w) S. All-zero
/// snapshots give an empty basis.
ReducedBasis snapshot_pod(const Mat& snapshots, double tol, const Vec& weights);

/// Same truncation through the correlation-matrix eigenproblem
/// psi_i = S xi_i / sqrt(lambda_i).
ReducedBasis snapshot_pod_correlation(const Mat& snapshots, double tol, const Vec& weights);

}  // namespace romnet
