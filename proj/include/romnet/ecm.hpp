#pragma once

// Empirical cubature: a sparse set of integration points with positive
// weights reproducing the full-quadrature integrals of sampled integrands.

#include "romnet/common.hpp"

#include <vector>

namespace romnet {

struct ReducedQuadrature {
  std::vector<int> points;   // ascending IP indices
  Vec weights;               // > 0, aligned with points
  double residual = 0.0;     // achieved relative residual
  bool stagnated = false;    // stopped before reaching the tolerance
};

/// Lawson-Hanson non-negative least squares min ||A x - b||, x >= 0.
Vec nnls(const Mat& a, const Vec& b, int max_iterations = -1);

/// `integrands` holds one sampled integrand per row, evaluated at every IP
/// (columns); `ip_weights` is the full quadrature. Greedy selection of the
/// column most positively correlated with the current residual, re-solving
/// NNLS over the selected set, until ||G_Z w_Z - G w|| <= tol ||G w||.
ReducedQuadrature ecm_quadrature(const Mat& integrands, const Vec& ip_weights,
                                 double tol = 5e-4);

}  // namespace romnet
