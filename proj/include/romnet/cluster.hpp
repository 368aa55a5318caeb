#pragma once

// ROM-oriented dissimilarity, k-medoids (PAM), SMACOF multidimensional
// scaling and maximin snapshot selection.

#include "romnet/common.hpp"

#include <cstdint>
#include <vector>

namespace romnet {

/// sin of the angle between span{a} and span{b} under diag(weights).
double rom_dissimilarity(const Vec& a, const Vec& b, const Vec& weights);

/// Multi-field version: root mean square of the sines of the principal
/// angles between span(A) and span(B) (columns are fields). Reduces to
/// rom_dissimilarity for single columns.
double subspace_dissimilarity(const Mat& a, const Mat& b, const Vec& weights);

/// Pairwise dissimilarities of the columns of `fields`.
Mat dissimilarity_matrix(const Mat& fields, const Vec& weights, int workers = 1);

struct Dictionary {
  std::vector<int> labels;     // per sample
  std::vector<int> medoids;    // per cluster, sample index
  double cost = 0.0;
  std::vector<std::vector<int>> selected;  // per cluster, snapshot sample indices
};

/// PAM BUILD + SWAP; the first start uses BUILD, the others uniform random
/// medoids. Returns the lowest-cost result; clusters are numbered by
/// ascending medoid index.
Dictionary k_medoids(const Mat& d, int k, int n_init, std::uint64_t seed);

/// Cost sum_i min_m d(i, m) of a medoid set.
double medoid_cost(const Mat& d, const std::vector<int>& medoids);

struct MdsResult {
  Mat coords;                  // n x dim
  double relative_stress = 0;  // stress(Z) / stress(0)
  std::vector<double> stress_history;
  int iterations = 0;
};

/// SMACOF from a classical-scaling start; stops when the stress decrease is
/// below 1e-9 (relative to stress(0)) or after 300 iterations.
MdsResult mds_smacof(const Mat& d, int dim = 2, int max_iterations = 300, double tol = 1e-9);

/// Greedy maximin selection of m members starting from the medoid.
std::vector<int> maximin_select(const Mat& d, const std::vector<int>& members, int m, int medoid);

/// Index of the closest medoid field (ties go to the lowest index).
int label_by_medoid(const Vec& field, const std::vector<Vec>& medoid_fields, const Vec& weights,
                    bool* tie = nullptr);

}  // namespace romnet
