#pragma once

// Designs of experiments on the unit hypercube and the map to thermal-loading
// coordinates (Bernoulli indicator + standard-normal quantiles).

#include "romnet/common.hpp"

#include <array>
#include <cstdint>
#include <string>

namespace romnet {

struct Design {
  Mat points;  // n x d, entries in [0, 1)
  std::string kind;
  std::uint64_t seed = 0;
};

inline constexpr int kSobolMaxDim = 21;

/// Unscrambled Sobol' points (Joe-Kuo direction numbers) in Gray-code order,
/// dropping the first `skip` points.
Design sobol(int n, int d, int skip = 1);

/// Maximum-projection criterion sum_{i<j} prod_k (x_ik - x_jk)^-2.
double maxproj_criterion(const Mat& points);

/// Centered Latin hypercube optimized by simulated annealing on within-column
/// swaps against maxproj_criterion. Returns the best design visited.
Design maxproj_lhs(int n, int d, std::uint64_t seed, int iterations = 20000);

/// Uniform random design from a seeded generator.
Design random_design(int n, int d, std::uint64_t seed);

double normal_cdf(double x);
/// Inverse standard-normal CDF (Acklam's rational approximation refined by
/// one Halley step), accurate to ~1e-15 relative.
double normal_quantile(double p);

struct LoadingCoords {
  std::array<double, 5> upsilon{};
  bool clipped = false;  // some chi_i was clipped into [1e-12, 1 - 1e-12]
};

/// chi -> (1{chi_0 > 1/2}, Phi^-1(chi_1), ..., Phi^-1(chi_4)).
LoadingCoords to_loading_coords(const std::array<double, 5>& chi);

/// Lower star discrepancy proxy: max over anchored boxes [0, x_i) spanned by
/// the points themselves of |fraction inside - volume|.
double star_discrepancy(const Mat& points);

}  // namespace romnet
