#include "romnet/doe.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace romnet;

TEST(Sobol, OneDimensionalRecursion) {
  const Design d = sobol(3, 1, 1);
  EXPECT_EQ(d.points(0, 0), 0.5);
  EXPECT_EQ(d.points(1, 0), 0.75);
  EXPECT_EQ(d.points(2, 0), 0.25);
  EXPECT_EQ(d.kind, "sobol");
}

TEST(Sobol, KnownSecondDimension) {
  // Direction numbers of the second coordinate are all 1, giving the
  // van der Corput-like sequence 1/2, 1/4, 3/4, 3/8, ...
  const Design d = sobol(4, 2, 1);
  EXPECT_EQ(d.points(0, 1), 0.5);
  EXPECT_EQ(d.points(1, 1), 0.25);
  EXPECT_EQ(d.points(2, 1), 0.75);
  EXPECT_EQ(d.points(3, 1), 0.375);
}

TEST(Sobol, MarginalStratification) {
  const Design d = sobol(120, 5, 1);
  for (Eigen::Index c = 0; c < 5; ++c) {
    std::vector<int> bins(10, 0);
    for (Eigen::Index i = 0; i < 120; ++i) {
      EXPECT_GE(d.points(i, c), 0.0);
      EXPECT_LT(d.points(i, c), 1.0);
      ++bins[static_cast<std::size_t>(d.points(i, c) * 10)];
    }
    for (int b : bins) EXPECT_NEAR(b, 12, 2);
  }
  EXPECT_THROW(sobol(4, kSobolMaxDim + 1), Error);
}

TEST(Sobol, LowerDiscrepancyThanRandom) {
  const double s = star_discrepancy(sobol(128, 2, 1).points);
  std::vector<double> r;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) r.push_back(star_discrepancy(random_design(128, 2, seed).points));
  std::nth_element(r.begin(), r.begin() + 10, r.end());
  EXPECT_LT(s, r[10]);
}

TEST(StarDiscrepancy, SinglePoint) {
  Mat p(1, 1);
  p << 0.5;
  // Box [0, 0.5) holds no point: |0 - 0.5|; the closed anchor gives |1 - 0.5|.
  EXPECT_NEAR(star_discrepancy(p), 0.5, 1e-15);
}

TEST(MaxProj, TwoPointsOneDimension) {
  const Design d = maxproj_lhs(2, 1, 7, 100);
  std::vector<double> v{d.points(0, 0), d.points(1, 0)};
  std::sort(v.begin(), v.end());
  EXPECT_EQ(v[0], 0.25);
  EXPECT_EQ(v[1], 0.75);
}

TEST(MaxProj, LatinStructureAndImprovement) {
  const int n = 40, dim = 5;
  const Design d = maxproj_lhs(n, dim, 12, 5000);
  for (int c = 0; c < dim; ++c) {
    std::vector<double> col(d.points.col(c).data(), d.points.col(c).data() + n);
    std::sort(col.begin(), col.end());
    for (int i = 0; i < n; ++i) EXPECT_DOUBLE_EQ(col[static_cast<std::size_t>(i)], (2.0 * i + 1.0) / (2.0 * n));
  }
  // The annealing never returns anything worse than its starting design, and
  // it clearly beats random Latin hypercubes.
  std::mt19937_64 rng(99);
  double worst_random = 0.0;
  for (int t = 0; t < 5; ++t) {
    Mat lhs(n, dim);
    for (int c = 0; c < dim; ++c) {
      std::vector<int> perm(n);
      for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
      std::shuffle(perm.begin(), perm.end(), rng);
      for (int i = 0; i < n; ++i) lhs(i, c) = (2.0 * perm[static_cast<std::size_t>(i)] + 1.0) / (2.0 * n);
    }
    worst_random = std::max(worst_random, maxproj_criterion(lhs));
  }
  EXPECT_LT(maxproj_criterion(d.points), worst_random);
  EXPECT_LE(maxproj_criterion(maxproj_lhs(n, dim, 12, 5000).points), maxproj_criterion(maxproj_lhs(n, dim, 12, 0).points));
}

TEST(MaxProj, CriterionOracle) {
  Mat p(3, 2);
  p << 0.1, 0.2, 0.4, 0.9, 0.8, 0.5;
  double expected = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      double prod = 1.0;
      for (int k = 0; k < 2; ++k) prod *= 1.0 / ((p(i, k) - p(j, k)) * (p(i, k) - p(j, k)));
      expected += prod;
    }
  EXPECT_NEAR(maxproj_criterion(p), expected, 1e-12 * expected);
}

TEST(MaxProj, Deterministic) {
  const Design a = maxproj_lhs(20, 5, 3, 2000), b = maxproj_lhs(20, 5, 3, 2000);
  EXPECT_TRUE(a.points == b.points);
  EXPECT_EQ(a.seed, 3u);
}

TEST(LoadingCoords, Examples) {
  const LoadingCoords a = to_loading_coords({0.3, 0.5, 0.5, 0.5, 0.5});
  for (double u : a.upsilon) EXPECT_EQ(u, 0.0);
  EXPECT_EQ(to_loading_coords({0.7, 0.5, 0.5, 0.5, 0.5}).upsilon[0], 1.0);
  EXPECT_NEAR(to_loading_coords({0.2, 0.975, 0.5, 0.5, 0.5}).upsilon[1], 1.959964, 1e-5);
  const LoadingCoords z = to_loading_coords({0.2, 0.0, 0.5, 0.5, 0.5});
  EXPECT_TRUE(z.clipped);
  EXPECT_TRUE(std::isfinite(z.upsilon[1]));
}

TEST(NormalQuantile, RoundTrip) {
  for (double lp = -6.0; lp <= -0.30103; lp += 0.05) {
    const double p = std::pow(10.0, lp);
    EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-8);
    EXPECT_NEAR(normal_cdf(normal_quantile(1.0 - p)), 1.0 - p, 1e-8);
  }
  EXPECT_NEAR(normal_quantile(0.995), 2.5758293035489, 1e-9);
}

TEST(LoadingCoords, MomentsOfUniformSample) {
  const Design d = random_design(100000, 5, 17);
  std::array<double, 5> mean{}, sq{};
  for (Eigen::Index i = 0; i < d.points.rows(); ++i) {
    std::array<double, 5> chi;
    for (int k = 0; k < 5; ++k) chi[static_cast<std::size_t>(k)] = d.points(i, k);
    const LoadingCoords c = to_loading_coords(chi);
    for (std::size_t k = 0; k < 5; ++k) {
      mean[k] += c.upsilon[k];
      sq[k] += c.upsilon[k] * c.upsilon[k];
    }
  }
  const double n = static_cast<double>(d.points.rows());
  EXPECT_NEAR(mean[0] / n, 0.5, 0.02);
  for (std::size_t k = 1; k < 5; ++k) {
    const double m = mean[k] / n;
    EXPECT_NEAR(m, 0.0, 0.02);
    EXPECT_NEAR(sq[k] / n - m * m, 1.0, 0.05);
  }
}
