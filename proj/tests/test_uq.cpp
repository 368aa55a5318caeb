#include "romnet/doe.hpp"
#include "romnet/uq.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace romnet;

namespace {

std::vector<double> normal_samples(int n, std::uint64_t seed, double mean = 0.0, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(mean, sd);
  std::vector<double> s(static_cast<std::size_t>(n));
  for (double& v : s) v = g(rng);
  return s;
}

double trapezoid(const Vec& x, const Vec& y) {
  double s = 0.0;
  for (Eigen::Index i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

}  // namespace

TEST(Zone, ThresholdMembership) {
  Vec ref(6);
  ref << 0.0, 1.0, 4.0, 10.0, 3.9999, 6.0;
  const ZoneOfInterest z = make_zone(ref, 0.4);
  EXPECT_EQ(z.ips, (std::vector<int>{2, 3, 5}));
  EXPECT_EQ(z.reference_max, 10.0);
  EXPECT_THROW(make_zone(Vec::Zero(4)), Error);
  EXPECT_THROW(make_zone(Vec()), Error);
}

TEST(Qoi, Averages) {
  ZoneOfInterest z;
  z.ips = {0, 2, 3};
  Vec w(4);
  w << 1.0, 100.0, 2.0, 3.0;
  EXPECT_DOUBLE_EQ(zone_average(Vec::Constant(4, 0.25), w, z), 0.25);
  Vec f(4);
  f << 1.0, 50.0, 4.0, -2.0;
  // (1*1 + 2*4 + 3*(-2)) / 6 = 1/2
  EXPECT_DOUBLE_EQ(zone_average(f, w, z), 0.5);
  Mat hydro = Mat::Zero(6, 4);
  hydro.topRows(3).setConstant(-40.0);
  EXPECT_NEAR(extract_qoi(f, hydro, w, z).sigma_eq, 0.0, 1e-12);
  Mat uniaxial = Mat::Zero(6, 4);
  uniaxial.row(0).setConstant(120.0);
  EXPECT_NEAR(extract_qoi(f, uniaxial, w, z).sigma_eq, 120.0, 1e-12);
  EXPECT_THROW(zone_average(f, w, ZoneOfInterest{}), Error);
}

TEST(Estimators, RationalToy) {
  const std::vector<double> s{1.0, 2.0, 4.0, 8.0, 10.0};
  const Estimate e = estimate(s);
  EXPECT_EQ(e.n, 5);
  EXPECT_DOUBLE_EQ(e.mean, 5.0);
  // Squared deviations 16 + 9 + 1 + 9 + 25 = 60, over n - 1 = 4.
  EXPECT_DOUBLE_EQ(e.variance, 15.0);
  EXPECT_EQ(estimate({}).n, 0);
}

TEST(ConfidenceInterval, FormulaOnRationalToy) {
  const std::vector<double> s{1.0, 2.0, 4.0, 8.0, 10.0};
  for (double alpha : {0.05, 0.01, 0.2}) {
    const Interval i = confidence_interval(s, alpha);
    const double half = normal_quantile(1.0 - alpha / 2.0) * std::sqrt(15.0 / 5.0);
    EXPECT_EQ(i.lower, 5.0 - half);
    EXPECT_EQ(i.upper, 5.0 + half);
  }
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
  const Interval c = confidence_interval({3.5, 3.5, 3.5}, 0.05);
  EXPECT_EQ(c.lower, 3.5);
  EXPECT_EQ(c.upper, 3.5);
  EXPECT_THROW(confidence_interval({1.0}, 0.05), Error);
  EXPECT_THROW(confidence_interval(s, 0.0), Error);
  // The 0.99 interval contains the 0.95 one.
  const Interval i95 = confidence_interval(s, 0.05), i99 = confidence_interval(s, 0.01);
  EXPECT_LT(i99.lower, i95.lower);
  EXPECT_GT(i99.upper, i95.upper);
}

TEST(ConfidenceInterval, WidthForStandardNormal) {
  const Interval i = confidence_interval(normal_samples(10000, 3), 0.05);
  EXPECT_NEAR(i.width(), 2.0 * 1.959964 / 100.0, 0.05 * 0.0392);
}

TEST(ConfidenceInterval, WidthScalesAsInverseRootN) {
  const double a = confidence_interval(normal_samples(2000, 4), 0.05).width();
  const double b = confidence_interval(normal_samples(8000, 5), 0.05).width();
  EXPECT_GE(a / b, 1.9);
  EXPECT_LE(a / b, 2.1);
}

TEST(ConfidenceInterval, Coverage) {
  // Exponential draws: known mean 2, skewed, so the interval is only
  // asymptotically exact.
  std::mt19937_64 rng(6);
  std::exponential_distribution<double> ex(0.5);
  int covered = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> s(200);
    for (double& v : s) v = ex(rng);
    const Interval i = confidence_interval(s, 0.05);
    covered += i.lower <= 2.0 && 2.0 <= i.upper;
  }
  EXPECT_GE(covered, 930);
  EXPECT_LE(covered, 970);
}

TEST(Kde, Normalization) {
  const std::vector<double> s = normal_samples(500, 7, 3.0, 2.0);
  const Vec grid = Vec::LinSpaced(4001, -15.0, 21.0);
  EXPECT_NEAR(trapezoid(grid, kde(s, grid)), 1.0, 1e-3);
  EXPECT_THROW(kde({1.0, 1.0, 1.0}, grid), Error);
  EXPECT_THROW(kde({1.0}, grid), Error);
}

TEST(Kde, SilvermanBandwidth) {
  const std::vector<double> s{0.0, 1.0, 2.0, 3.0, 10.0};
  // sd = sqrt(14.5); quartiles 1 and 3 give IQR / 1.34 = 1.4925...
  const double expected = 0.9 * (2.0 / 1.34) * std::pow(5.0, -0.2);
  EXPECT_NEAR(silverman_bandwidth(s), expected, 1e-14);
}

TEST(Kde, SymmetricSamplesGiveSymmetricDensity) {
  std::vector<double> s = normal_samples(100, 8);
  const std::size_t n = s.size();
  for (std::size_t i = 0; i < n; ++i) s.push_back(-s[i]);
  const Vec grid = Vec::LinSpaced(201, -5.0, 5.0);
  const Vec d = kde(s, grid);
  for (Eigen::Index i = 0; i < grid.size(); ++i) EXPECT_NEAR(d[i], d[grid.size() - 1 - i], 1e-10);
}

TEST(Kde, BimodalMixture) {
  std::vector<double> s = normal_samples(300, 9, -3.0, 1.0);
  const std::vector<double> t = normal_samples(300, 10, 3.0, 1.0);
  s.insert(s.end(), t.begin(), t.end());
  const Vec grid = Vec::LinSpaced(401, -8.0, 8.0);
  const std::vector<int> peaks = local_maxima(kde(s, grid));
  ASSERT_EQ(peaks.size(), 2u);
  EXPECT_NEAR(grid[peaks[0]], -3.0, 0.5);
  EXPECT_NEAR(grid[peaks[1]], 3.0, 0.5);
}

TEST(Histogram, CountsEverySample) {
  const std::vector<double> s{0.0, 0.1, 0.5, 0.99, 1.0};
  const Histogram h = histogram(s, 2);
  EXPECT_EQ(h.counts[0], 2.0);
  EXPECT_EQ(h.counts[1], 3.0);
  EXPECT_EQ(h.edges[1], 0.5);
  EXPECT_EQ(histogram({2.0, 2.0}, 3).counts.sum(), 2.0);
}

TEST(ErrorIndicators, Examples) {
  const Vec w = Vec::Constant(5, 0.5);
  std::vector<Vec3> pos;
  for (int i = 0; i < 5; ++i) pos.emplace_back(0.3 * i, 0.0, 0.0);
  Vec hf(5);
  hf << 1.0, 2.0, 5.0, 3.0, 0.5;
  ZoneOfInterest z = make_zone(hf, 0.4);
  const FieldErrors same = error_indicators(hf, hf, w, pos, z);
  EXPECT_EQ(same.l2_omega, 0.0);
  EXPECT_EQ(same.l2_zone, 0.0);
  EXPECT_EQ(same.linf_omega, 0.0);
  EXPECT_EQ(same.linf_zone, 0.0);
  EXPECT_EQ(same.average_error, 0.0);
  EXPECT_EQ(same.max_distance, 0.0);
  const FieldErrors scaled = error_indicators(1.03 * hf, hf, w, pos, z);
  EXPECT_NEAR(scaled.l2_omega, 0.03, 1e-14);
  EXPECT_NEAR(scaled.l2_zone, 0.03, 1e-14);
  EXPECT_NEAR(scaled.linf_omega, 0.03, 1e-14);
  EXPECT_NEAR(scaled.linf_zone, 0.03, 1e-14);
  EXPECT_NEAR(scaled.average_error, 0.03, 1e-14);
  EXPECT_EQ(scaled.max_distance, 0.0);
  Vec moved = hf;
  moved[3] = 6.0;
  EXPECT_NEAR(error_indicators(moved, hf, w, pos, z).max_distance, 0.3, 1e-14);
}

TEST(MonteCarlo, DeterministicAcrossWorkers) {
  auto evaluate = [](const std::array<double, 5>& chi) {
    DrawResult d;
    if (chi[0] > 0.9) throw Error("synthetic failure");
    d.ok = true;
    d.cluster = chi[0] < 0.5 ? 0 : 1;
    d.qoi.p_cum = chi[1] * chi[2];
    d.qoi.sigma_eq = 100.0 + chi[3] - chi[4];
    return d;
  };
  const UqReport a = run_monte_carlo(200, 12, 1, evaluate);
  const UqReport b = run_monte_carlo(200, 12, 4, evaluate);
  ASSERT_EQ(a.draws.size(), 200u);
  for (std::size_t i = 0; i < a.draws.size(); ++i) {
    EXPECT_EQ(a.draws[i].chi, b.draws[i].chi);
    EXPECT_EQ(a.draws[i].ok, b.draws[i].ok);
    EXPECT_EQ(a.draws[i].qoi.p_cum, b.draws[i].qoi.p_cum);
    EXPECT_EQ(a.draws[i].qoi.sigma_eq, b.draws[i].qoi.sigma_eq);
  }
  EXPECT_EQ(a.p_cum.mean, b.p_cum.mean);
  EXPECT_EQ(a.sigma_eq_99.lower, b.sigma_eq_99.lower);
  EXPECT_GT(a.failures, 0);
  EXPECT_EQ(a.failures + a.p_cum.n, 200);
  EXPECT_EQ(a.draws[0].error.empty(), a.draws[0].ok);
  EXPECT_NE(a.summary().find("draws failed: " + std::to_string(a.failures)), std::string::npos);
}

TEST(MonteCarlo, NoDraws) {
  const UqReport r = run_monte_carlo(0, 1, 4, [](const std::array<double, 5>&) { return DrawResult{}; });
  EXPECT_EQ(r.requested, 0);
  EXPECT_EQ(r.failures, 0);
  EXPECT_TRUE(r.draws.empty());
  EXPECT_EQ(r.p_cum.n, 0);
  EXPECT_FALSE(r.summary().empty());
}
