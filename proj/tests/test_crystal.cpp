#include "romnet/crystal.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

using namespace romnet;

namespace {

FamilyParams family(double r0, double k, double n, double eps_h, double c, double d, double big_m,
                    double m, double q, double b) {
  FamilyParams f;
  f.r0 = TemperatureTable(r0);
  f.k_h = TemperatureTable(k);
  f.n_h = TemperatureTable(n);
  f.eps_h = TemperatureTable(eps_h);
  f.c = TemperatureTable(c);
  f.d = TemperatureTable(d);
  f.big_m = TemperatureTable(big_m);
  f.m = TemperatureTable(m);
  f.q = TemperatureTable(q);
  f.b = TemperatureTable(b);
  return f;
}

MaterialParams hardening_material() {
  MaterialParams p;
  p.octahedral = family(150.0, 100.0, 3.0, 1e-4, 2e4, 100.0, 300.0, 3.0, 50.0, 10.0);
  p.cubic = family(180.0, 120.0, 3.0, 1e-4, 1e4, 80.0, 300.0, 3.0, 30.0, 5.0);
  return p;
}

// Independent cubic Hooke law on tensor components.
Vec6 hooke(const Vec6& e, double c11, double c12, double c44) {
  Vec6 s;
  const double tr = e[0] + e[1] + e[2];
  for (int i = 0; i < 3; ++i) s[i] = c12 * tr + (c11 - c12) * e[i];
  for (int i = 3; i < 6; ++i) s[i] = 2.0 * c44 * e[i];
  return s;
}

Vec6 inverse_hooke(const Vec6& s, double c11, double c12, double c44) {
  Eigen::Matrix3d c = Eigen::Matrix3d::Constant(c12);
  c.diagonal().setConstant(c11);
  const Eigen::Vector3d normal = c.inverse() * s.head<3>();
  Vec6 e;
  e.head<3>() = normal;
  for (int i = 3; i < 6; ++i) e[i] = s[i] / (2.0 * c44);
  return e;
}

double contract(const Vec6& a, const Vec6& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + 2.0 * (a[3] * b[3] + a[4] * b[4] + a[5] * b[5]);
}

// Explicit RK4 integration of the slip-rate ODEs along a linear strain ramp.
struct OdeState {
  Vec6 ep = Vec6::Zero();
  std::array<double, kNumSlip> x{}, nu{};
};

struct OdeRates {
  Vec6 ep;
  std::array<double, kNumSlip> x, nu;
};

struct Coeffs {
  double r0, k, n, eps_h, c, d, big_m, m, q, b;
};

Coeffs coeffs(const FamilyParams& f) {
  return {f.r0.at(293), f.k_h.at(293), f.n_h.at(293), f.eps_h.at(293), f.c.at(293),
          f.d.at(293),  f.big_m.at(293), f.m.at(293), f.q.at(293),     f.b.at(293)};
}

OdeRates rates(const OdeState& s, const Vec6& strain, const MaterialParams& p) {
  const auto& sys = slip_systems();
  const Vec6 sigma = hooke(strain - s.ep, 250e3, 160e3, 130e3);
  OdeRates r;
  r.ep.setZero();
  for (int i = 0; i < kNumSlip; ++i) {
    const Coeffs f = coeffs(i < kNumOctahedral ? p.octahedral : p.cubic);
    const double tau = contract(sigma, sys[static_cast<std::size_t>(i)].orientation);
    const double v = tau - s.x[i];
    const double radius = f.r0 + f.q * (1.0 - std::exp(-f.b * s.nu[i]));
    const double over = std::abs(v) - radius;
    const double g = over > 0.0 ? f.eps_h * std::sinh(std::pow(over / f.k, f.n)) * (v > 0 ? 1.0 : -1.0) : 0.0;
    const double sx = s.x[i] > 0 ? 1.0 : (s.x[i] < 0 ? -1.0 : 0.0);
    r.x[i] = f.c * g - f.d * s.x[i] * std::abs(g) - f.c * std::pow(std::abs(s.x[i]) / f.big_m, f.m) * sx;
    r.nu[i] = std::abs(g);
    r.ep += g * sys[static_cast<std::size_t>(i)].orientation;
  }
  return r;
}

OdeState axpy(const OdeState& s, double h, const OdeRates& r) {
  OdeState o = s;
  o.ep += h * r.ep;
  for (int i = 0; i < kNumSlip; ++i) {
    o.x[i] += h * r.x[i];
    o.nu[i] += h * r.nu[i];
  }
  return o;
}

Vec6 ramp_target() {
  Vec6 e;
  e << 0.006, -0.002, -0.0015, 0.0008, -0.0004, 0.001;
  return e;
}

Vec6 oracle_stress(const MaterialParams& p, double total_time, int steps) {
  const Vec6 target = ramp_target();
  OdeState s;
  const double h = total_time / steps;
  for (int k = 0; k < steps; ++k) {
    const double t = k * h;
    auto eps = [&](double tt) -> Vec6 { return target * (tt / total_time); };
    const OdeRates k1 = rates(s, eps(t), p);
    const OdeRates k2 = rates(axpy(s, h / 2, k1), eps(t + h / 2), p);
    const OdeRates k3 = rates(axpy(s, h / 2, k2), eps(t + h / 2), p);
    const OdeRates k4 = rates(axpy(s, h, k3), eps(t + h), p);
    s.ep += h / 6 * (k1.ep + 2 * k2.ep + 2 * k3.ep + k4.ep);
    for (int i = 0; i < kNumSlip; ++i) {
      s.x[i] += h / 6 * (k1.x[i] + 2 * k2.x[i] + 2 * k3.x[i] + k4.x[i]);
      s.nu[i] += h / 6 * (k1.nu[i] + 2 * k2.nu[i] + 2 * k3.nu[i] + k4.nu[i]);
    }
  }
  return hooke(target - s.ep, 250e3, 160e3, 130e3);
}

Vec6 implicit_stress(const MaterialParams& p, double total_time, int steps) {
  const Vec6 target = ramp_target();
  MaterialState s;
  PointResult r;
  for (int k = 1; k <= steps; ++k) {
    r = integrate_point(s, target * (static_cast<double>(k) / steps), 293.0, total_time / steps, p);
    s = r.state;
  }
  return r.stress;
}

}  // namespace

TEST(SlipSystems, CountsAndOrthogonality) {
  const SlipSystemSet& sys = build_slip_systems();
  int oct = 0, cub = 0;
  for (const auto& s : sys) {
    (s.family == SlipFamily::Octahedral ? oct : cub)++;
    EXPECT_NEAR(s.normal.norm(), 1.0, 1e-15);
    EXPECT_NEAR(s.direction.norm(), 1.0, 1e-15);
    EXPECT_EQ(s.normal.dot(s.direction), 0.0);
    EXPECT_NEAR(contract(s.orientation, s.orientation), 0.5, 1e-15);
    EXPECT_NEAR(s.orientation[0] + s.orientation[1] + s.orientation[2], 0.0, 1e-15);
  }
  EXPECT_EQ(oct, 12);
  EXPECT_EQ(cub, 6);
  for (int i = 0; i < kNumOctahedral; ++i) {
    const Vec3 n = sys[static_cast<std::size_t>(i)].normal.cwiseAbs() * std::sqrt(3.0);
    EXPECT_NEAR((n - Vec3::Ones()).norm(), 0.0, 1e-14);
  }
  for (int i = kNumOctahedral; i < kNumSlip; ++i) {
    const Vec3 n = sys[static_cast<std::size_t>(i)].normal.cwiseAbs();
    EXPECT_NEAR(n.maxCoeff(), 1.0, 1e-15);
    EXPECT_NEAR(n.sum(), 1.0, 1e-15);
  }
  // No duplicated systems.
  for (int i = 0; i < kNumSlip; ++i)
    for (int j = i + 1; j < kNumSlip; ++j)
      EXPECT_GT((sys[static_cast<std::size_t>(i)].orientation - sys[static_cast<std::size_t>(j)].orientation).norm(), 1e-6);
}

TEST(SchmidLaw, Examples) {
  const auto& sys = slip_systems();
  const Vec6 hydro = 123.0 * identity6();
  for (const auto& s : sys) EXPECT_NEAR(resolved_shear_stress(hydro, s), 0.0, 1e-12);
  for (const auto& s : sys) EXPECT_NEAR(resolved_shear_stress(80.0 * s.orientation, s), 40.0, 1e-12);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Vec6 a, b;
  for (int i = 0; i < 6; ++i) {
    a[i] = g(rng);
    b[i] = g(rng);
  }
  for (const auto& s : sys)
    EXPECT_NEAR(resolved_shear_stress(2.0 * a - 3.0 * b, s),
                2.0 * resolved_shear_stress(a, s) - 3.0 * resolved_shear_stress(b, s), 1e-12);
}

TEST(VonMises, Examples) {
  EXPECT_NEAR(von_mises(7.0 * identity6()), 0.0, 1e-12);
  Vec6 s = Vec6::Zero();
  s[0] = 250.0;
  EXPECT_NEAR(von_mises(s), 250.0, 1e-12);
  s.setZero();
  s[5] = 10.0;
  EXPECT_NEAR(von_mises(s), std::sqrt(3.0) * 10.0, 1e-12);
}

TEST(TemperatureTable, InterpolatesAndRejectsOutOfRange) {
  const TemperatureTable t({300.0, 500.0, 900.0}, {10.0, 20.0, 0.0});
  EXPECT_DOUBLE_EQ(t.at(300.0), 10.0);
  EXPECT_DOUBLE_EQ(t.at(400.0), 15.0);
  EXPECT_DOUBLE_EQ(t.at(700.0), 10.0);
  EXPECT_DOUBLE_EQ(t.at(900.0), 0.0);
  EXPECT_THROW(t.at(200.0), Error);
  EXPECT_THROW(t.at(1000.0), Error);
  EXPECT_THROW(TemperatureTable({1.0, 0.5}, {1.0, 2.0}), Error);
}

TEST(IntegratePoint, ElasticDomainIsExactHooke) {
  const MaterialParams p = hardening_material();
  MaterialState s;
  Vec6 e;
  e << 2e-4, -1e-4, 5e-5, 3e-5, 0.0, -4e-5;
  const double t = 700.0;
  const PointResult r = integrate_point(s, e, t, 10.0, p);
  EXPECT_FALSE(r.plastic);
  for (double dg : r.slip_increment) EXPECT_EQ(dg, 0.0);
  EXPECT_EQ(r.state.plastic_strain, s.plastic_strain);
  EXPECT_EQ(r.state.p_cum_oct, 0.0);
  const Vec6 expected = hooke(e - p.alpha.at(t) * (t - 293.0) * identity6(), 250e3, 160e3, 130e3);
  EXPECT_LE((r.stress - expected).norm(), 1e-10 * expected.norm());
}

TEST(IntegratePoint, SingleSystemFlowRule) {
  // Static x and r: no kinematic or isotropic hardening.
  MaterialParams p;
  p.octahedral = family(100.0, 50.0, 2.0, 1e-3, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0);
  p.cubic = family(1e6, 50.0, 2.0, 1e-3, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0);
  const auto& sys = slip_systems();
  // Stress aligned with system 0 puts only that system past its threshold.
  const Vec6 sigma = 2.0 * 130.0 * sys[0].orientation;
  double others = 0.0;
  for (int j = 1; j < kNumOctahedral; ++j) others = std::max(others, std::abs(resolved_shear_stress(sigma, sys[static_cast<std::size_t>(j)])));
  ASSERT_LT(others, 100.0);
  const Vec6 strain = inverse_hooke(sigma, 250e3, 160e3, 130e3);
  const double dt = 1e-4;
  const PointResult r = integrate_point(MaterialState{}, strain, 293.0, dt, p);
  ASSERT_TRUE(r.plastic);
  for (int j = 1; j < kNumSlip; ++j) EXPECT_EQ(r.slip_increment[static_cast<std::size_t>(j)], 0.0);
  const double dg = r.slip_increment[0];
  EXPECT_GT(dg, 0.0);
  // Backward Euler: the increment is the rate at the updated stress.
  const double tau = resolved_shear_stress(r.stress, sys[0]);
  const double rate = 1e-3 * std::sinh(std::pow((tau - 100.0) / 50.0, 2.0));
  EXPECT_NEAR(dg, dt * rate, 1e-10 * dg);
  // Held stress over a short interval: the rate at the initial stress.
  const double rate0 = 1e-3 * std::sinh(std::pow((130.0 - 100.0) / 50.0, 2.0));
  EXPECT_NEAR(dg / dt, rate0, 1e-3 * rate0);
  // Octahedral equivalent plastic strain of a single slip.
  EXPECT_NEAR(r.state.p_cum_oct, dg / std::sqrt(3.0), 1e-15);
}

TEST(IntegratePoint, ConvergesFirstOrderToOdeOracle) {
  const MaterialParams p = hardening_material();
  const double total = 10.0;
  const Vec6 reference = oracle_stress(p, total, 100000);
  std::vector<double> err;
  for (int n : {20, 40, 80, 160}) err.push_back((implicit_stress(p, total, n) - reference).norm());
  for (std::size_t i = 0; i + 1 < err.size(); ++i) {
    const double ratio = err[i] / err[i + 1];
    EXPECT_GE(ratio, 1.7) << "halving " << i;
    EXPECT_LE(ratio, 2.3) << "halving " << i;
  }
}

TEST(IntegratePoint, StateInvariantsAlongRandomPath) {
  const MaterialParams p = hardening_material();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MaterialState s;
  Vec6 e = Vec6::Zero();
  double flowed = 0.0;
  for (int k = 0; k < 200; ++k) {
    for (int i = 0; i < 6; ++i) e[i] += 6e-4 * u(rng);
    const double temp = 293.0 + 400.0 * (0.5 + 0.5 * u(rng));
    const PointResult r = integrate_point(s, e, temp, 2.0, p);
    EXPECT_GE(r.dissipation, -1e-12 * (1.0 + std::abs(r.dissipation)));
    EXPECT_GE(r.state.p_cum_oct, s.p_cum_oct);
    for (int i = 0; i < kNumSlip; ++i) EXPECT_GE(r.state.cumulated_slip[static_cast<std::size_t>(i)], s.cumulated_slip[static_cast<std::size_t>(i)]);
    EXPECT_NEAR(r.state.plastic_strain[0] + r.state.plastic_strain[1] + r.state.plastic_strain[2], 0.0, 1e-12);
    // p_cum of a step is the rectangle rule of the octahedral slip rate.
    Vec6 dep = Vec6::Zero();
    for (int i = 0; i < kNumOctahedral; ++i) dep += r.slip_increment[static_cast<std::size_t>(i)] * slip_systems()[static_cast<std::size_t>(i)].orientation;
    EXPECT_NEAR(r.state.p_cum_oct - s.p_cum_oct, std::sqrt(2.0 / 3.0 * contract(dep, dep)), 1e-14);
    flowed += r.plastic;
    s = r.state;
  }
  EXPECT_GT(flowed, 10);
}

TEST(IntegratePoint, ElasticRoundTrip) {
  const MaterialParams p = hardening_material();
  MaterialState s;
  Vec6 e;
  e << 3e-4, -1e-4, -1e-4, 5e-5, 0.0, 0.0;
  const PointResult loaded = integrate_point(s, e, 293.0, 1.0, p);
  ASSERT_FALSE(loaded.plastic);
  const PointResult unloaded = integrate_point(loaded.state, Vec6::Zero(), 293.0, 1.0, p);
  EXPECT_EQ(unloaded.stress.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(unloaded.state.p_cum_oct, 0.0);
}

TEST(IntegratePoint, NumericalTangentMatchesElasticStiffness) {
  const MaterialParams p = hardening_material();
  MaterialState s;
  const Vec6 e = Vec6::Constant(1e-5);
  IntegrationOptions opt;
  const PointResult base = integrate_point(s, e, 293.0, 1.0, p, opt);
  const Mat6 t = numerical_tangent(s, e, 293.0, 1.0, p, opt, base);
  // Engineering shear columns: d sigma_23 / d gamma_23 = C44.
  EXPECT_NEAR(t(0, 0), 250e3, 1e-3 * 250e3);
  EXPECT_NEAR(t(0, 1), 160e3, 1e-3 * 160e3);
  EXPECT_NEAR(t(3, 3), 130e3, 1e-3 * 130e3);
}
