#include "romnet/crystal.hpp"

#include <Eigen/LU>

#include <cmath>
#include <sstream>

namespace romnet {

namespace {

Vec6 sym_dyad(const Vec3& l, const Vec3& n) {
  Vec6 m;
  m << l[0] * n[0], l[1] * n[1], l[2] * n[2],
      0.5 * (l[1] * n[2] + l[2] * n[1]),
      0.5 * (l[0] * n[2] + l[2] * n[0]),
      0.5 * (l[0] * n[1] + l[1] * n[0]);
  return m;
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Cap on the argument of sinh in the flow rule.
constexpr double kSinhCap = 50.0;

}  // namespace

SlipSystemSet build_slip_systems() {
  SlipSystemSet set{};
  // {111} planes with three <110> directions lying in each.
  const std::array<Vec3, 4> planes = {Vec3(1, 1, 1), Vec3(-1, 1, 1), Vec3(1, -1, 1),
                                      Vec3(1, 1, -1)};
  const std::array<Vec3, 6> dirs110 = {Vec3(0, 1, -1), Vec3(1, 0, -1), Vec3(1, -1, 0),
                                       Vec3(0, 1, 1),  Vec3(1, 0, 1),  Vec3(1, 1, 0)};
  int k = 0;
  for (const auto& p : planes) {
    for (const auto& d : dirs110) {
      if (p.dot(d) != 0.0) continue;
      Vec3 n = p.normalized();
      Vec3 l = d.normalized();
      set[k++] = {n, l, sym_dyad(l, n), SlipFamily::Octahedral};
    }
  }
  // {100} planes with the two <110> directions lying in each.
  const std::array<Vec3, 3> cube = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  for (const auto& p : cube) {
    for (const auto& d : dirs110) {
      if (p.dot(d) != 0.0) continue;
      Vec3 n = p;
      Vec3 l = d.normalized();
      set[k++] = {n, l, sym_dyad(l, n), SlipFamily::Cubic};
    }
  }
  if (k != kNumSlip) throw Error("slip system construction produced a wrong count");
  return set;
}

const SlipSystemSet& slip_systems() {
  static const SlipSystemSet set = build_slip_systems();
  return set;
}

TemperatureTable::TemperatureTable(std::vector<double> keys, std::vector<double> values)
    : keys_(std::move(keys)), values_(std::move(values)) {
  if (keys_.empty() || keys_.size() != values_.size())
    throw Error("temperature table needs matching, non-empty key/value lists");
  for (std::size_t i = 1; i < keys_.size(); ++i)
    if (!(keys_[i] > keys_[i - 1])) throw Error("temperature table keys must increase");
}

double TemperatureTable::at(double t) const {
  if (keys_.size() == 1) return values_[0];
  if (t < keys_.front() - 1e-9 || t > keys_.back() + 1e-9) {
    std::ostringstream os;
    os << "temperature " << t << " K outside table range [" << keys_.front() << ", "
       << keys_.back() << "]";
    throw Error(os.str());
  }
  auto it = std::upper_bound(keys_.begin(), keys_.end(), t);
  std::size_t i = static_cast<std::size_t>(it - keys_.begin());
  if (i == 0) return values_.front();
  if (i >= keys_.size()) return values_.back();
  const double w = (t - keys_[i - 1]) / (keys_[i] - keys_[i - 1]);
  return (1.0 - w) * values_[i - 1] + w * values_[i];
}

FamilyCoefficients evaluate(const FamilyParams& p, double t) {
  return {p.eps_h.at(t), p.k_h.at(t), p.n_h.at(t), p.c.at(t), p.d.at(t),
          p.big_m.at(t), p.m.at(t),   p.r0.at(t),  p.q.at(t), p.b.at(t)};
}

Mat6 cubic_stiffness(double c11, double c12, double c44) {
  Mat6 c = Mat6::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c(i, j) = (i == j) ? c11 : c12;
  // Tensor shear components: sigma_23 = 2 C44 eps_23.
  for (int i = 3; i < 6; ++i) c(i, i) = 2.0 * c44;
  return c;
}

Vec6 thermal_strain(const MaterialParams& params, double temperature) {
  return params.alpha.at(temperature) * (temperature - params.reference_temperature) *
         identity6();
}

namespace {

struct LocalContext {
  Mat6 stiffness;
  Vec6 elastic_predictor;  // C : (eps_new - eps_p_old - eps_th)
  std::array<FamilyCoefficients, 2> fam;
  Eigen::Matrix<double, kNumSlip, kNumSlip> h;  // m_s : C : m_j
  double dt;
};

const FamilyCoefficients& coeffs_for(const LocalContext& ctx, int s) {
  return ctx.fam[s < kNumOctahedral ? 0 : 1];
}

// Implicit kinematic update x = x_old + c dg - d x |dg| - c dt (|x|/M)^m sign(x).
// Returns x and dx/d(dg).
std::pair<double, double> update_back_stress(double x_old, double dg, double flow_sign,
                                             const FamilyCoefficients& f, double dt) {
  const double rhs = x_old + f.c * dg;
  const double k1 = 1.0 + f.d * std::abs(dg);
  const double k2 = f.c * dt / std::pow(f.big_m, f.m);
  const double target = std::abs(rhs);
  double y = target / k1;
  if (k2 > 0.0 && y > 0.0) {
    for (int it = 0; it < 200; ++it) {
      const double phi = k1 * y + k2 * std::pow(y, f.m) - target;
      const double dphi = k1 + k2 * f.m * std::pow(y, f.m - 1.0);
      const double step = phi / dphi;
      y -= step;
      if (y < 0.0) y = 0.0;
      if (std::abs(step) <= 1e-16 * (target + 1.0)) break;
    }
  }
  const double x = sign_of(rhs) * y;
  const double sdg = dg != 0.0 ? sign_of(dg) : flow_sign;
  const double denom = k1 + (k2 > 0.0 && y > 0.0 ? k2 * f.m * std::pow(y, f.m - 1.0) : 0.0);
  const double dxd = (f.c - f.d * x * sdg) / denom;
  return {x, dxd};
}

struct Evaluation {
  Eigen::Matrix<double, kNumSlip, 1> residual;
  Eigen::Matrix<double, kNumSlip, kNumSlip> jacobian;
  std::array<double, kNumSlip> x{};
  std::array<double, kNumSlip> tau{};
  int caps = 0;
};

Evaluation evaluate_residual(const LocalContext& ctx, const MaterialState& old,
                             const Eigen::Matrix<double, kNumSlip, 1>& dgamma) {
  const auto& sys = slip_systems();
  Evaluation ev;
  Vec6 sigma = ctx.elastic_predictor;
  for (int j = 0; j < kNumSlip; ++j)
    if (dgamma[j] != 0.0) sigma -= dgamma[j] * (ctx.stiffness * sys[j].orientation);
  ev.jacobian.setIdentity();
  for (int s = 0; s < kNumSlip; ++s) {
    const auto& f = coeffs_for(ctx, s);
    const double tau = ddot(sigma, sys[s].orientation);
    ev.tau[s] = tau;
    // Provisional flow direction for derivative choices at dgamma = 0.
    const double provisional = sign_of(tau - old.back_stress[s]);
    auto [x, dxd] = update_back_stress(old.back_stress[s], dgamma[s], provisional, f, ctx.dt);
    ev.x[s] = x;
    const double v = tau - x;
    const double sv = sign_of(v);
    const double nu = old.cumulated_slip[s] + std::abs(dgamma[s]);
    const double r = f.r0 + f.q * (1.0 - std::exp(-f.b * nu));
    const double sdg = dgamma[s] != 0.0 ? sign_of(dgamma[s]) : sv;
    const double drd = f.q * f.b * std::exp(-f.b * nu) * sdg;
    const double over = std::abs(v) - r;
    double g = 0.0, dg_df = 0.0;
    if (over > 0.0) {
      const double z = over / f.k_h;
      double zn = std::pow(z, f.n_h);
      bool capped = false;
      if (zn > kSinhCap) {
        zn = kSinhCap;
        capped = true;
        ++ev.caps;
      }
      g = f.eps_h * std::sinh(zn) * sv;
      if (!capped) dg_df = f.eps_h * std::cosh(zn) * f.n_h * std::pow(z, f.n_h - 1.0) / f.k_h * sv;
    }
    ev.residual[s] = dgamma[s] - ctx.dt * g;
    if (dg_df != 0.0) {
      for (int j = 0; j < kNumSlip; ++j) {
        double df = -sv * ctx.h(s, j);
        if (j == s) df += -sv * dxd - drd;
        ev.jacobian(s, j) -= ctx.dt * dg_df * df;
      }
    }
  }
  return ev;
}

struct StepOutcome {
  bool ok = false;
  PointResult result;
};

StepOutcome single_step(const MaterialState& old, const Vec6& strain_new, double temp_new,
                        double dt, const MaterialParams& params,
                        const IntegrationOptions& opt) {
  const auto& sys = slip_systems();
  LocalContext ctx;
  ctx.stiffness = cubic_stiffness(params.c11.at(temp_new), params.c12.at(temp_new),
                                  params.c44.at(temp_new));
  const Vec6 eps_th = thermal_strain(params, temp_new);
  ctx.elastic_predictor = ctx.stiffness * (strain_new - old.plastic_strain - eps_th);
  ctx.fam = {evaluate(params.octahedral, temp_new), evaluate(params.cubic, temp_new)};
  ctx.dt = dt;

  StepOutcome out;
  PointResult& res = out.result;
  res.state = old;
  res.state.total_strain = strain_new;
  res.state.temperature = temp_new;

  if (opt.elastic_only) {
    res.stress = ctx.elastic_predictor;
    out.ok = true;
    return out;
  }

  for (int s = 0; s < kNumSlip; ++s) {
    const Vec6 cm = ctx.stiffness * sys[s].orientation;
    for (int j = 0; j < kNumSlip; ++j) ctx.h(j, s) = ddot(sys[j].orientation, cm);
  }

  Eigen::Matrix<double, kNumSlip, 1> dgamma = Eigen::Matrix<double, kNumSlip, 1>::Zero();
  Evaluation ev = evaluate_residual(ctx, old, dgamma);
  auto converged = [&](const Evaluation& e, const Eigen::Matrix<double, kNumSlip, 1>& dg) {
    const double scale = std::max(dg.cwiseAbs().maxCoeff(), 1e-8);
    return e.residual.cwiseAbs().maxCoeff() <= opt.tolerance * scale;
  };

  bool ok = converged(ev, dgamma);
  for (int it = 0; it < opt.max_iterations && !ok; ++it) {
    Eigen::Matrix<double, kNumSlip, 1> step = -ev.jacobian.partialPivLu().solve(ev.residual);
    if (!step.allFinite()) return out;
    const double merit = ev.residual.squaredNorm();
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      Eigen::Matrix<double, kNumSlip, 1> trial = dgamma + alpha * step;
      Evaluation ev_trial = evaluate_residual(ctx, old, trial);
      if (ev_trial.residual.allFinite() &&
          ev_trial.residual.squaredNorm() < (1.0 - 1e-4 * alpha) * merit) {
        dgamma = trial;
        ev = std::move(ev_trial);
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // Stalled at round-off level: accept if already very close.
      ok = ev.residual.cwiseAbs().maxCoeff() <=
           1e3 * opt.tolerance * std::max(dgamma.cwiseAbs().maxCoeff(), 1e-8);
      break;
    }
    ok = converged(ev, dgamma);
  }
  if (!ok) return out;

  Vec6 dep = Vec6::Zero();
  Vec6 dep_oct = Vec6::Zero();
  double dissipation = 0.0;
  for (int s = 0; s < kNumSlip; ++s) {
    const double dg = dgamma[s];
    res.slip_increment[s] = dg;
    res.state.back_stress[s] = ev.x[s];
    res.state.cumulated_slip[s] = old.cumulated_slip[s] + std::abs(dg);
    if (dg != 0.0) {
      dep += dg * sys[s].orientation;
      if (s < kNumOctahedral) dep_oct += dg * sys[s].orientation;
      dissipation += (ev.tau[s] - ev.x[s]) * dg;
      res.plastic = true;
    }
  }
  res.state.plastic_strain = old.plastic_strain + dep;
  res.state.p_cum_oct = old.p_cum_oct + std::sqrt(2.0 / 3.0 * ddot(dep_oct, dep_oct));
  res.stress = ctx.stiffness * (strain_new - res.state.plastic_strain - eps_th);
  res.dissipation = dissipation;
  res.sinh_caps = ev.caps;
  out.ok = true;
  return out;
}

}  // namespace

PointResult integrate_point(const MaterialState& state, const Vec6& strain_new,
                            double temperature_new, double dt,
                            const MaterialParams& params, const IntegrationOptions& options) {
  if (!(dt > 0.0)) throw Error("integrate_point requires dt > 0");
  for (int halvings = 0; halvings <= options.max_halvings; ++halvings) {
    const int nsub = 1 << halvings;
    MaterialState current = state;
    PointResult accumulated;
    accumulated.slip_increment.fill(0.0);
    bool ok = true;
    for (int k = 1; k <= nsub; ++k) {
      const double w = static_cast<double>(k) / nsub;
      const Vec6 eps = state.total_strain + w * (strain_new - state.total_strain);
      const double temp = state.temperature + w * (temperature_new - state.temperature);
      StepOutcome step = single_step(current, eps, temp, dt / nsub, params, options);
      if (!step.ok) {
        ok = false;
        break;
      }
      current = step.result.state;
      accumulated.stress = step.result.stress;
      accumulated.plastic = accumulated.plastic || step.result.plastic;
      accumulated.sinh_caps += step.result.sinh_caps;
      accumulated.dissipation += step.result.dissipation;
      for (int s = 0; s < kNumSlip; ++s)
        accumulated.slip_increment[s] += step.result.slip_increment[s];
    }
    if (ok) {
      accumulated.state = current;
      accumulated.substeps = nsub;
      return accumulated;
    }
  }
  std::ostringstream os;
  os << "local constitutive Newton failed after " << options.max_halvings
     << " halvings (T = " << temperature_new << " K, |eps| = " << strain_new.norm()
     << ", p_cum = " << state.p_cum_oct << ")";
  throw ConvergenceError(os.str(), -1);
}

Mat6 numerical_tangent(const MaterialState& state, const Vec6& strain_new,
                       double temperature_new, double dt, const MaterialParams& params,
                       const IntegrationOptions& options, const PointResult& base) {
  Mat6 tangent;
  if (options.elastic_only || !base.plastic) {
    tangent = cubic_stiffness(params.c11.at(temperature_new), params.c12.at(temperature_new),
                              params.c44.at(temperature_new));
    for (int j = 3; j < 6; ++j) tangent.col(j) *= 0.5;
    return tangent;
  }
  const double scale = std::max(strain_new.cwiseAbs().maxCoeff(), 1e-3);
  const double h = 1e-7 * scale;
  for (int j = 0; j < 6; ++j) {
    Vec6 eps = strain_new;
    // Engineering shear perturbation h corresponds to tensor component h/2.
    eps[j] += (j < 3) ? h : 0.5 * h;
    PointResult pert = integrate_point(state, eps, temperature_new, dt, params, options);
    tangent.col(j) = (pert.stress - base.stress) / h;
  }
  return tangent;
}

}  // namespace romnet
