#include "romnet/hfm.hpp"

#include <Eigen/SparseLU>

#include <chrono>
#include <memory>
#include <sstream>

namespace romnet {

Vec Trajectory::von_mises_field(int step) const {
  const Eigen::Index n = p_cum.rows();
  Vec out(n);
  for (Eigen::Index i = 0; i < n; ++i)
    out[i] = von_mises(stress_at(step, static_cast<std::size_t>(i)));
  return out;
}

Vec Trajectory::stress_component(int step, int component) const {
  const Eigen::Index n = p_cum.rows();
  Vec out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = stress(6 * i + component, step);
  return out;
}

Vec temperature_at(const Vec& t_max, double omega, double reference_temperature) {
  return (1.0 - omega) * Vec::Constant(t_max.size(), reference_temperature) + omega * t_max;
}

namespace {

struct Increment {
  Vec u;
  std::vector<MaterialState> states;
  std::vector<Vec6> stress;
};

class CycleSolver {
 public:
  CycleSolver(const FemModel& model, const Vec& t_max, const SolverOptions& opt)
      : model_(model), t_max_(t_max), opt_(opt) {}

  // Advances from (u, states) at t_old to t_new; bisects on failure.
  bool advance(const Increment& start, double t_old, double t_new, int level, Increment& out) {
    if (try_newton(start, t_old, t_new, out)) return true;
    if (level >= opt_.max_bisections) return false;
    ++bisections;
    const double t_mid = 0.5 * (t_old + t_new);
    Increment mid;
    if (!advance(start, t_old, t_mid, level + 1, mid)) return false;
    return advance(mid, t_mid, t_new, level + 1, out);
  }

  int iterations = 0;
  int bisections = 0;
  int caps = 0;

 private:
  bool try_newton(const Increment& start, double t_old, double t_new, Increment& out) {
    const auto& sched = model_.schedule();
    const Vec temp = temperature_at(t_max_, sched.omega_at(t_new), sched.reference_temperature);
    const double dt = t_new - t_old;
    Vec u = start.u;
    for (const auto& d : model_.mesh().dirichlet) u.segment<3>(3 * d.node) = d.value;
    const double f_ext = model_.external_force(t_new).norm();
    try {
      for (int it = 0; it <= opt_.max_iterations; ++it) {
        AssemblyResult a = model_.assemble_residual(u, start.states, temp, t_new, dt,
                                                    /*with_tangent=*/true, opt_.workers);
        const double ref = std::max(f_ext, a.internal_force.norm());
        const double rnorm = a.residual.norm();
        if (!std::isfinite(rnorm)) return false;
        if (rnorm <= opt_.relative_tolerance * ref || rnorm <= opt_.absolute_tolerance) {
          caps += a.sinh_caps;
          out.u = std::move(u);
          out.states = std::move(a.states);
          out.stress = std::move(a.stress);
          return true;
        }
        if (it == opt_.max_iterations) break;
        ++iterations;
        if (!lu_) {
          lu_ = std::make_unique<Eigen::SparseLU<SparseMat>>();
          lu_->analyzePattern(a.tangent);
        }
        lu_->factorize(a.tangent);
        if (lu_->info() != Eigen::Success) return false;
        Vec du = lu_->solve(-a.residual);
        if (!du.allFinite()) return false;
        u += du;
      }
    } catch (const ConvergenceError&) {
      return false;
    }
    return false;
  }

  const FemModel& model_;
  const Vec& t_max_;
  SolverOptions opt_;
  std::unique_ptr<Eigen::SparseLU<SparseMat>> lu_;
};

}  // namespace

Trajectory solve_cycle(const FemModel& model, const Vec& t_max, const SolverOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& mesh = model.mesh();
  const auto& sched = model.schedule();
  if (static_cast<std::size_t>(t_max.size()) != mesh.num_nodes())
    throw Error("temperature field size does not match the mesh");
  const int steps = sched.num_steps;
  const auto nip = static_cast<Eigen::Index>(mesh.num_tets());

  Trajectory traj;
  traj.displacement = Mat::Zero(static_cast<Eigen::Index>(mesh.num_dofs()), steps + 1);
  traj.stress = Mat::Zero(6 * nip, steps + 1);
  traj.p_cum = Mat::Zero(nip, steps + 1);
  for (int k = 0; k <= steps; ++k) traj.times.push_back(sched.time(k));

  CycleSolver solver(model, t_max, options);
  Increment current;
  current.u = Vec::Zero(static_cast<Eigen::Index>(mesh.num_dofs()));
  current.states = model.initial_states();
  for (int k = 1; k <= steps; ++k) {
    Increment next;
    if (!solver.advance(current, sched.time(k - 1), sched.time(k), 0, next)) {
      std::ostringstream os;
      os << "Newton solve failed at step " << k << " after " << options.max_bisections
         << " bisection levels";
      throw ConvergenceError(os.str(), k);
    }
    current = std::move(next);
    traj.displacement.col(k) = current.u;
    for (Eigen::Index i = 0; i < nip; ++i) {
      traj.stress.col(k).segment<6>(6 * i) = current.stress[static_cast<std::size_t>(i)];
      traj.p_cum(i, k) = current.states[static_cast<std::size_t>(i)].p_cum_oct;
    }
  }
  traj.final_states = std::move(current.states);
  traj.newton_iterations = solver.iterations;
  traj.bisections = solver.bisections;
  traj.sinh_caps = solver.caps;
  traj.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return traj;
}

}  // namespace romnet
