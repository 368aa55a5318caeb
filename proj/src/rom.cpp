#include "romnet/rom.hpp"

#include <Eigen/LU>
#include <Eigen/QR>

#include <chrono>
#include <sstream>

namespace romnet {

const char* dual_name(int d) {
  static const char* names[kNumDual] = {"p_cum", "sigma_11", "sigma_22", "sigma_33",
                                        "sigma_23", "sigma_13", "sigma_12"};
  return names[d];
}

std::vector<int> LocalROM::rid_points() const {
  std::vector<int> out = quadrature.points;
  out.insert(out.end(), dual_sampling.begin(), dual_sampling.end());
  return out;
}

Mat LocalROM::dual_rows(int d) const {
  const Mat& m = dual[static_cast<std::size_t>(d)].modes;
  const std::vector<int> rid = rid_points();
  Mat out(static_cast<Eigen::Index>(rid.size()), m.cols());
  for (std::size_t i = 0; i < rid.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rid[i]);
  return out;
}

std::vector<int> dual_sampling_points(const std::array<ReducedBasis, kNumDual>& dual, const std::vector<int>& rid) {
  std::vector<int> extra;
  std::vector<char> taken;
  for (const auto& b : dual) {
    if (b.size() == 0) continue;
    if (taken.empty()) {
      taken.assign(static_cast<std::size_t>(b.modes.rows()), 0);
      for (int p : rid) taken[static_cast<std::size_t>(p)] = 1;
    }
    const Eigen::ColPivHouseholderQR<Mat> qr(b.modes.transpose());
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = 0; i < qr.rank(); ++i) {
      const int p = perm[i];
      if (taken[static_cast<std::size_t>(p)]) continue;
      taken[static_cast<std::size_t>(p)] = 1;
      extra.push_back(p);
    }
  }
  return extra;
}

Vec ReducedTrajectory::rid_dual(int d, int step) const {
  if (d == 0) return rid_p_cum.col(step);
  const Eigen::Index n = rid_p_cum.rows();
  Vec out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = rid_stress(6 * i + d - 1, step);
  return out;
}

SnapshotSet gather_snapshots(const std::vector<const Trajectory*>& trajectories) {
  if (trajectories.empty()) throw Error("no trajectories to gather snapshots from");
  const Eigen::Index ndof = trajectories[0]->displacement.rows();
  const Eigen::Index nip = trajectories[0]->p_cum.rows();
  const int steps = trajectories[0]->num_steps();
  const Eigen::Index cols = static_cast<Eigen::Index>(trajectories.size()) * steps;
  SnapshotSet s;
  s.displacement.resize(ndof, cols);
  for (auto& m : s.dual) m.resize(nip, cols);
  Eigen::Index c = 0;
  for (const Trajectory* t : trajectories) {
    for (int k = 1; k <= steps; ++k, ++c) {
      s.displacement.col(c) = t->displacement.col(k);
      s.dual[0].col(c) = t->p_cum.col(k);
      for (int comp = 0; comp < 6; ++comp) s.dual[static_cast<std::size_t>(comp + 1)].col(c) = t->stress_component(k, comp);
      s.stress.push_back(Eigen::Map<const Mat>(t->stress.col(k).data(), 6, nip));
    }
  }
  return s;
}

namespace {

Vec dof_weights(const Mesh& mesh) {
  const Vec nodal = mesh.lumped_node_weights();
  Vec w(3 * nodal.size());
  for (Eigen::Index i = 0; i < nodal.size(); ++i) w.segment<3>(3 * i).setConstant(nodal[i]);
  return w;
}

Eigen::Matrix<double, 6, Eigen::Dynamic> reduced_strain_operator(const FemModel& model,
                                                                 const Mat& modes, std::size_t tet) {
  const auto dofs = model.element_dofs(tet);
  Eigen::Matrix<double, 12, Eigen::Dynamic> local(12, modes.cols());
  for (int i = 0; i < 12; ++i) local.row(i) = modes.row(dofs[static_cast<std::size_t>(i)]);
  return model.strain_operator(tet) * local;
}

}  // namespace

Mat ecm_integrands(const FemModel& model, const Mat& primal_modes, const std::vector<Mat>& stresses) {
  const std::size_t nip = model.mesh().num_tets();
  const Eigen::Index n = primal_modes.cols();
  std::vector<Eigen::Matrix<double, 6, Eigen::Dynamic>> bpsi(nip);
  for (std::size_t p = 0; p < nip; ++p) bpsi[p] = reduced_strain_operator(model, primal_modes, p);
  const auto ns = static_cast<Eigen::Index>(stresses.size());
  Mat g(n * ns + 1, static_cast<Eigen::Index>(nip));
  for (Eigen::Index s = 0; s < ns; ++s)
    for (std::size_t p = 0; p < nip; ++p)
      g.block(s * n, static_cast<Eigen::Index>(p), n, 1) =
          bpsi[p].transpose() * stresses[static_cast<std::size_t>(s)].col(static_cast<Eigen::Index>(p));
  // Constant row, scaled so its integral matches the RMS integral of the others.
  const Vec w = model.mesh().ip_weights();
  double scale = 1.0;
  if (g.rows() > 1) {
    const Vec integrals = g.topRows(g.rows() - 1) * w;
    const double rms = integrals.norm() / std::sqrt(static_cast<double>(integrals.size()));
    if (rms > 0.0) scale = rms / w.sum();
  }
  g.row(g.rows() - 1).setConstant(scale);
  return g;
}

LocalROM train_local_rom(const FemModel& model, const std::vector<const Trajectory*>& trajectories,
                         int cluster_id, const std::vector<int>& sample_ids,
                         const RomTrainingOptions& options) {
  const Mesh& mesh = model.mesh();
  LocalROM rom;
  rom.cluster_id = cluster_id;
  rom.snapshot_samples = sample_ids;
  SnapshotSet snaps = gather_snapshots(trajectories);
  rom.primal = snapshot_pod(snaps.displacement, options.primal_tolerance, dof_weights(mesh));
  if (rom.primal.size() == 0) throw Error("primal POD basis is empty: all snapshots vanish");
  const Vec ipw = mesh.ip_weights();
  for (int d = 0; d < kNumDual; ++d)
    rom.dual[static_cast<std::size_t>(d)] = snapshot_pod(snaps.dual[static_cast<std::size_t>(d)], options.dual_tolerance, ipw);
  const Mat g = ecm_integrands(model, rom.primal.modes, snaps.stress);
  rom.quadrature = ecm_quadrature(g, ipw, options.ecm_tolerance);
  rom.dual_sampling = dual_sampling_points(rom.dual, rom.quadrature.points);
  prepare_online(rom, model);
  return rom;
}

void prepare_online(LocalROM& rom, const FemModel& model) {
  rom.reduced_b.clear();
  for (int p : rom.rid_points())
    rom.reduced_b.push_back(reduced_strain_operator(model, rom.primal.modes, static_cast<std::size_t>(p)));
  rom.reduced_centrifugal = rom.primal.modes.transpose() * model.unit_centrifugal_load();
  rom.reduced_pressure = rom.primal.modes.transpose() * model.unit_pressure_load();
}

namespace {

struct ReducedIncrement {
  Vec q;
  std::vector<MaterialState> states;
  std::vector<Vec6> stress;
};

class ReducedSolver {
 public:
  ReducedSolver(const LocalROM& rom, const FemModel& model, const Vec& t_max, const SolverOptions& opt)
      : rom_(rom), model_(model), opt_(opt) {
    // IP temperatures at T_max and T0; the blend is affine in omega.
    const auto& sched = model.schedule();
    const Vec t0 = Vec::Constant(t_max.size(), sched.reference_temperature);
    for (int p : rom.rid_points()) {
      tip_max_.push_back(model.ip_temperature(t_max, static_cast<std::size_t>(p)));
      tip_ref_.push_back(model.ip_temperature(t0, static_cast<std::size_t>(p)));
      options_.push_back(model.options_for(static_cast<std::size_t>(p)));
    }
  }

  bool advance(const ReducedIncrement& start, double t_old, double t_new, int level, ReducedIncrement& out) {
    if (try_newton(start, t_old, t_new, out)) return true;
    if (level >= opt_.max_bisections) return false;
    ++bisections;
    const double t_mid = 0.5 * (t_old + t_new);
    ReducedIncrement mid;
    if (!advance(start, t_old, t_mid, level + 1, mid)) return false;
    return advance(mid, t_mid, t_new, level + 1, out);
  }

  int iterations = 0;
  int bisections = 0;

 private:
  bool try_newton(const ReducedIncrement& start, double t_old, double t_new, ReducedIncrement& out) {
    const auto& sched = model_.schedule();
    const auto& mat = model_.material();
    const double w = sched.omega_at(t_new);
    const double dt = t_new - t_old;
    const Vec f_ext = w * w * rom_.reduced_centrifugal + sched.pressure_at(t_new) * rom_.reduced_pressure;
    const std::size_t np = rom_.reduced_b.size();
    const std::size_t nq = rom_.quadrature.points.size();
    const Eigen::Index n = rom_.primal.size();
    Vec q = start.q;
    std::vector<MaterialState> states(np);
    std::vector<Vec6> stress(np);
    try {
      for (int it = 0; it <= opt_.max_iterations; ++it) {
        Vec f_int = Vec::Zero(n);
        Mat k = Mat::Zero(n, n);
        for (std::size_t p = 0; p < np; ++p) {
          const auto& bp = rom_.reduced_b[p];
          Vec6 eps = bp * q;
          eps.tail<3>() *= 0.5;
          const double temp = (1.0 - w) * tip_ref_[p] + w * tip_max_[p];
          const PointResult r = integrate_point(start.states[p], eps, temp, dt, mat, options_[p]);
          if (p < nq) {
            const Mat6 d = numerical_tangent(start.states[p], eps, temp, dt, mat, options_[p], r);
            const double wp = rom_.quadrature.weights[static_cast<Eigen::Index>(p)];
            f_int.noalias() += wp * bp.transpose() * r.stress;
            k.noalias() += wp * bp.transpose() * d * bp;
          }
          states[p] = r.state;
          stress[p] = r.stress;
        }
        const Vec res = f_int - f_ext;
        const double rnorm = res.norm();
        if (!std::isfinite(rnorm)) return false;
        if (rnorm <= opt_.relative_tolerance * std::max(f_ext.norm(), f_int.norm()) ||
            rnorm <= opt_.absolute_tolerance) {
          out.q = q;
          out.states = std::move(states);
          out.stress = std::move(stress);
          return true;
        }
        if (it == opt_.max_iterations) break;
        ++iterations;
        const Vec dq = k.partialPivLu().solve(-res);
        if (!dq.allFinite()) return false;
        q += dq;
      }
    } catch (const ConvergenceError&) {
      return false;
    }
    return false;
  }

  const LocalROM& rom_;
  const FemModel& model_;
  SolverOptions opt_;
  std::vector<double> tip_max_, tip_ref_;
  std::vector<IntegrationOptions> options_;
};

}  // namespace

ReducedTrajectory reduced_solve(const LocalROM& rom, const FemModel& model, const Vec& t_max,
                                const SolverOptions& options) {
  const auto start_time = std::chrono::steady_clock::now();
  if (rom.reduced_b.size() != rom.quadrature.points.size() + rom.dual_sampling.size())
    throw Error("ROM online operators are not prepared");
  const auto& sched = model.schedule();
  const int steps = sched.num_steps;
  const auto np = static_cast<Eigen::Index>(rom.reduced_b.size());
  ReducedTrajectory out;
  for (int k = 0; k <= steps; ++k) out.times.push_back(sched.time(k));
  out.coordinates = Mat::Zero(rom.primal.size(), steps + 1);
  out.rid_stress = Mat::Zero(6 * np, steps + 1);
  out.rid_p_cum = Mat::Zero(np, steps + 1);

  ReducedSolver solver(rom, model, t_max, options);
  ReducedIncrement current;
  current.q = Vec::Zero(rom.primal.size());
  current.states.assign(static_cast<std::size_t>(np), MaterialState{});
  for (auto& s : current.states) s.temperature = model.material().reference_temperature;
  for (int k = 1; k <= steps; ++k) {
    ReducedIncrement next;
    if (!solver.advance(current, sched.time(k - 1), sched.time(k), 0, next)) {
      std::ostringstream os;
      os << "reduced Newton solve failed at step " << k << " after " << options.max_bisections
         << " bisection levels";
      throw ConvergenceError(os.str(), k);
    }
    current = std::move(next);
    out.coordinates.col(k) = current.q;
    for (Eigen::Index i = 0; i < np; ++i) {
      out.rid_stress.col(k).segment<6>(6 * i) = current.stress[static_cast<std::size_t>(i)];
      out.rid_p_cum(i, k) = current.states[static_cast<std::size_t>(i)].p_cum_oct;
    }
  }
  out.newton_iterations = solver.iterations;
  out.bisections = solver.bisections;
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return out;
}

namespace {

void put_basis(Container& c, const std::string& prefix, const ReducedBasis& b) {
  c.put(prefix + ".modes", b.modes);
  c.put_vector(prefix + ".eigenvalues", b.eigenvalues);
  c.put_vector(prefix + ".all_eigenvalues", b.all_eigenvalues);
  c.put_vector(prefix + ".weights", b.weights);
  c.put_scalar(prefix + ".tolerance", b.tolerance);
}

ReducedBasis get_basis(const Container& c, const std::string& prefix) {
  ReducedBasis b;
  b.modes = c.get(prefix + ".modes");
  b.eigenvalues = c.get_vector(prefix + ".eigenvalues");
  b.all_eigenvalues = c.get_vector(prefix + ".all_eigenvalues");
  b.weights = c.get_vector(prefix + ".weights");
  b.tolerance = c.get_scalar(prefix + ".tolerance");
  return b;
}

}  // namespace

Container rom_to_container(const LocalROM& rom) {
  Container c;
  c.put_scalar("cluster_id", rom.cluster_id);
  c.put_indices("snapshot_samples", rom.snapshot_samples);
  put_basis(c, "primal", rom.primal);
  for (int d = 0; d < kNumDual; ++d) put_basis(c, std::string("dual.") + dual_name(d), rom.dual[static_cast<std::size_t>(d)]);
  c.put_indices("ecm.points", rom.quadrature.points);
  c.put_vector("ecm.weights", rom.quadrature.weights);
  c.put_scalar("ecm.residual", rom.quadrature.residual);
  c.put_scalar("ecm.stagnated", rom.quadrature.stagnated ? 1.0 : 0.0);
  c.put_indices("rid.dual_sampling", rom.dual_sampling);
  c.put_scalar("gappy.present", rom.has_gappy ? 1.0 : 0.0);
  if (rom.has_gappy) {
    for (int d = 0; d < kNumDual; ++d) {
      const auto& g = rom.gappy[static_cast<std::size_t>(d)];
      const std::string p = std::string("gappy.") + dual_name(d);
      c.put(p + ".weights", g.weights);
      c.put_vector(p + ".intercept", g.intercept);
      c.put_scalar(p + ".lambda", g.lambda);
      c.put_scalar(p + ".cv_r2", g.cv_r2);
      c.put_scalar(p + ".folds", g.folds);
      c.put_scalar(p + ".seed", static_cast<double>(g.seed));
      c.put_vector(p + ".lambda_grid", Eigen::Map<const Vec>(g.lambda_grid.data(), static_cast<Eigen::Index>(g.lambda_grid.size())));
      c.put_vector(p + ".cv_scores", Eigen::Map<const Vec>(g.cv_scores.data(), static_cast<Eigen::Index>(g.cv_scores.size())));
    }
  }
  return c;
}

LocalROM rom_from_container(const Container& c, const FemModel& model) {
  LocalROM rom;
  rom.cluster_id = static_cast<int>(c.get_scalar("cluster_id"));
  rom.snapshot_samples = c.get_indices("snapshot_samples");
  rom.primal = get_basis(c, "primal");
  if (rom.primal.modes.rows() != static_cast<Eigen::Index>(model.mesh().num_dofs()))
    throw Error("stored ROM does not match the mesh");
  for (int d = 0; d < kNumDual; ++d) rom.dual[static_cast<std::size_t>(d)] = get_basis(c, std::string("dual.") + dual_name(d));
  rom.quadrature.points = c.get_indices("ecm.points");
  rom.quadrature.weights = c.get_vector("ecm.weights");
  rom.quadrature.residual = c.get_scalar("ecm.residual");
  rom.quadrature.stagnated = c.get_scalar("ecm.stagnated") != 0.0;
  rom.dual_sampling = c.get_indices("rid.dual_sampling");
  rom.has_gappy = c.has("gappy.present") && c.get_scalar("gappy.present") != 0.0;
  if (rom.has_gappy) {
    for (int d = 0; d < kNumDual; ++d) {
      auto& g = rom.gappy[static_cast<std::size_t>(d)];
      const std::string p = std::string("gappy.") + dual_name(d);
      g.weights = c.get(p + ".weights");
      g.intercept = c.get_vector(p + ".intercept");
      g.lambda = c.get_scalar(p + ".lambda");
      g.cv_r2 = c.get_scalar(p + ".cv_r2");
      g.folds = static_cast<int>(c.get_scalar(p + ".folds"));
      g.seed = static_cast<std::uint64_t>(c.get_scalar(p + ".seed"));
      const Vec grid = c.get_vector(p + ".lambda_grid");
      const Vec scores = c.get_vector(p + ".cv_scores");
      g.lambda_grid.assign(grid.data(), grid.data() + grid.size());
      g.cv_scores.assign(scores.data(), scores.data() + scores.size());
    }
  }
  prepare_online(rom, model);
  return rom;
}

}  // namespace romnet
