#include "romnet/pipeline.hpp"

#include "romnet/container.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace romnet {

namespace fs = std::filesystem;

const std::vector<StageSpec>& stage_graph() {
  static const std::vector<StageSpec> graph{
      {"mesh", "mesh", "mesh", {"mesh"}, {}},
      {"thermal", "thermal", "thermal-build", {"thermal"}, {"mesh"}},
      {"doe", "doe", "doe", {"doe", "seeds.doe"}, {}},
      {"snapshots", "snapshots", "hfm-run", {"loading", "material", "solver"}, {"mesh", "thermal", "doe"}},
      {"clusters", "clusters", "cluster", {"cluster", "seeds.cluster"}, {"snapshots"}},
      {"roms", "roms", "train-rom", {"rom"}, {"clusters"}},
      {"classifier", "classifier", "train-classifier",
       {"classifier", "seeds.cv", "seeds.redundancy"}, {"clusters"}},
      {"gappy", "gappy", "train-gappy", {"gappy", "seeds.cv"}, {"roms"}},
      {"uq", "uq", "uq", {"uq", "seeds.mc"}, {"classifier", "gappy"}},
      {"validation", "uq", "validate", {"validation", "seeds.validation", "uq.zone_fraction"},
       {"classifier", "gappy"}},
  };
  return graph;
}

const StageSpec& stage_spec(const std::string& name) {
  for (const auto& s : stage_graph())
    if (s.name == name) return s;
  throw Error("unknown stage '" + name + "'");
}

std::array<double, 5> DoeArtifact::chi(int sample) const {
  const int nm = num_maxproj();
  const Mat& p = sample < nm ? maxproj.points : sobol.points;
  const int row = sample < nm ? sample : sample - nm;
  std::array<double, 5> c{};
  for (int k = 0; k < 5; ++k) c[static_cast<std::size_t>(k)] = p(row, k);
  return c;
}

namespace {

void put_hash(Container& c, const std::string& name, std::uint64_t h) {
  c.put_scalar(name + ".hi", static_cast<double>(h >> 32));
  c.put_scalar(name + ".lo", static_cast<double>(h & 0xffffffffULL));
}

std::uint64_t get_hash(const Container& c, const std::string& name) {
  if (!c.has(name + ".hi")) return 0;
  return (static_cast<std::uint64_t>(c.get_scalar(name + ".hi")) << 32) |
         static_cast<std::uint64_t>(c.get_scalar(name + ".lo"));
}

Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Container trajectory_container(const Trajectory& t, const Vec& t_max, const std::array<double, 5>& chi,
                               const std::array<double, 5>& upsilon, std::uint64_t hash) {
  Container c;
  put_hash(c, "stage_hash", hash);
  c.put_vector("times", to_vec(t.times));
  c.put("displacement", t.displacement);
  c.put("stress", t.stress);
  c.put("p_cum", t.p_cum);
  c.put_vector("t_max", t_max);
  c.put_vector("chi", Eigen::Map<const Vec>(chi.data(), 5));
  c.put_vector("upsilon", Eigen::Map<const Vec>(upsilon.data(), 5));
  c.put_scalar("wall_seconds", t.wall_seconds);
  c.put_scalar("newton_iterations", t.newton_iterations);
  c.put_scalar("bisections", t.bisections);
  c.put_scalar("sinh_caps", t.sinh_caps);
  return c;
}

Trajectory trajectory_from(const Container& c) {
  Trajectory t;
  t.times = to_std(c.get_vector("times"));
  t.displacement = c.get("displacement");
  t.stress = c.get("stress");
  t.p_cum = c.get("p_cum");
  t.wall_seconds = c.get_scalar("wall_seconds");
  t.newton_iterations = static_cast<int>(c.get_scalar("newton_iterations"));
  t.bisections = static_cast<int>(c.get_scalar("bisections"));
  t.sinh_caps = static_cast<int>(c.get_scalar("sinh_caps"));
  return t;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

FieldErrors mean_errors(const std::vector<FieldErrors>& e) {
  FieldErrors m;
  if (e.empty()) return m;
  for (const auto& x : e) {
    m.l2_omega += x.l2_omega;
    m.l2_zone += x.l2_zone;
    m.linf_omega += x.linf_omega;
    m.linf_zone += x.linf_zone;
    m.average_error += x.average_error;
    m.max_distance += x.max_distance;
  }
  const auto n = static_cast<double>(e.size());
  m.l2_omega /= n;
  m.l2_zone /= n;
  m.linf_omega /= n;
  m.linf_zone /= n;
  m.average_error /= n;
  m.max_distance /= n;
  return m;
}

std::vector<std::array<double, 5>> uniform_draws(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::array<double, 5>> out(static_cast<std::size_t>(std::max(0, n)));
  for (auto& c : out)
    for (double& v : c) v = unif(rng);
  return out;
}

void write_csv_curve(const fs::path& path, const char* xname, const Vec& x, const char* yname, const Vec& y) {
  std::ostringstream os;
  os << xname << "," << yname << "\n" << std::setprecision(12);
  for (Eigen::Index i = 0; i < x.size(); ++i) os << x[i] << "," << y[i] << "\n";
  atomic_write_text(path, os.str());
}

}  // namespace

Pipeline::Pipeline(PipelineConfig config, fs::path root, std::ostream& log)
    : config_(std::move(config)), store_(std::move(root)), log_(log) {
  config_.validate();
}

Pipeline::~Pipeline() = default;

std::uint64_t Pipeline::expected_hash(const std::string& artifact) const {
  const StageSpec& s = stage_spec(artifact);
  std::map<std::string, std::uint64_t> up;
  for (const auto& u : s.upstream) up[u] = expected_hash(u);
  return artifact_hash(artifact, config_hash(config_, s.config_keys), up);
}

bool Pipeline::is_current(const std::string& artifact) const {
  const StageSpec& s = stage_spec(artifact);
  if (!store_.has_manifest(s.dir, artifact)) return false;
  return store_.read_manifest(s.dir, artifact).hash == expected_hash(artifact);
}

namespace {

void check_artifact(const Pipeline& p, const ArtifactStore& store, const std::string& name,
                    const std::string& needed_by) {
  const StageSpec& u = stage_spec(name);
  if (!store.has_manifest(u.dir, name))
    throw MissingArtifactError("artifact '" + name + "'" + (needed_by.empty() ? "" : " needed by '" + needed_by + "'") +
                               " is missing; run `romnet " + u.command + "` first");
  if (store.read_manifest(u.dir, name).hash != p.expected_hash(name))
    throw StaleArtifactError("artifact '" + name + "'" + (needed_by.empty() ? "" : " needed by '" + needed_by + "'") +
                             " is stale (configuration or inputs changed); rerun `romnet " + u.command + "`");
}

}  // namespace

void Pipeline::require_upstream(const std::string& artifact) const {
  for (const auto& u : stage_spec(artifact).upstream) check_artifact(*this, store_, u, artifact);
}

Manifest Pipeline::make_manifest(const std::string& artifact) const {
  const StageSpec& s = stage_spec(artifact);
  Manifest m;
  m.artifact = artifact;
  m.config_hash = config_hash(config_, s.config_keys);
  for (const auto& u : s.upstream) m.upstream[u] = expected_hash(u);
  m.hash = artifact_hash(artifact, m.config_hash, m.upstream);
  return m;
}

bool Pipeline::skip_if_current(const std::string& artifact, bool force) const {
  if (!force && is_current(artifact)) {
    log_ << "[" << artifact << "] up to date\n";
    return true;
  }
  return false;
}

// ---------------------------------------------------------------- mesh

StageStatus Pipeline::run_mesh(bool force) {
  if (skip_if_current("mesh", force)) return StageStatus::UpToDate;
  const Mesh m = generate_toy_blade_mesh(config_.blade);
  Container c;
  Mat nodes(static_cast<Eigen::Index>(m.num_nodes()), 3);
  for (std::size_t i = 0; i < m.num_nodes(); ++i) nodes.row(static_cast<Eigen::Index>(i)) = m.nodes[i].transpose();
  Mat tets(static_cast<Eigen::Index>(m.num_tets()), 4);
  for (std::size_t i = 0; i < m.num_tets(); ++i)
    for (int k = 0; k < 4; ++k) tets(static_cast<Eigen::Index>(i), k) = m.tets[i][static_cast<std::size_t>(k)];
  c.put("nodes", nodes);
  c.put("tets", tets);
  c.put_vector("ip_weights", m.ip_weights());
  write_container(store_.dir("mesh") / "mesh.bin", c);
  Manifest man = make_manifest("mesh");
  man.info["nodes"] = std::to_string(m.num_nodes());
  man.info["tets"] = std::to_string(m.num_tets());
  man.info["volume"] = fmt("%.6g", m.total_volume());
  store_.write_manifest("mesh", man);
  log_ << "[mesh] " << m.num_nodes() << " nodes, " << m.num_tets() << " tetrahedra\n";
  mesh_.reset();
  model_.reset();
  return StageStatus::Ran;
}

const Mesh& Pipeline::mesh() {
  if (!mesh_) {
    check_artifact(*this, store_, "mesh", "");
    auto m = std::make_unique<Mesh>(generate_toy_blade_mesh(config_.blade));
    const Container c = read_container(store_.dir("mesh") / "mesh.bin");
    if (c.get("nodes").rows() != static_cast<Eigen::Index>(m->num_nodes()))
      throw StaleArtifactError("stored mesh does not match the configuration; rerun `romnet mesh`");
    mesh_ = std::move(m);
  }
  return *mesh_;
}

const FemModel& Pipeline::model() {
  if (!model_) {
    LoadSchedule sched = config_.loading;
    sched.reference_temperature = config_.thermal.reference_temperature;
    model_ = std::make_unique<FemModel>(mesh(), config_.material, sched);
  }
  return *model_;
}

// ---------------------------------------------------------------- thermal

StageStatus Pipeline::run_thermal(bool force) {
  require_upstream("thermal");
  if (skip_if_current("thermal", force)) return StageStatus::UpToDate;
  const auto t0 = std::chrono::steady_clock::now();
  const ThermalModel tm = build_thermal_model(mesh(), config_.thermal, config_.blade.root_chord);
  Container c;
  c.put_vector("t_ref", tm.t_ref);
  c.put_vector("delta_t0", tm.delta_t0);
  Mat modes(tm.t_ref.size(), static_cast<Eigen::Index>(tm.modes.size()));
  for (std::size_t k = 0; k < tm.modes.size(); ++k) modes.col(static_cast<Eigen::Index>(k)) = tm.modes[k];
  c.put("modes", modes);
  c.put_vector("eigenvalues", tm.eigenvalues);
  c.put_indices("surface_nodes", tm.surface_nodes);
  c.put_scalar("correlation_length", tm.correlation_length);
  write_container(store_.dir("thermal") / "thermal.bin", c);
  Manifest man = make_manifest("thermal");
  man.info["modes"] = std::to_string(tm.modes.size());
  man.info["correlation_length"] = fmt("%.6g", tm.correlation_length);
  man.info["surface_nodes"] = std::to_string(tm.surface_nodes.size());
  store_.write_manifest("thermal", man);
  log_ << "[thermal] " << tm.modes.size() << " fluctuation modes, d_G0 = " << tm.correlation_length << " ("
       << fmt("%.2f", seconds_since(t0)) << " s)\n";
  thermal_.reset();
  return StageStatus::Ran;
}

const ThermalModel& Pipeline::thermal() {
  if (!thermal_) {
    check_artifact(*this, store_, "thermal", "");
    const Container c = read_container(store_.dir("thermal") / "thermal.bin");
    auto tm = std::make_unique<ThermalModel>();
    tm->params = config_.thermal;
    tm->t_ref = c.get_vector("t_ref");
    tm->delta_t0 = c.get_vector("delta_t0");
    const Mat& modes = c.get("modes");
    for (Eigen::Index k = 0; k < modes.cols(); ++k) tm->modes.push_back(modes.col(k));
    tm->eigenvalues = c.get_vector("eigenvalues");
    tm->surface_nodes = c.get_indices("surface_nodes");
    tm->correlation_length = c.get_scalar("correlation_length");
    thermal_ = std::move(tm);
  }
  return *thermal_;
}

// ---------------------------------------------------------------- doe

StageStatus Pipeline::run_doe(bool force) {
  if (skip_if_current("doe", force)) return StageStatus::UpToDate;
  const Design mp = maxproj_lhs(config_.doe.maxproj_points, 5, config_.seeds.doe, config_.doe.maxproj_iterations);
  const Design sb = sobol(config_.doe.sobol_points, 5);
  Container c;
  c.put("maxproj", mp.points);
  c.put("sobol", sb.points);
  write_container(store_.dir("doe") / "doe.bin", c);
  std::ostringstream os;
  os << "sample,design,chi0,chi1,chi2,chi3,chi4,upsilon0,upsilon1,upsilon2,upsilon3,upsilon4\n" << std::setprecision(12);
  int clipped = 0;
  for (int s = 0; s < mp.points.rows() + sb.points.rows(); ++s) {
    const bool is_mp = s < mp.points.rows();
    const Mat& p = is_mp ? mp.points : sb.points;
    const int row = is_mp ? s : s - static_cast<int>(mp.points.rows());
    std::array<double, 5> chi{};
    for (int k = 0; k < 5; ++k) chi[static_cast<std::size_t>(k)] = p(row, k);
    const LoadingCoords lc = to_loading_coords(chi);
    clipped += lc.clipped;
    os << s << "," << (is_mp ? "maxproj" : "sobol");
    for (double v : chi) os << "," << v;
    for (double v : lc.upsilon) os << "," << v;
    os << "\n";
  }
  atomic_write_text(store_.dir("doe") / "samples.csv", os.str());
  Manifest man = make_manifest("doe");
  man.info["maxproj_points"] = std::to_string(mp.points.rows());
  man.info["sobol_points"] = std::to_string(sb.points.rows());
  man.info["maxproj_criterion"] = fmt("%.6g", maxproj_criterion(mp.points));
  man.info["maxproj_star_discrepancy"] = fmt("%.4f", star_discrepancy(mp.points));
  man.info["sobol_star_discrepancy"] = fmt("%.4f", star_discrepancy(sb.points));
  man.info["clipped"] = std::to_string(clipped);
  store_.write_manifest("doe", man);
  log_ << "[doe] " << mp.points.rows() << " MaxProj LHS + " << sb.points.rows() << " Sobol points\n";
  doe_.reset();
  return StageStatus::Ran;
}

const DoeArtifact& Pipeline::doe() {
  if (!doe_) {
    check_artifact(*this, store_, "doe", "");
    const Container c = read_container(store_.dir("doe") / "doe.bin");
    auto d = std::make_unique<DoeArtifact>();
    d->maxproj.points = c.get("maxproj");
    d->maxproj.kind = "maxproj";
    d->maxproj.seed = config_.seeds.doe;
    d->sobol.points = c.get("sobol");
    d->sobol.kind = "sobol";
    for (int s = 0; s < d->maxproj.points.rows() + d->sobol.points.rows(); ++s) d->coords.push_back(to_loading_coords(d->chi(s)));
    doe_ = std::move(d);
  }
  return *doe_;
}

// ---------------------------------------------------------------- snapshots

fs::path Pipeline::sample_path(int sample) const {
  char name[32];
  if (sample < 0)
    std::snprintf(name, sizeof name, "reference.bin");
  else
    std::snprintf(name, sizeof name, "sample_%04d.bin", sample);
  return store_.root() / "snapshots" / name;
}

bool Pipeline::sample_current(int sample) const {
  const fs::path p = sample_path(sample);
  if (!fs::exists(p)) return false;
  try {
    return get_hash(read_container(p), "stage_hash") == expected_hash("snapshots");
  } catch (const Error&) {
    return false;
  }
}

Vec Pipeline::sample_temperature_field(int sample) {
  std::array<double, 5> ups{1.0, 0.0, 0.0, 0.0, 0.0};
  if (sample >= 0) ups = doe().coords.at(static_cast<std::size_t>(sample)).upsilon;
  return sample_temperature(thermal(), ups).t_max;
}

void Pipeline::solve_sample(int sample) {
  std::array<double, 5> chi{}, ups{1.0, 0.0, 0.0, 0.0, 0.0};
  if (sample >= 0) {
    chi = doe().chi(sample);
    ups = doe().coords.at(static_cast<std::size_t>(sample)).upsilon;
  }
  const ThermalSample ts = sample_temperature(thermal(), ups);
  SolverOptions opt = config_.solver;
  opt.workers = 1;
  Trajectory t;
  try {
    t = solve_cycle(model(), ts.t_max, opt);
  } catch (const ConvergenceError& e) {
    throw Error("high-fidelity solve of sample " + std::to_string(sample) + " failed at step " +
                std::to_string(e.index()) + ": " + e.what());
  }
  write_container(sample_path(sample), trajectory_container(t, ts.t_max, chi, ups, expected_hash("snapshots")));
}

StageStatus Pipeline::run_hfm(bool force, int sample) {
  require_upstream("snapshots");
  const int n = doe().num_samples();
  if (sample >= n) throw Error("sample id " + std::to_string(sample) + " out of range (0.." + std::to_string(n - 1) + ")");
  if (sample < 0 && skip_if_current("snapshots", force)) return StageStatus::UpToDate;
  mesh();
  model();
  thermal();
  std::vector<int> todo;
  if (sample >= 0) {
    if (force || !sample_current(sample)) todo.push_back(sample);
  } else {
    for (int s = -1; s < n; ++s)
      if (force || !sample_current(s)) todo.push_back(s);
  }
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> errors(todo.size());
  parallel_for(todo.size(), config_.workers, [&](std::size_t i) {
    try {
      solve_sample(todo[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw Error(e);
  log_ << "[hfm-run] solved " << todo.size() << " loading(s) in " << fmt("%.1f", seconds_since(t0)) << " s\n";
  // The stage is complete once every sample and the reference are current.
  for (int s = -1; s < n; ++s)
    if (!sample_current(s)) {
      log_ << "[hfm-run] snapshots incomplete; sample " << s << " still missing\n";
      return StageStatus::Ran;
    }
  double total = 0.0;
  int newton = 0;
  for (int s = 0; s < n; ++s) {
    const Container c = read_container(sample_path(s));
    total += c.get_scalar("wall_seconds");
    newton += static_cast<int>(c.get_scalar("newton_iterations"));
  }
  Manifest man = make_manifest("snapshots");
  man.info["samples"] = std::to_string(n);
  man.info["mean_hfm_seconds"] = fmt("%.4f", total / n);
  man.info["mean_newton_iterations"] = fmt("%.2f", static_cast<double>(newton) / n);
  store_.write_manifest("snapshots", man);
  zone_.reset();
  return StageStatus::Ran;
}

Trajectory Pipeline::load_trajectory(int sample) const {
  const fs::path p = sample_path(sample);
  if (!fs::exists(p)) throw MissingArtifactError("snapshot " + p.filename().string() + " is missing; run `romnet hfm-run`");
  return trajectory_from(read_container(p));
}

Trajectory Pipeline::load_reference() const { return load_trajectory(-1); }

const ZoneOfInterest& Pipeline::zone() {
  if (!zone_) {
    check_artifact(*this, store_, "snapshots", "");
    const Trajectory ref = load_reference();
    zone_ = std::make_unique<ZoneOfInterest>(make_zone(ref.p_cum.col(ref.num_steps()), config_.uq.zone_fraction));
  }
  return *zone_;
}

// ---------------------------------------------------------------- clusters

StageStatus Pipeline::run_cluster(bool force) {
  require_upstream("clusters");
  if (skip_if_current("clusters", force)) return StageStatus::UpToDate;
  const auto t0 = std::chrono::steady_clock::now();
  const DoeArtifact& d = doe();
  const int nm = d.num_maxproj();
  const Vec w = mesh().ip_weights();
  Mat fields(w.size(), nm);
  for (int s = 0; s < nm; ++s) {
    const Trajectory t = load_trajectory(s);
    fields.col(s) = t.p_cum.col(t.num_steps());
  }
  const Mat dis = dissimilarity_matrix(fields, w, config_.workers);
  const int k = config_.cluster.clusters;
  Dictionary dict = k_medoids(dis, k, config_.cluster.restarts, config_.seeds.cluster);
  const MdsResult mds = mds_smacof(dis);
  for (int c = 0; c < k; ++c) {
    std::vector<int> members;
    for (int s = 0; s < nm; ++s)
      if (dict.labels[static_cast<std::size_t>(s)] == c) members.push_back(s);
    const int m = std::min(config_.cluster.snapshots_per_cluster, static_cast<int>(members.size()));
    if (m < config_.cluster.snapshots_per_cluster)
      log_ << "[cluster] warning: cluster " << c << " has only " << members.size() << " members\n";
    dict.selected.push_back(maximin_select(dis, members, m, dict.medoids[static_cast<std::size_t>(c)]));
  }
  std::vector<Vec> medoid_fields;
  for (int m : dict.medoids) medoid_fields.push_back(fields.col(m));
  std::vector<int> sobol_labels, ties;
  for (int s = nm; s < d.num_samples(); ++s) {
    const Trajectory t = load_trajectory(s);
    bool tie = false;
    sobol_labels.push_back(label_by_medoid(t.p_cum.col(t.num_steps()), medoid_fields, w, &tie));
    ties.push_back(tie ? 1 : 0);
  }
  // Disagreement with the Bernoulli indicator, under the best matching of
  // clusters to its two values.
  std::vector<int> truth;
  for (int s = 0; s < nm; ++s) truth.push_back(d.coords[static_cast<std::size_t>(s)].upsilon[0] > 0.5 ? 1 : 0);
  int mislabeled = 0;
  if (k == 2) {
    int a = 0, b = 0;
    for (int s = 0; s < nm; ++s) {
      a += dict.labels[static_cast<std::size_t>(s)] != truth[static_cast<std::size_t>(s)];
      b += dict.labels[static_cast<std::size_t>(s)] == truth[static_cast<std::size_t>(s)];
    }
    mislabeled = std::min(a, b);
  } else {
    for (int c = 0; c < k; ++c) {
      int ones = 0, total = 0;
      for (int s = 0; s < nm; ++s)
        if (dict.labels[static_cast<std::size_t>(s)] == c) {
          ++total;
          ones += truth[static_cast<std::size_t>(s)];
        }
      mislabeled += std::min(ones, total - ones);
    }
  }
  Container c;
  c.put_indices("labels_maxproj", dict.labels);
  c.put_indices("labels_sobol", sobol_labels);
  c.put_indices("sobol_ties", ties);
  c.put_indices("medoids", dict.medoids);
  for (int i = 0; i < k; ++i) c.put_indices("snapshots." + std::to_string(i), dict.selected[static_cast<std::size_t>(i)]);
  c.put("dissimilarity", dis);
  c.put("mds", mds.coords);
  c.put_scalar("mds_relative_stress", mds.relative_stress);
  c.put_scalar("cost", dict.cost);
  c.put_scalar("mislabel_rate", static_cast<double>(mislabeled) / nm);
  write_container(store_.dir("clusters") / "clusters.bin", c);
  {
    std::ostringstream os;
    os << "sample,label,upsilon0,mds_x,mds_y\n" << std::setprecision(10);
    for (int s = 0; s < nm; ++s)
      os << s << "," << dict.labels[static_cast<std::size_t>(s)] << "," << truth[static_cast<std::size_t>(s)] << ","
         << mds.coords(s, 0) << "," << mds.coords(s, 1) << "\n";
    atomic_write_text(store_.dir("clusters") / "maxproj_labels.csv", os.str());
  }
  Manifest man = make_manifest("clusters");
  for (int i = 0; i < k; ++i) {
    const auto cnt = std::count(dict.labels.begin(), dict.labels.end(), i);
    const auto cnt_s = std::count(sobol_labels.begin(), sobol_labels.end(), i);
    man.info["cluster_" + std::to_string(i)] = "medoid=" + std::to_string(dict.medoids[static_cast<std::size_t>(i)]) +
                                               " maxproj=" + std::to_string(cnt) + " sobol=" + std::to_string(cnt_s) +
                                               " snapshots=" + std::to_string(dict.selected[static_cast<std::size_t>(i)].size());
  }
  man.info["cost"] = fmt("%.6g", dict.cost);
  man.info["mislabeled"] = std::to_string(mislabeled) + "/" + std::to_string(nm);
  man.info["mds_relative_stress"] = fmt("%.4g", mds.relative_stress);
  man.info["sobol_ties"] = std::to_string(std::count(ties.begin(), ties.end(), 1));
  store_.write_manifest("clusters", man);
  log_ << "[cluster] K = " << k << ", cost " << fmt("%.4g", dict.cost) << ", mislabeled vs indicator "
       << mislabeled << "/" << nm << " (" << fmt("%.2f", seconds_since(t0)) << " s)\n";
  clusters_.reset();
  return StageStatus::Ran;
}

const ClusterArtifact& Pipeline::clusters() {
  if (!clusters_) {
    check_artifact(*this, store_, "clusters", "");
    const Container c = read_container(store_.dir("clusters") / "clusters.bin");
    auto a = std::make_unique<ClusterArtifact>();
    a->labels_maxproj = c.get_indices("labels_maxproj");
    a->labels_sobol = c.get_indices("labels_sobol");
    a->sobol_ties = c.get_indices("sobol_ties");
    a->medoids = c.get_indices("medoids");
    for (std::size_t i = 0; i < a->medoids.size(); ++i) a->snapshots.push_back(c.get_indices("snapshots." + std::to_string(i)));
    a->dissimilarity = c.get("dissimilarity");
    a->mds.coords = c.get("mds");
    a->mds.relative_stress = c.get_scalar("mds_relative_stress");
    a->cost = c.get_scalar("cost");
    a->mislabel_rate = c.get_scalar("mislabel_rate");
    for (int m : a->medoids) {
      const Trajectory t = load_trajectory(m);
      a->medoid_fields.push_back(t.p_cum.col(t.num_steps()));
    }
    clusters_ = std::move(a);
  }
  return *clusters_;
}

int Pipeline::true_cluster(const Vec& p_cum_final) {
  return label_by_medoid(p_cum_final, clusters().medoid_fields, mesh().ip_weights());
}

// ---------------------------------------------------------------- ROMs

StageStatus Pipeline::run_train_rom(bool force, int cluster) {
  require_upstream("roms");
  const int k = config_.cluster.clusters;
  if (cluster >= k) throw Error("cluster id " + std::to_string(cluster) + " out of range (K = " + std::to_string(k) + ")");
  if (cluster < 0 && skip_if_current("roms", force)) return StageStatus::UpToDate;
  const std::uint64_t h = expected_hash("roms");
  auto rom_file = [&](int c) { return store_.dir("roms") / ("rom_" + std::to_string(c) + ".bin"); };
  auto rom_current = [&](int c) {
    if (!fs::exists(rom_file(c))) return false;
    try {
      return get_hash(read_container(rom_file(c)), "stage_hash") == h;
    } catch (const Error&) {
      return false;
    }
  };
  const ClusterArtifact& cl = clusters();
  for (int c = 0; c < k; ++c) {
    if (cluster >= 0 && c != cluster) continue;
    if (!force && rom_current(c)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    const auto& ids = cl.snapshots[static_cast<std::size_t>(c)];
    std::vector<Trajectory> trajs;
    for (int s : ids) trajs.push_back(load_trajectory(s));
    std::vector<const Trajectory*> ptrs;
    for (const auto& t : trajs) ptrs.push_back(&t);
    const LocalROM rom = train_local_rom(model(), ptrs, c, ids, config_.rom);
    Container cont = rom_to_container(rom);
    put_hash(cont, "stage_hash", h);
    write_container(rom_file(c), cont);
    roms_.erase(c);
    log_ << "[train-rom] cluster " << c << ": " << rom.num_modes() << " displacement modes, RID " << rom.quadrature.points.size()
         << " ECM points + " << rom.dual_sampling.size() << " dual sampling points, ECM residual " << fmt("%.3g", rom.quadrature.residual) << " (" << fmt("%.1f", seconds_since(t0)) << " s)\n";
  }
  for (int c = 0; c < k; ++c)
    if (!rom_current(c)) {
      log_ << "[train-rom] ROM " << c << " still missing\n";
      return StageStatus::Ran;
    }
  Manifest man = make_manifest("roms");
  for (int c = 0; c < k; ++c) {
    const Container cont = read_container(rom_file(c));
    std::string dual;
    for (int d = 0; d < kNumDual; ++d)
      dual += (d ? "," : "") + std::to_string(cont.get(std::string("dual.") + dual_name(d) + ".modes").cols());
    man.info["rom_" + std::to_string(c)] = "modes=" + std::to_string(cont.get("primal.modes").cols()) +
                                           " dual=" + dual + " rid=" + std::to_string(cont.get("ecm.points").size()) + "+" +
                                           std::to_string(cont.get("rid.dual_sampling").size()) +
                                           " ecm_residual=" + fmt("%.3g", cont.get_scalar("ecm.residual"));
  }
  store_.write_manifest("roms", man);
  return StageStatus::Ran;
}

const LocalROM& Pipeline::rom(int cluster) {
  auto it = roms_.find(cluster);
  if (it != roms_.end()) return *it->second;
  check_artifact(*this, store_, "roms", "");
  Container c = read_container(store_.dir("roms") / ("rom_" + std::to_string(cluster) + ".bin"));
  if (is_current("gappy")) {
    const Container g = read_container(store_.dir("gappy") / ("gappy_" + std::to_string(cluster) + ".bin"));
    for (const auto& [name, m] : g.arrays())
      if (name.rfind("gappy.", 0) == 0) c.put(name, m);
  }
  auto r = std::make_unique<LocalROM>(rom_from_container(c, model()));
  const LocalROM& ref = *r;
  roms_[cluster] = std::move(r);
  return ref;
}

// ---------------------------------------------------------------- classifier

std::string classifier_to_text(const Classifier& c, const std::vector<int>& nodes) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "# elastic-net logistic regression on nodal temperatures (raw units)\n";
  os << "classes";
  for (int k : c.classes) os << " " << k;
  os << "\nC " << c.c << "\nl1_ratio " << c.l1_ratio << "\ncv_accuracy " << c.cv_accuracy << "\nfolds " << c.folds
     << "\nseed " << c.seed << "\nmodels " << c.weights.cols() << "\nfeatures " << nodes.size() << "\n";
  os << "intercept";
  for (Eigen::Index m = 0; m < c.intercept.size(); ++m) os << " " << c.intercept[m];
  os << "\n# node weight(s)\n";
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    os << "node " << nodes[i];
    for (Eigen::Index m = 0; m < c.weights.cols(); ++m) os << " " << c.weights(static_cast<Eigen::Index>(i), m);
    os << "\n";
  }
  return os.str();
}

Classifier classifier_from_text(const std::string& text, std::vector<int>* nodes) {
  Classifier c;
  std::istringstream is(text);
  std::string line;
  int models = 0, features = -1;
  std::vector<std::vector<double>> rows;
  std::vector<int> ids;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "classes") {
      int k;
      while (ls >> k) c.classes.push_back(k);
    } else if (key == "C") {
      ls >> c.c;
    } else if (key == "l1_ratio") {
      ls >> c.l1_ratio;
    } else if (key == "cv_accuracy") {
      ls >> c.cv_accuracy;
    } else if (key == "folds") {
      ls >> c.folds;
    } else if (key == "seed") {
      ls >> c.seed;
    } else if (key == "models") {
      ls >> models;
    } else if (key == "features") {
      ls >> features;
    } else if (key == "intercept") {
      std::vector<double> v;
      double x;
      while (ls >> x) v.push_back(x);
      c.intercept = to_vec(v);
    } else if (key == "node") {
      int id;
      ls >> id;
      ids.push_back(id);
      std::vector<double> v;
      double x;
      while (ls >> x) v.push_back(x);
      rows.push_back(v);
    } else {
      throw Error("classifier table: unknown line '" + line + "'");
    }
  }
  if (c.classes.size() < 2 || models < 1 || features != static_cast<int>(rows.size()) ||
      c.intercept.size() != models)
    throw Error("classifier table is incomplete");
  c.weights.resize(features, models);
  for (int i = 0; i < features; ++i) {
    if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != models) throw Error("classifier table: bad weight row");
    for (int m = 0; m < models; ++m) c.weights(i, m) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)];
  }
  if (nodes) *nodes = ids;
  return c;
}

StageStatus Pipeline::run_train_classifier(bool force) {
  require_upstream("classifier");
  if (skip_if_current("classifier", force)) return StageStatus::UpToDate;
  const auto t0 = std::chrono::steady_clock::now();
  const DoeArtifact& d = doe();
  const ClusterArtifact& cl = clusters();
  const int nm = d.num_maxproj();
  const int ns = d.num_samples() - nm;
  const auto nn = static_cast<Eigen::Index>(mesh().num_nodes());
  Mat train(ns, nn), test(nm, nn);
  for (int s = 0; s < ns; ++s) train.row(s) = sample_temperature_field(nm + s).transpose();
  for (int s = 0; s < nm; ++s) test.row(s) = sample_temperature_field(s).transpose();
  const auto& cc = config_.classifier;
  const Vec relevance = relevance_scores(train, cl.labels_sobol, config_.workers);
  const RedundancySurrogate sur = fit_redundancy_surrogate(mesh().nodes, train, cc.redundancy_pairs, config_.seeds.redundancy);
  const FeatureSelection sel = geostat_mrmr(relevance, [&](double dist) { return sur(dist); }, mesh().nodes,
                                            cc.relevance_threshold, cc.features);
  const Mat xtr = train(Eigen::all, sel.selected);
  const Classifier clf = train_classifier(xtr, cl.labels_sobol, cc.c_grid, cc.l1_grid, cc.folds, config_.seeds.cv);
  std::vector<int> predicted;
  for (int s = 0; s < nm; ++s) predicted.push_back(clf.predict(extract_features(test.row(s).transpose(), sel.selected)));
  const ClassificationReport rep = classification_report(cl.labels_maxproj, predicted);

  atomic_write_text(store_.dir("classifier") / "classifier.txt", classifier_to_text(clf, sel.selected));
  {
    std::ostringstream os;
    os << "# preselected " << sel.preselected.size() << " of " << nn << " nodes (relevance >= " << cc.relevance_threshold
       << " nats)\n# rank node relevance x y z\n"
       << std::setprecision(10);
    for (std::size_t i = 0; i < sel.selected.size(); ++i) {
      const int n = sel.selected[i];
      const Vec3& p = mesh().nodes[static_cast<std::size_t>(n)];
      os << i << " " << n << " " << relevance[n] << " " << p.x() << " " << p.y() << " " << p.z() << "\n";
    }
    atomic_write_text(store_.dir("classifier") / "selection.txt", os.str());
  }
  atomic_write_text(store_.dir("classifier") / "report.txt", rep.to_string());
  Container c;
  c.put_vector("relevance", relevance);
  c.put_indices("preselected", sel.preselected);
  c.put_indices("selected", sel.selected);
  c.put_vector("pair_distances", sur.pair_distances);
  c.put_vector("pair_mi", sur.pair_mi);
  c.put_scalar("gp_signal", sur.gp.signal_variance());
  c.put_scalar("gp_length", sur.gp.length_scale());
  c.put_scalar("gp_noise", sur.gp.noise_variance());
  c.put("cv_scores", clf.cv_scores);
  c.put_vector("c_grid", to_vec(clf.c_grid));
  c.put_vector("l1_grid", to_vec(clf.l1_grid));
  c.put_indices("test_predicted", predicted);
  write_container(store_.dir("classifier") / "classifier.bin", c);
  Manifest man = make_manifest("classifier");
  man.info["preselected"] = std::to_string(sel.preselected.size());
  man.info["selected"] = std::to_string(sel.selected.size());
  man.info["C"] = fmt("%.4g", clf.c);
  man.info["l1_ratio"] = fmt("%.3g", clf.l1_ratio);
  man.info["cv_accuracy"] = fmt("%.4f", clf.cv_accuracy);
  man.info["test_accuracy"] = fmt("%.4f", rep.accuracy);
  man.info["weight_sparsity"] = fmt("%.3f", clf.sparsity());
  store_.write_manifest("classifier", man);
  log_ << "[train-classifier] " << sel.preselected.size() << " preselected nodes, " << sel.selected.size()
       << " selected; C = " << clf.c << ", l1 = " << clf.l1_ratio << ", CV accuracy " << fmt("%.4f", clf.cv_accuracy)
       << ", MaxProj accuracy " << fmt("%.4f", rep.accuracy) << " (" << fmt("%.1f", seconds_since(t0)) << " s)\n";
  classifier_.reset();
  return StageStatus::Ran;
}

const ClassifierArtifact& Pipeline::classifier() {
  if (!classifier_) {
    check_artifact(*this, store_, "classifier", "");
    auto a = std::make_unique<ClassifierArtifact>();
    std::vector<int> nodes;
    a->classifier = classifier_from_text(read_text(store_.dir("classifier") / "classifier.txt"), &nodes);
    const Container c = read_container(store_.dir("classifier") / "classifier.bin");
    a->selection.relevance = c.get_vector("relevance");
    a->selection.preselected = c.get_indices("preselected");
    a->selection.selected = nodes;
    a->pair_distances = c.get_vector("pair_distances");
    a->pair_mi = c.get_vector("pair_mi");
    a->gp_signal = c.get_scalar("gp_signal");
    a->gp_length = c.get_scalar("gp_length");
    a->gp_noise = c.get_scalar("gp_noise");
    a->classifier.cv_scores = c.get("cv_scores");
    const Vec cg = c.get_vector("c_grid"), lg = c.get_vector("l1_grid");
    a->classifier.c_grid = to_std(cg);
    a->classifier.l1_grid = to_std(lg);
    a->test_report = classification_report(clusters().labels_maxproj, c.get_indices("test_predicted"));
    classifier_ = std::move(a);
  }
  return *classifier_;
}

// ---------------------------------------------------------------- Gappy surrogates

StageStatus Pipeline::run_train_gappy(bool force) {
  require_upstream("gappy");
  if (skip_if_current("gappy", force)) return StageStatus::UpToDate;
  const DoeArtifact& d = doe();
  const ClusterArtifact& cl = clusters();
  const int nm = d.num_maxproj();
  const int final_step = config_.loading.num_steps;
  const int cruise = model().schedule().cruise_step();
  thermal();
  Manifest man = make_manifest("gappy");
  for (int c = 0; c < config_.cluster.clusters; ++c) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<int> members;
    for (std::size_t i = 0; i < cl.labels_sobol.size(); ++i)
      if (cl.labels_sobol[i] == c) members.push_back(nm + static_cast<int>(i));
    LocalROM r = rom_from_container(read_container(store_.dir("roms") / ("rom_" + std::to_string(c) + ".bin")), model());
    const std::size_t n_members = members.size();
    std::vector<std::array<Vec, kNumDual>> xin(n_members), yout(n_members);
    std::vector<char> ok(n_members, 0);
    SolverOptions opt = config_.solver;
    opt.workers = 1;
    parallel_for(n_members, config_.workers, [&](std::size_t i) {
      const int s = members[i];
      const Vec t_max = sample_temperature(*thermal_, d.coords[static_cast<std::size_t>(s)].upsilon).t_max;
      ReducedTrajectory rt;
      try {
        rt = reduced_solve(r, *model_, t_max, opt);
      } catch (const ConvergenceError&) {
        return;
      }
      const Trajectory hf = load_trajectory(s);
      for (int v = 0; v < kNumDual; ++v) {
        const int step = v == 0 ? final_step : cruise;
        const Vec field = v == 0 ? Vec(hf.p_cum.col(step)) : hf.stress_component(step, v - 1);
        xin[i][static_cast<std::size_t>(v)] = rt.rid_dual(v, step);
        yout[i][static_cast<std::size_t>(v)] = r.dual[static_cast<std::size_t>(v)].project(field);
      }
      ok[i] = 1;
    });
    std::vector<std::size_t> used;
    for (std::size_t i = 0; i < n_members; ++i)
      if (ok[i]) used.push_back(i);
    const int n = static_cast<int>(used.size());
    if (n < 4)
      throw Error("cluster " + std::to_string(c) + " has only " + std::to_string(n) +
                  " usable Sobol samples; cannot train its Gappy surrogates");
    const int folds = std::min(config_.gappy.folds, n);
    r.has_gappy = true;
    std::string r2s;
    double active = 0.0;
    for (int v = 0; v < kNumDual; ++v) {
      const auto vi = static_cast<std::size_t>(v);
      Mat x(n, xin[used[0]][vi].size()), y(n, yout[used[0]][vi].size());
      for (int i = 0; i < n; ++i) {
        x.row(i) = xin[used[static_cast<std::size_t>(i)]][vi].transpose();
        y.row(i) = yout[used[static_cast<std::size_t>(i)]][vi].transpose();
      }
      r.gappy[vi] = train_gappy_surrogate(x, y, folds, config_.seeds.cv, config_.gappy.grid_size);
      r2s += (v ? "," : "") + fmt("%.4f", r.gappy[vi].cv_r2);
      active += r.gappy[vi].active_fraction() / kNumDual;
    }
    const Container full = rom_to_container(r);
    Container g;
    for (const auto& [name, m] : full.arrays())
      if (name.rfind("gappy.", 0) == 0) g.put(name, m);
    write_container(store_.dir("gappy") / ("gappy_" + std::to_string(c) + ".bin"), g);
    man.info["cluster_" + std::to_string(c)] = "samples=" + std::to_string(n) + "/" + std::to_string(n_members) +
                                               " cv_r2=" + r2s + " active=" + fmt("%.3f", active);
    log_ << "[train-gappy] cluster " << c << ": " << n << " samples, CV R2 " << r2s << " ("
         << fmt("%.1f", seconds_since(t0)) << " s)\n";
  }
  store_.write_manifest("gappy", man);
  roms_.clear();
  return StageStatus::Ran;
}

// ---------------------------------------------------------------- online path

RomPathResult Pipeline::rom_path(const Vec& t_max, int forced_cluster) {
  const auto t0 = std::chrono::steady_clock::now();
  RomPathResult out;
  const ClassifierArtifact& ca = classifier();
  out.cluster = forced_cluster >= 0 ? forced_cluster
                                    : ca.classifier.predict(extract_features(t_max, ca.selection.selected));
  const LocalROM& r = rom(out.cluster);
  if (!r.has_gappy) throw MissingArtifactError("Gappy surrogates are missing; run `romnet train-gappy`");
  SolverOptions opt = config_.solver;
  opt.workers = 1;
  const ReducedTrajectory rt = reduced_solve(r, *model_, t_max, opt);
  const int final_step = static_cast<int>(rt.times.size()) - 1;
  const int cruise = model_->schedule().cruise_step();
  out.p_cum = reconstruct_dual(rt.rid_dual(0, final_step), r.gappy[0], r.dual[0]);
  out.stress.resize(6, out.p_cum.size());
  for (int c = 0; c < 6; ++c)
    out.stress.row(c) = reconstruct_dual(rt.rid_dual(c + 1, cruise), r.gappy[static_cast<std::size_t>(c + 1)],
                                         r.dual[static_cast<std::size_t>(c + 1)]).transpose();
  out.newton_iterations = rt.newton_iterations;
  out.seconds = seconds_since(t0);
  return out;
}

// ---------------------------------------------------------------- Monte Carlo

StageStatus Pipeline::run_uq(bool force) {
  require_upstream("uq");
  if (skip_if_current("uq", force)) return StageStatus::UpToDate;
  // Load every shared artifact before the parallel region.
  const ZoneOfInterest& z = zone();
  const Vec w = mesh().ip_weights();
  for (int c = 0; c < config_.cluster.clusters; ++c) rom(c);
  classifier();
  thermal();
  const ThermalModel& tm = *thermal_;
  const UqReport rep = run_monte_carlo(config_.uq.draws, config_.seeds.mc, config_.workers, [&](const std::array<double, 5>& chi) {
    DrawResult d;
    const LoadingCoords lc = to_loading_coords(chi);
    const ThermalSample ts = sample_temperature(tm, lc.upsilon);
    const RomPathResult r = rom_path(ts.t_max);
    d.ok = true;
    d.cluster = r.cluster;
    d.qoi = extract_qoi(r.p_cum, r.stress, w, z);
    return d;
  });
  const fs::path dir = store_.dir("uq");
  {
    std::ostringstream os;
    os << "draw,chi0,chi1,chi2,chi3,chi4,cluster,ok,p_cum,sigma_eq,seconds,error\n" << std::setprecision(12);
    for (std::size_t i = 0; i < rep.draws.size(); ++i) {
      const auto& d = rep.draws[i];
      os << i;
      for (double v : d.chi) os << "," << v;
      os << "," << d.cluster << "," << (d.ok ? 1 : 0) << "," << d.qoi.p_cum << "," << d.qoi.sigma_eq << "," << d.seconds
         << ",\"" << d.error << "\"\n";
    }
    atomic_write_text(dir / "samples.csv", os.str());
  }
  auto curves = [&](const std::vector<double>& s, const std::string& name) {
    if (s.size() < 2) return;
    const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    if (*hi == *lo) return;
    const double h = silverman_bandwidth(s);
    const Vec grid = Vec::LinSpaced(config_.uq.kde_points, *lo - 3.0 * h, *hi + 3.0 * h);
    write_csv_curve(dir / ("kde_" + name + ".csv"), name.c_str(), grid, "density", kde(s, grid));
    const Histogram hist = histogram(s, config_.uq.histogram_bins);
    std::ostringstream os;
    os << "lower,upper,count\n" << std::setprecision(12);
    for (Eigen::Index b = 0; b < hist.counts.size(); ++b) os << hist.edges[b] << "," << hist.edges[b + 1] << "," << hist.counts[b] << "\n";
    atomic_write_text(dir / ("histogram_" + name + ".csv"), os.str());
  };
  curves(rep.p_cum_samples(), "p_cum");
  curves(rep.sigma_eq_samples(), "sigma_eq");
  std::ostringstream summary;
  summary << rep.summary() << "zone of interest: " << z.ips.size() << " integration points (threshold "
          << z.threshold_fraction << " x max p_cum = " << z.reference_max << ")\n";
  double mean_seconds = 0.0;
  for (const auto& d : rep.draws) mean_seconds += d.seconds / std::max<std::size_t>(1, rep.draws.size());
  summary << "mean seconds per draw: " << fmt("%.4f", mean_seconds) << "\n";
  atomic_write_text(dir / "summary.txt", summary.str());
  Container c;
  Mat samples(static_cast<Eigen::Index>(rep.draws.size()), 10);
  for (std::size_t i = 0; i < rep.draws.size(); ++i) {
    const auto& d = rep.draws[i];
    const auto r = static_cast<Eigen::Index>(i);
    for (int k = 0; k < 5; ++k) samples(r, k) = d.chi[static_cast<std::size_t>(k)];
    samples(r, 5) = d.cluster;
    samples(r, 6) = d.ok ? 1.0 : 0.0;
    samples(r, 7) = d.qoi.p_cum;
    samples(r, 8) = d.qoi.sigma_eq;
    samples(r, 9) = d.seconds;
  }
  c.put("samples", samples);
  c.put_scalar("requested", rep.requested);
  c.put_scalar("wall_seconds", rep.wall_seconds);
  write_container(dir / "uq.bin", c);
  Manifest man = make_manifest("uq");
  man.info["draws"] = std::to_string(rep.requested);
  man.info["failures"] = std::to_string(rep.failures);
  man.info["p_cum_mean"] = fmt("%.6e", rep.p_cum.mean);
  man.info["sigma_eq_mean"] = fmt("%.6e", rep.sigma_eq.mean);
  store_.write_manifest("uq", man);
  log_ << "[uq] " << rep.requested << " draws, " << rep.failures << " failures (" << fmt("%.1f", rep.wall_seconds) << " s)\n"
       << rep.summary();
  return StageStatus::Ran;
}

UqReport Pipeline::load_uq() const {
  check_artifact(*this, store_, "uq", "");
  const Container c = read_container(store_.root() / "uq" / "uq.bin");
  UqReport r;
  r.requested = static_cast<int>(c.get_scalar("requested"));
  r.wall_seconds = c.get_scalar("wall_seconds");
  const Mat& s = c.get("samples");
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    DrawResult d;
    for (int k = 0; k < 5; ++k) d.chi[static_cast<std::size_t>(k)] = s(i, k);
    d.cluster = static_cast<int>(s(i, 5));
    d.ok = s(i, 6) != 0.0;
    d.qoi.p_cum = s(i, 7);
    d.qoi.sigma_eq = s(i, 8);
    d.seconds = s(i, 9);
    r.failures += d.ok ? 0 : 1;
    r.draws.push_back(d);
  }
  const auto ps = r.p_cum_samples(), ss = r.sigma_eq_samples();
  r.p_cum = estimate(ps);
  r.sigma_eq = estimate(ss);
  if (ps.size() >= 2) {
    r.p_cum_95 = confidence_interval(ps, 0.05);
    r.p_cum_99 = confidence_interval(ps, 0.01);
    r.sigma_eq_95 = confidence_interval(ss, 0.05);
    r.sigma_eq_99 = confidence_interval(ss, 0.01);
  }
  return r;
}

// ---------------------------------------------------------------- validation

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-36s %14s %14s\n", "indicator (mean over draws)", "p_cum", "sigma_eq");
  os << buf;
  auto row = [&](const char* name, double a, double b) {
    std::snprintf(buf, sizeof buf, "%-36s %14.4e %14.4e\n", name, a, b);
    os << buf;
  };
  row("relative L2 error on Omega", mean_p_cum.l2_omega, mean_sigma_eq.l2_omega);
  row("relative L2 error on Omega'", mean_p_cum.l2_zone, mean_sigma_eq.l2_zone);
  row("relative Linf error on Omega", mean_p_cum.linf_omega, mean_sigma_eq.linf_omega);
  row("relative Linf error on Omega'", mean_p_cum.linf_zone, mean_sigma_eq.linf_zone);
  row("relative error on Omega' average", mean_p_cum.average_error, mean_sigma_eq.average_error);
  row("mean distance between maxima", mean_p_cum.max_distance, mean_sigma_eq.max_distance);
  std::snprintf(buf, sizeof buf, "draws %zu, failures %d, recommendation accuracy %.4f\n", draws.size(), failures,
                recommendation_accuracy);
  os << buf;
  std::snprintf(buf, sizeof buf, "mean HFM time %.4f s, mean ROM-net time %.4f s, speedup %.2f\n", mean_hfm_seconds,
                mean_rom_seconds, speedup);
  os << buf;
  return os.str();
}

StageStatus Pipeline::run_validate(bool force) {
  require_upstream("validation");
  if (skip_if_current("validation", force)) return StageStatus::UpToDate;
  const ZoneOfInterest& z = zone();
  const Vec w = mesh().ip_weights();
  std::vector<Vec3> pos;
  for (const auto& ip : mesh().ips) pos.push_back(ip.position);
  for (int c = 0; c < config_.cluster.clusters; ++c) rom(c);
  const int cruise = model().schedule().cruise_step();
  ValidationReport rep;
  SolverOptions opt = config_.solver;
  opt.workers = 1;
  // Sequential so that the timings are not distorted by sharing cores.
  for (const auto& chi : uniform_draws(config_.validation.draws, config_.seeds.validation)) {
    ValidationDraw d;
    d.chi = chi;
    try {
      const ThermalSample ts = sample_temperature(thermal(), to_loading_coords(chi).upsilon);
      const Trajectory hf = solve_cycle(model(), ts.t_max, opt);
      d.hfm_seconds = hf.wall_seconds;
      const RomPathResult r = rom_path(ts.t_max);
      d.rom_seconds = r.seconds;
      d.predicted_cluster = r.cluster;
      const Vec hf_p = hf.p_cum.col(hf.num_steps());
      d.true_cluster = true_cluster(hf_p);
      d.p_cum = error_indicators(r.p_cum, hf_p, w, pos, z);
      d.sigma_eq = error_indicators(von_mises_columns(r.stress), hf.von_mises_field(cruise), w, pos, z);
      d.ok = true;
    } catch (const std::exception& e) {
      d.error = e.what();
      ++rep.failures;
    }
    rep.draws.push_back(d);
  }
  std::vector<FieldErrors> ep, es;
  int agree = 0, used = 0;
  for (const auto& d : rep.draws) {
    if (!d.ok) continue;
    ++used;
    ep.push_back(d.p_cum);
    es.push_back(d.sigma_eq);
    rep.mean_hfm_seconds += d.hfm_seconds;
    rep.mean_rom_seconds += d.rom_seconds;
    agree += d.predicted_cluster == d.true_cluster;
  }
  if (used > 0) {
    rep.mean_hfm_seconds /= used;
    rep.mean_rom_seconds /= used;
    rep.speedup = rep.mean_hfm_seconds / rep.mean_rom_seconds;
    rep.recommendation_accuracy = static_cast<double>(agree) / used;
  }
  rep.mean_p_cum = mean_errors(ep);
  rep.mean_sigma_eq = mean_errors(es);
  const fs::path dir = store_.dir("uq");
  {
    std::ostringstream os;
    os << "draw,ok,predicted,true,hfm_seconds,rom_seconds,speedup";
    for (const char* v : {"p_cum", "sigma_eq"})
      for (const char* f : {"l2_omega", "l2_zone", "linf_omega", "linf_zone", "average", "max_distance"})
        os << "," << v << "_" << f;
    os << ",error\n" << std::setprecision(10);
    for (std::size_t i = 0; i < rep.draws.size(); ++i) {
      const auto& d = rep.draws[i];
      os << i << "," << d.ok << "," << d.predicted_cluster << "," << d.true_cluster << "," << d.hfm_seconds << ","
         << d.rom_seconds << "," << (d.rom_seconds > 0 ? d.hfm_seconds / d.rom_seconds : 0.0);
      for (const FieldErrors* e : {&d.p_cum, &d.sigma_eq})
        os << "," << e->l2_omega << "," << e->l2_zone << "," << e->linf_omega << "," << e->linf_zone << ","
           << e->average_error << "," << e->max_distance;
      os << ",\"" << d.error << "\"\n";
    }
    atomic_write_text(dir / "validation.csv", os.str());
  }
  atomic_write_text(dir / "validation.txt", rep.to_string());
  Manifest man = make_manifest("validation");
  man.info["draws"] = std::to_string(rep.draws.size());
  man.info["failures"] = std::to_string(rep.failures);
  man.info["speedup"] = fmt("%.3f", rep.speedup);
  man.info["p_cum_l2_omega"] = fmt("%.4e", rep.mean_p_cum.l2_omega);
  man.info["sigma_eq_l2_omega"] = fmt("%.4e", rep.mean_sigma_eq.l2_omega);
  store_.write_manifest("uq", man);
  log_ << "[validate]\n" << rep.to_string();
  return StageStatus::Ran;
}

ValidationReport Pipeline::load_validation() const {
  check_artifact(*this, store_, "validation", "");
  ValidationReport rep;
  std::istringstream is(read_text(store_.root() / "uq" / "validation.csv"));
  std::string line;
  std::getline(is, line);
  std::vector<FieldErrors> ep, es;
  int agree = 0, used = 0;
  while (std::getline(is, line)) {
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() < 19) continue;
    ValidationDraw d;
    d.ok = f[1] == "1";
    d.predicted_cluster = std::stoi(f[2]);
    d.true_cluster = std::stoi(f[3]);
    d.hfm_seconds = std::stod(f[4]);
    d.rom_seconds = std::stod(f[5]);
    FieldErrors* e[2] = {&d.p_cum, &d.sigma_eq};
    for (int v = 0; v < 2; ++v) {
      const std::size_t o = 7 + 6 * static_cast<std::size_t>(v);
      e[v]->l2_omega = std::stod(f[o]);
      e[v]->l2_zone = std::stod(f[o + 1]);
      e[v]->linf_omega = std::stod(f[o + 2]);
      e[v]->linf_zone = std::stod(f[o + 3]);
      e[v]->average_error = std::stod(f[o + 4]);
      e[v]->max_distance = std::stod(f[o + 5]);
    }
    if (d.ok) {
      ++used;
      ep.push_back(d.p_cum);
      es.push_back(d.sigma_eq);
      rep.mean_hfm_seconds += d.hfm_seconds;
      rep.mean_rom_seconds += d.rom_seconds;
      agree += d.predicted_cluster == d.true_cluster;
    } else {
      ++rep.failures;
    }
    rep.draws.push_back(d);
  }
  if (used > 0) {
    rep.mean_hfm_seconds /= used;
    rep.mean_rom_seconds /= used;
    rep.speedup = rep.mean_hfm_seconds / rep.mean_rom_seconds;
    rep.recommendation_accuracy = static_cast<double>(agree) / used;
  }
  rep.mean_p_cum = mean_errors(ep);
  rep.mean_sigma_eq = mean_errors(es);
  return rep;
}

// ---------------------------------------------------------------- driver

void Pipeline::run_all(bool force) {
  run_mesh(force);
  run_thermal(force);
  run_doe(force);
  run_hfm(force);
  run_cluster(force);
  run_train_rom(force);
  run_train_classifier(force);
  run_train_gappy(force);
  run_uq(force);
  run_validate(force);
}

std::string Pipeline::report() const {
  std::ostringstream os;
  for (const auto& s : stage_graph()) {
    os << "== " << s.name << " ==\n";
    if (!store_.has_manifest(s.dir, s.name)) {
      os << "missing (run `romnet " << s.command << "`)\n";
      continue;
    }
    const Manifest m = store_.read_manifest(s.dir, s.name);
    os << (m.hash == expected_hash(s.name) ? "current" : "STALE") << ", created " << m.created << "\n";
    for (const auto& [k, v] : m.info) os << "  " << k << ": " << v << "\n";
  }
  for (const char* f : {"classifier/report.txt", "uq/summary.txt", "uq/validation.txt"}) {
    const fs::path p = store_.root() / f;
    if (fs::exists(p)) os << "== " << f << " ==\n" << read_text(p);
  }
  return os.str();
}

}  // namespace romnet
