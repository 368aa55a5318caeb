#include "romnet/config.hpp"

#include "romnet/container.hpp"

#include "json.hpp"

namespace romnet {

using nlohmann::json;

namespace {

TemperatureTable table(std::vector<double> keys, std::vector<double> values) {
  return TemperatureTable(std::move(keys), std::move(values));
}

json table_to_json(const TemperatureTable& t) {
  const auto& v = t.values();
  if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); }) && t.keys().size() == 2 &&
      t.keys()[0] == 0.0 && t.keys()[1] == 1e6)
    return v.front();
  return json{{"keys", t.keys()}, {"values", v}};
}

TemperatureTable table_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return TemperatureTable(j.get<double>());
  if (!j.is_object() || !j.contains("keys") || !j.contains("values"))
    throw Error(where + ": expected a number or {\"keys\": [...], \"values\": [...]}");
  return TemperatureTable(j.at("keys").get<std::vector<double>>(), j.at("values").get<std::vector<double>>());
}

json family_to_json(const FamilyParams& p) {
  return json{{"eps_h", table_to_json(p.eps_h)}, {"k_h", table_to_json(p.k_h)}, {"n_h", table_to_json(p.n_h)},
              {"c", table_to_json(p.c)},         {"d", table_to_json(p.d)},     {"M", table_to_json(p.big_m)},
              {"m", table_to_json(p.m)},         {"r0", table_to_json(p.r0)},   {"q", table_to_json(p.q)},
              {"b", table_to_json(p.b)}};
}

FamilyParams family_from_json(const json& j, const std::string& where) {
  FamilyParams p;
  p.eps_h = table_from_json(j.at("eps_h"), where + ".eps_h");
  p.k_h = table_from_json(j.at("k_h"), where + ".k_h");
  p.n_h = table_from_json(j.at("n_h"), where + ".n_h");
  p.c = table_from_json(j.at("c"), where + ".c");
  p.d = table_from_json(j.at("d"), where + ".d");
  p.big_m = table_from_json(j.at("M"), where + ".M");
  p.m = table_from_json(j.at("m"), where + ".m");
  p.r0 = table_from_json(j.at("r0"), where + ".r0");
  p.q = table_from_json(j.at("q"), where + ".q");
  p.b = table_from_json(j.at("b"), where + ".b");
  return p;
}

json to_json(const PipelineConfig& c) {
  json j;
  const auto& b = c.blade;
  j["mesh"] = {{"length", b.length}, {"root_chord", b.root_chord}, {"tip_chord", b.tip_chord},
               {"thickness", b.thickness}, {"twist", b.twist}, {"nx", b.nx}, {"ny", b.ny}, {"nz", b.nz},
               {"foot_layers", b.foot_layers}, {"axis_y", b.axis_y}, {"axis_z", b.axis_z}};
  const auto& l = c.loading;
  j["loading"] = {{"cycle_time", l.cycle_time}, {"num_steps", l.num_steps}, {"omega_max", l.omega_max},
                  {"density", l.density}, {"pressure_max", l.pressure_max},
                  {"pressure_ambient", l.pressure_ambient}, {"omega_profile", l.omega_profile}};
  const auto& m = c.material;
  j["material"] = {{"reference_temperature", m.reference_temperature},
                   {"c11", table_to_json(m.c11)}, {"c12", table_to_json(m.c12)},
                   {"c44", table_to_json(m.c44)}, {"alpha", table_to_json(m.alpha)},
                   {"octahedral", family_to_json(m.octahedral)}, {"cubic", family_to_json(m.cubic)}};
  const auto& t = c.thermal;
  j["thermal"] = {{"reference_temperature", t.reference_temperature}, {"melting_temperature", t.melting_temperature},
                  {"std_dev", t.std_dev}, {"correlation_length", t.correlation_length},
                  {"num_modes", t.num_modes}, {"t_leading", t.t_leading}, {"t_trailing", t.t_trailing},
                  {"t_root", t.t_root}, {"root_decay", t.root_decay}, {"span_bump", t.span_bump},
                  {"perturbation_max", t.perturbation_max}, {"perturbation_radius", t.perturbation_radius},
                  {"perturbation_span", t.perturbation_span}};
  const auto& s = c.solver;
  j["solver"] = {{"relative_tolerance", s.relative_tolerance}, {"absolute_tolerance", s.absolute_tolerance},
                 {"max_iterations", s.max_iterations}, {"max_bisections", s.max_bisections}};
  j["doe"] = {{"maxproj_points", c.doe.maxproj_points}, {"sobol_points", c.doe.sobol_points},
              {"maxproj_iterations", c.doe.maxproj_iterations}};
  j["cluster"] = {{"clusters", c.cluster.clusters}, {"restarts", c.cluster.restarts},
                  {"snapshots_per_cluster", c.cluster.snapshots_per_cluster}};
  j["rom"] = {{"primal_tolerance", c.rom.primal_tolerance}, {"dual_tolerance", c.rom.dual_tolerance},
              {"ecm_tolerance", c.rom.ecm_tolerance}};
  j["classifier"] = {{"relevance_threshold", c.classifier.relevance_threshold},
                     {"features", c.classifier.features}, {"redundancy_pairs", c.classifier.redundancy_pairs},
                     {"folds", c.classifier.folds}, {"c_grid", c.classifier.c_grid},
                     {"l1_grid", c.classifier.l1_grid}};
  j["gappy"] = {{"folds", c.gappy.folds}, {"grid_size", c.gappy.grid_size}};
  j["uq"] = {{"draws", c.uq.draws}, {"zone_fraction", c.uq.zone_fraction}, {"kde_points", c.uq.kde_points},
             {"histogram_bins", c.uq.histogram_bins}};
  j["validation"] = {{"draws", c.validation.draws}};
  j["seeds"] = {{"doe", c.seeds.doe}, {"cluster", c.seeds.cluster}, {"cv", c.seeds.cv},
                {"mc", c.seeds.mc}, {"redundancy", c.seeds.redundancy}, {"validation", c.seeds.validation}};
  j["workers"] = c.workers;
  return j;
}

PipelineConfig from_json(const json& j) {
  PipelineConfig c;
  const json& me = j.at("mesh");
  auto& b = c.blade;
  b.length = me.at("length");
  b.root_chord = me.at("root_chord");
  b.tip_chord = me.at("tip_chord");
  b.thickness = me.at("thickness");
  b.twist = me.at("twist");
  b.nx = me.at("nx");
  b.ny = me.at("ny");
  b.nz = me.at("nz");
  b.foot_layers = me.at("foot_layers");
  b.axis_y = me.at("axis_y");
  b.axis_z = me.at("axis_z");
  const json& lo = j.at("loading");
  auto& l = c.loading;
  l.cycle_time = lo.at("cycle_time");
  l.num_steps = lo.at("num_steps");
  l.omega_max = lo.at("omega_max");
  l.density = lo.at("density");
  l.pressure_max = lo.at("pressure_max");
  l.pressure_ambient = lo.at("pressure_ambient");
  l.omega_profile = lo.at("omega_profile").get<std::vector<double>>();
  const json& ma = j.at("material");
  auto& m = c.material;
  m.reference_temperature = ma.at("reference_temperature");
  m.c11 = table_from_json(ma.at("c11"), "material.c11");
  m.c12 = table_from_json(ma.at("c12"), "material.c12");
  m.c44 = table_from_json(ma.at("c44"), "material.c44");
  m.alpha = table_from_json(ma.at("alpha"), "material.alpha");
  m.octahedral = family_from_json(ma.at("octahedral"), "material.octahedral");
  m.cubic = family_from_json(ma.at("cubic"), "material.cubic");
  const json& th = j.at("thermal");
  auto& t = c.thermal;
  t.reference_temperature = th.at("reference_temperature");
  t.melting_temperature = th.at("melting_temperature");
  t.std_dev = th.at("std_dev");
  t.correlation_length = th.at("correlation_length");
  t.num_modes = th.at("num_modes");
  t.t_leading = th.at("t_leading");
  t.t_trailing = th.at("t_trailing");
  t.t_root = th.at("t_root");
  t.root_decay = th.at("root_decay");
  t.span_bump = th.at("span_bump");
  t.perturbation_max = th.at("perturbation_max");
  t.perturbation_radius = th.at("perturbation_radius");
  t.perturbation_span = th.at("perturbation_span");
  c.loading.reference_temperature = t.reference_temperature;
  const json& so = j.at("solver");
  c.solver.relative_tolerance = so.at("relative_tolerance");
  c.solver.absolute_tolerance = so.at("absolute_tolerance");
  c.solver.max_iterations = so.at("max_iterations");
  c.solver.max_bisections = so.at("max_bisections");
  c.doe.maxproj_points = j.at("doe").at("maxproj_points");
  c.doe.sobol_points = j.at("doe").at("sobol_points");
  c.doe.maxproj_iterations = j.at("doe").at("maxproj_iterations");
  c.cluster.clusters = j.at("cluster").at("clusters");
  c.cluster.restarts = j.at("cluster").at("restarts");
  c.cluster.snapshots_per_cluster = j.at("cluster").at("snapshots_per_cluster");
  c.rom.primal_tolerance = j.at("rom").at("primal_tolerance");
  c.rom.dual_tolerance = j.at("rom").at("dual_tolerance");
  c.rom.ecm_tolerance = j.at("rom").at("ecm_tolerance");
  const json& cl = j.at("classifier");
  c.classifier.relevance_threshold = cl.at("relevance_threshold");
  c.classifier.features = cl.at("features");
  c.classifier.redundancy_pairs = cl.at("redundancy_pairs");
  c.classifier.folds = cl.at("folds");
  c.classifier.c_grid = cl.at("c_grid").get<std::vector<double>>();
  c.classifier.l1_grid = cl.at("l1_grid").get<std::vector<double>>();
  c.gappy.folds = j.at("gappy").at("folds");
  c.gappy.grid_size = j.at("gappy").at("grid_size");
  c.uq.draws = j.at("uq").at("draws");
  c.uq.zone_fraction = j.at("uq").at("zone_fraction");
  c.uq.kde_points = j.at("uq").at("kde_points");
  c.uq.histogram_bins = j.at("uq").at("histogram_bins");
  c.validation.draws = j.at("validation").at("draws");
  const json& se = j.at("seeds");
  c.seeds.doe = se.at("doe");
  c.seeds.cluster = se.at("cluster");
  c.seeds.cv = se.at("cv");
  c.seeds.mc = se.at("mc");
  c.seeds.redundancy = se.at("redundancy");
  c.seeds.validation = se.at("validation");
  c.workers = j.at("workers");
  return c;
}

// Every key of `patch` must exist in `base`; material tables may switch
// between scalar and object form.
void check_keys(const json& base, const json& patch, const std::string& path) {
  if (!patch.is_object() || !base.is_object()) return;
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string where = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw Error("unknown configuration key '" + where + "'");
    const json& b = base.at(it.key());
    if (b.is_object() && !(b.contains("keys") && b.contains("values"))) check_keys(b, it.value(), where);
  }
}

}  // namespace

MaterialParams default_material() {
  MaterialParams mp;
  const std::vector<double> elastic_keys{0, 293, 1400, 2000};
  mp.c11 = table(elastic_keys, {252e3, 250e3, 200e3, 170e3});
  mp.c12 = table(elastic_keys, {161e3, 160e3, 140e3, 125e3});
  mp.c44 = table(elastic_keys, {131e3, 130e3, 95e3, 80e3});
  mp.alpha = table(elastic_keys, {1.2e-5, 1.2e-5, 1.7e-5, 1.9e-5});
  const std::vector<double> keys{0, 293, 900, 1100, 1200, 1250, 1300, 2000};
  auto family = [&](double r) {
    FamilyParams p;
    p.r0 = table(keys, {r * 350, r * 350, r * 300, r * 180, r * 110, r * 50, r * 15, r * 10});
    p.k_h = table(keys, {900, 900, 700, 500, 350, 250, 150, 100});
    p.n_h = TemperatureTable(3.0);
    p.eps_h = TemperatureTable(1e-5);
    p.c = TemperatureTable(20000.0);
    p.d = TemperatureTable(100.0);
    p.big_m = TemperatureTable(200.0);
    p.m = TemperatureTable(4.0);
    p.q = TemperatureTable(50.0);
    p.b = TemperatureTable(10.0);
    return p;
  };
  mp.octahedral = family(0.85);
  mp.cubic = family(0.85 * 1.3);
  return mp;
}

ThermalParams default_thermal() {
  ThermalParams tp;
  tp.t_root = 350.0;
  tp.t_leading = 1100.0;
  tp.t_trailing = 1200.0;
  tp.span_bump = 40.0;
  return tp;
}

PipelineConfig default_config() {
  PipelineConfig c;
  c.blade.nx = 8;
  c.blade.ny = 3;
  c.blade.nz = 24;
  c.blade.foot_layers = 3;
  c.material = default_material();
  c.thermal = default_thermal();
  return c;
}

void PipelineConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw Error(std::string("configuration: ") + name + " must be > 0");
  };
  positive(rom.primal_tolerance, "rom.primal_tolerance");
  positive(rom.dual_tolerance, "rom.dual_tolerance");
  positive(rom.ecm_tolerance, "rom.ecm_tolerance");
  positive(solver.relative_tolerance, "solver.relative_tolerance");
  positive(solver.absolute_tolerance, "solver.absolute_tolerance");
  positive(classifier.relevance_threshold, "classifier.relevance_threshold");
  if (cluster.clusters < 1) throw Error("configuration: cluster.clusters must be >= 1");
  if (cluster.snapshots_per_cluster < 1) throw Error("configuration: cluster.snapshots_per_cluster must be >= 1");
  const int need = cluster.clusters * cluster.snapshots_per_cluster;
  if (doe.maxproj_points < need || doe.sobol_points < need)
    throw Error("configuration: DoE sizes must be >= clusters x snapshots_per_cluster = " + std::to_string(need));
  if (classifier.features < 1) throw Error("configuration: classifier.features must be >= 1");
  if (classifier.folds < 2 || gappy.folds < 2) throw Error("configuration: CV folds must be >= 2");
  if (uq.zone_fraction <= 0.0 || uq.zone_fraction > 1.0) throw Error("configuration: uq.zone_fraction must be in (0, 1]");
  if (workers < 1) throw Error("configuration: workers must be >= 1");
}

PipelineConfig parse_config(const std::string& json_text) {
  json base = to_json(default_config());
  json patch;
  try {
    patch = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("configuration is not valid JSON: ") + e.what());
  }
  if (!patch.is_object()) throw Error("configuration must be a JSON object");
  check_keys(base, patch, "");
  base.merge_patch(patch);
  PipelineConfig c;
  try {
    c = from_json(base);
  } catch (const json::exception& e) {
    throw Error(std::string("configuration has a value of the wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  if (path.empty()) {
    PipelineConfig c = default_config();
    c.validate();
    return c;
  }
  if (!std::filesystem::exists(path)) throw Error("configuration file not found: " + path.string());
  return parse_config(read_text(path));
}

std::string config_to_json(const PipelineConfig& cfg) { return to_json(cfg).dump(2); }

std::uint64_t config_hash(const PipelineConfig& cfg, const std::vector<std::string>& keys) {
  const json j = to_json(cfg);
  std::string text;
  for (const auto& k : keys) {
    const json* node = &j;
    std::size_t start = 0;
    while (true) {
      const auto dot = k.find('.', start);
      node = &node->at(k.substr(start, dot - start));
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    text += k + "=" + node->dump() + ";";
  }
  return fnv1a(text);
}

}  // namespace romnet
