#include "milestone/config.hpp"

#include "milestone/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace milestone {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw InvalidArgument("config: '" + key + "' " + why);
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad(where, "must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) bad(where.empty() ? k : where + "." + k, "is not a recognised key");
  }
}

template <typename T>
T get_or(const json& j, const char* key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(where + key, "has the wrong type");
  }
}

double positive(double v, const std::string& key) {
  if (!(v > 0.0) || !std::isfinite(v)) bad(key, "must be positive");
  return v;
}

Point point_of(const json& j, int dim, const std::string& key) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) bad(key, "must be an array of " + std::to_string(dim) + " numbers");
  Point p(dim);
  for (int a = 0; a < dim; ++a) {
    if (!j[static_cast<std::size_t>(a)].is_number()) bad(key, "must hold numbers");
    p[a] = j[static_cast<std::size_t>(a)].get<double>();
  }
  return p;
}

json point_json(const Point& p) {
  json a = json::array();
  for (Eigen::Index i = 0; i < p.size(); ++i) a.push_back(p[i]);
  return a;
}

Region region_of(const json& j, int dim, const std::string& key) {
  if (j.contains("ball")) {
    check_keys(j["ball"], key + ".ball", {"center", "radius"});
    return Region::ball(point_of(j["ball"].value("center", json()), dim, key + ".ball.center"),
                        positive(get_or<double>(j["ball"], "radius", key + ".ball.", 0.0), key + ".ball.radius"));
  }
  if (j.contains("halfspace")) {
    check_keys(j["halfspace"], key + ".halfspace", {"normal", "offset"});
    return Region::halfspace(point_of(j["halfspace"].value("normal", json()), dim, key + ".halfspace.normal"),
                             get_or<double>(j["halfspace"], "offset", key + ".halfspace.", 0.0));
  }
  bad(key, "needs 'ball' or 'halfspace'");
}

json region_json(const Region& r) {
  if (r.kind == Region::Kind::ball) return {{"ball", {{"center", point_json(r.center)}, {"radius", r.radius}}}};
  return {{"halfspace", {{"normal", point_json(r.normal)}, {"offset", r.offset}}}};
}

/// A on the left: the reactant well at x = -1 (or x <= -2 for OU).
std::pair<Region, Region> default_regions(const std::string& model, int dim) {
  if (model == "ou_1d") return {Region::halfspace(make_point(1.0), -2.0), Region::halfspace(make_point(-1.0), -2.0)};
  if (dim == 1) return {Region::ball(make_point(-1.0), 0.2), Region::ball(make_point(1.0), 0.2)};
  return {Region::ball(make_point(-1.0, 0.0), 0.2), Region::ball(make_point(1.0, 0.0), 0.2)};
}

std::vector<double> levels_of(const json& j, const std::string& key) {
  std::vector<double> z;
  if (j.is_array()) {
    for (const auto& v : j) {
      if (!v.is_number()) bad(key, "must hold numbers");
      z.push_back(v.get<double>());
    }
  } else if (j.is_object()) {
    check_keys(j, key, {"count", "spacing", "range"});
    const int n = get_or<int>(j, "count", key + ".", 0);
    if (n < 2) bad(key + ".count", "must be at least 2");
    const std::string spacing = get_or<std::string>(j, "spacing", key + ".", "uniform_in_f");
    if (spacing != "uniform_in_f") bad(key + ".spacing", "must be 'uniform_in_f'");
    if (!j.contains("range") || !j["range"].is_array() || j["range"].size() != 2) bad(key + ".range", "must be [high, low]");
    const double hi = std::max(j["range"][0].get<double>(), j["range"][1].get<double>());
    const double lo = std::min(j["range"][0].get<double>(), j["range"][1].get<double>());
    for (int i = 0; i < n; ++i) z.push_back(hi - (hi - lo) * i / (n - 1));
  } else {
    bad(key, "must be a list or {count, spacing, range}");
  }
  if (z.size() < 2) bad(key, "needs at least two levels");
  for (std::size_t i = 1; i < z.size(); ++i) {
    if (!(z[i] < z[i - 1])) bad(key, "must be strictly decreasing");
  }
  return z;
}

}  // namespace

std::string Config::hash() const {
  json h = resolved;
  h.erase("workers");
  h.erase("output");
  return hex64(fnv1a(h.dump()));
}

Config parse_config(const json& input, const std::filesystem::path& base) {
  check_keys(input, "", {"model", "grid", "reactant", "product", "committor", "milestones", "sampling", "mfpt", "validation",
                         "seed", "workers", "output"});
  Config c;
  json r;

  const json model = input.value("model", json::object());
  check_keys(model, "model", {"name", "beta", "curl", "box"});
  c.model = get_or<std::string>(model, "name", "model.", "double_well_2d");
  if (c.model != "ou_1d" && c.model != "double_well_1d" && c.model != "double_well_2d" && c.model != "nonrev_2d") {
    bad("model.name", "must be one of ou_1d, double_well_1d, double_well_2d, nonrev_2d");
  }
  c.beta = positive(get_or<double>(model, "beta", "model.", 1.0), "model.beta");
  c.curl = get_or<double>(model, "curl", "model.", 0.0);
  if (c.curl != 0.0 && c.model != "nonrev_2d") bad("model.curl", "applies to nonrev_2d only");
  c.box = default_box(c.model, c.beta);
  const int dim = c.box.dim();
  if (model.contains("box")) {
    const json& b = model["box"];
    if (!b.is_object() || !b.contains("lower") || !b.contains("upper")) bad("model.box", "must be {lower, upper}");
    c.box = Box{point_of(b["lower"], dim, "model.box.lower"), point_of(b["upper"], dim, "model.box.upper")};
    if (!((c.box.upper - c.box.lower).minCoeff() > 0.0)) bad("model.box", "is empty");
  }
  r["model"] = {{"name", c.model},
                {"beta", c.beta},
                {"curl", c.curl},
                {"box", {{"lower", point_json(c.box.lower)}, {"upper", point_json(c.box.upper)}}}};

  const json grid = input.value("grid", json::object());
  check_keys(grid, "grid", {"nodes"});
  c.grid_nodes = get_or<int>(grid, "nodes", "grid.", dim == 1 ? 2001 : 201);
  if (c.grid_nodes < Grid::kMinNodes) bad("grid.nodes", "must be at least 32");
  r["grid"] = {{"nodes", c.grid_nodes}};

  std::tie(c.reactant, c.product) = default_regions(c.model, dim);
  if (input.contains("reactant")) c.reactant = region_of(input["reactant"], dim, "reactant");
  if (input.contains("product")) c.product = region_of(input["product"], dim, "product");
  r["reactant"] = region_json(c.reactant);
  r["product"] = region_json(c.product);

  const json committor = input.value("committor", json::object());
  check_keys(committor, "committor", {"advection"});
  const std::string adv = get_or<std::string>(committor, "advection", "committor.", "centered");
  if (adv == "centered") c.advection = Advection::centered;
  else if (adv == "upwind") c.advection = Advection::upwind;
  else bad("committor.advection", "must be 'centered' or 'upwind'");
  r["committor"] = {{"advection", adv}};

  const json ms = input.value("milestones", json::object());
  check_keys(ms, "milestones", {"source", "levels", "direction", "offset", "curve", "connected"});
  auto& m = c.milestones;
  const std::string source = get_or<std::string>(ms, "source", "milestones.", "committor");
  if (source == "linear") m.source = LevelSource::linear;
  else if (source == "committor") m.source = LevelSource::committor;
  else if (source == "curve") m.source = LevelSource::curve;
  else bad("milestones.source", "must be linear, committor or curve");
  // Levels are only needed by commands that build milestones; see build_pipeline.
  if (ms.contains("levels")) m.levels = levels_of(ms["levels"], "milestones.levels");
  if (!m.levels.empty() && m.source != LevelSource::linear) {
    if (!(m.levels.front() < 1.0 && m.levels.back() > 0.0)) bad("milestones.levels", "must lie strictly inside (0, 1)");
  }
  m.require_connected = get_or<bool>(ms, "connected", "milestones.", true);
  json rm = {{"source", source}, {"levels", m.levels}, {"connected", m.require_connected}};
  if (m.source == LevelSource::linear) {
    m.direction = ms.contains("direction") ? point_of(ms["direction"], dim, "milestones.direction")
                                           : Point(Point::Unit(dim, 0));
    if (m.direction.norm() == 0.0) bad("milestones.direction", "must be non-zero");
    m.offset = get_or<double>(ms, "offset", "milestones.", 0.0);
    rm["direction"] = point_json(m.direction);
    rm["offset"] = m.offset;
  }
  if (m.source == LevelSource::curve) {
    if (!ms.contains("curve")) bad("milestones.curve", "is required when source is 'curve'");
    const json& cv = ms["curve"];
    check_keys(cv, "milestones.curve", {"file", "points", "samples", "delta", "rescale"});
    m.curve_samples = get_or<int>(cv, "samples", "milestones.curve.", 0);
    if (!cv.contains("delta")) bad("milestones.curve.delta", "is required");
    m.delta = positive(get_or<double>(cv, "delta", "milestones.curve.", 0.0), "milestones.curve.delta");
    Curve curve = [&] {
      if (cv.contains("file")) {
        std::filesystem::path file = cv["file"].get<std::string>();
        if (file.is_relative()) file = base / file;
        return read_curve_csv(file, dim, m.curve_samples);
      }
      if (!cv.contains("points") || !cv["points"].is_array()) bad("milestones.curve", "needs 'file' or 'points'");
      std::vector<Point> pts;
      for (const auto& p : cv["points"]) pts.push_back(point_of(p, dim, "milestones.curve.points"));
      return Curve::from_points(pts, m.curve_samples);
    }();
    m.curve_points = curve.points();
    json rescale = cv.value("rescale", json{{"kind", "identity"}});
    if (rescale.is_string()) rescale = {{"kind", rescale}};
    check_keys(rescale, "milestones.curve.rescale", {"kind", "slope", "s", "q"});
    const std::string kind = get_or<std::string>(rescale, "kind", "milestones.curve.rescale.", "identity");
    if (kind == "identity") m.rescale = Rescale::identity();
    else if (kind == "logistic") m.rescale = Rescale::logistic(get_or<double>(rescale, "slope", "milestones.curve.rescale.", 0.0));
    else if (kind == "table")
      m.rescale = Rescale::table(get_or<std::vector<double>>(rescale, "s", "milestones.curve.rescale.", {}),
                                 get_or<std::vector<double>>(rescale, "q", "milestones.curve.rescale.", {}));
    else bad("milestones.curve.rescale.kind", "must be identity, logistic or table");
    json pts = json::array();
    for (const auto& p : m.curve_points) pts.push_back(point_json(p));
    rm["curve"] = {{"points", pts}, {"delta", m.delta}, {"rescale", rescale}};
  }
  r["milestones"] = rm;

  const json sm = input.value("sampling", json::object());
  check_keys(sm, "sampling", {"mode", "total_time", "per_cell_transitions", "dt", "max_time", "batches", "reservoir_cap",
                              "min_count", "crossing", "bins", "kernel_samples_per_bin", "start"});
  auto& s = c.sampling;
  const std::string mode = get_or<std::string>(sm, "mode", "sampling.", "long");
  if (mode == "long") s.mode = SamplingMode::long_run;
  else if (mode == "cells") s.mode = SamplingMode::cells;
  else bad("sampling.mode", "must be 'long' or 'cells'");
  s.total_time = positive(get_or<double>(sm, "total_time", "sampling.", s.total_time), "sampling.total_time");
  s.per_cell_transitions = get_or<long long>(sm, "per_cell_transitions", "sampling.", s.per_cell_transitions);
  if (s.per_cell_transitions < 1) bad("sampling.per_cell_transitions", "must be positive");
  s.dt = positive(get_or<double>(sm, "dt", "sampling.", dim == 1 ? 1e-3 : 5e-4), "sampling.dt");
  s.max_time = positive(get_or<double>(sm, "max_time", "sampling.", s.max_time), "sampling.max_time");
  s.batches = get_or<int>(sm, "batches", "sampling.", s.batches);
  if (s.batches < 2) bad("sampling.batches", "must be at least 2");
  s.reservoir_cap = get_or<std::size_t>(sm, "reservoir_cap", "sampling.", s.reservoir_cap);
  s.min_count = get_or<long long>(sm, "min_count", "sampling.", s.min_count);
  const std::string crossing = get_or<std::string>(sm, "crossing", "sampling.", "sign_change");
  if (crossing == "sign_change") s.crossing = CrossingRule::sign_change;
  else if (crossing == "bridge") s.crossing = CrossingRule::bridge;
  else bad("sampling.crossing", "must be 'sign_change' or 'bridge'");
  s.bins = get_or<int>(sm, "bins", "sampling.", s.bins);
  if (s.bins < 1) bad("sampling.bins", "must be positive");
  s.kernel_samples_per_bin = get_or<long long>(sm, "kernel_samples_per_bin", "sampling.", s.kernel_samples_per_bin);
  const std::string start = get_or<std::string>(sm, "start", "sampling.", "bin_centers");
  if (start == "bin_centers") s.start = StartMode::bin_centers;
  else if (start == "empirical") s.start = StartMode::empirical;
  else bad("sampling.start", "must be 'bin_centers' or 'empirical'");
  r["sampling"] = {{"mode", mode},
                   {"total_time", s.total_time},
                   {"per_cell_transitions", s.per_cell_transitions},
                   {"dt", s.dt},
                   {"max_time", s.max_time},
                   {"batches", s.batches},
                   {"reservoir_cap", s.reservoir_cap},
                   {"min_count", s.min_count},
                   {"crossing", crossing},
                   {"bins", s.bins},
                   {"kernel_samples_per_bin", s.kernel_samples_per_bin},
                   {"start", start}};

  const json mf = input.value("mfpt", json::object());
  check_keys(mf, "mfpt", {"source", "target", "methods", "empirical_transitions", "replicas"});
  auto& t = c.mfpt;
  const int last = static_cast<int>(m.levels.size()) - 1;
  t.source = get_or<int>(mf, "source", "mfpt.", 0);
  t.target = get_or<int>(mf, "target", "mfpt.", std::max(last, 1));
  if (!m.levels.empty()) {
    if (t.source < 0 || t.source > last) bad("mfpt.source", "is not a milestone index");
    if (t.target < 0 || t.target > last) bad("mfpt.target", "is not a milestone index");
  }
  if (t.source == t.target) bad("mfpt.target", "must differ from mfpt.source");
  t.methods = get_or<std::vector<std::string>>(mf, "methods", "mfpt.", t.methods);
  for (const auto& name : t.methods) {
    if (name != "optimal" && name != "exact" && name != "empirical" && name != "oracle") {
      bad("mfpt.methods", "has unknown method '" + name + "'");
    }
  }
  t.empirical_transitions = get_or<long long>(mf, "empirical_transitions", "mfpt.", t.empirical_transitions);
  t.replicas = get_or<int>(mf, "replicas", "mfpt.", t.replicas);
  if (t.replicas < 2) bad("mfpt.replicas", "must be at least 2");
  r["mfpt"] = {{"source", t.source},
               {"target", t.target},
               {"methods", t.methods},
               {"empirical_transitions", t.empirical_transitions},
               {"replicas", t.replicas}};

  const json va = input.value("validation", json::object());
  check_keys(va, "validation", {"budget_scale", "criteria"});
  c.validation.budget_scale = positive(get_or<double>(va, "budget_scale", "validation.", 1.0), "validation.budget_scale");
  c.validation.criteria = get_or<std::vector<std::string>>(va, "criteria", "validation.", {});
  r["validation"] = {{"budget_scale", c.validation.budget_scale}, {"criteria", c.validation.criteria}};

  if (!input.contains("seed")) bad("seed", "is required");
  c.seed = get_or<std::uint64_t>(input, "seed", "", 0);
  c.workers = get_or<int>(input, "workers", "", 1);
  if (c.workers < 1) bad("workers", "must be positive");
  c.output = get_or<std::string>(input, "output", "", "out");
  r["seed"] = c.seed;
  r["workers"] = c.workers;
  r["output"] = c.output;
  c.resolved = std::move(r);
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("config '" + path.string() + "': " + e.what());
  }
  return parse_config(j, path.parent_path());
}

Pipeline build_pipeline(const Config& c, bool milestones) {
  Pipeline p;
  p.model = make_builtin(c.model, c.beta, c.curl, c.box);
  const bool needs_grid = c.milestones.source == LevelSource::committor || !milestones;
  if (needs_grid || c.dim() == 2) {
    p.grid = Grid(c.box, {c.grid_nodes, c.grid_nodes});
    p.density = std::make_shared<const DensityField>(density_for(p.model, *p.grid));
    if (!p.model.reversible) p.model.density = p.density;
  }
  if (needs_grid) {
    p.committor = solve_backward_committor(p.model, p.density, c.reactant, c.product, *p.grid, c.advection);
  }
  if (!milestones) return p;

  const auto& m = c.milestones;
  if (m.levels.empty()) throw InvalidArgument("config: 'milestones.levels' is required");
  switch (m.source) {
    case LevelSource::linear:
      p.milestones.emplace(LevelFunction::linear(m.direction, m.offset), m.levels);
      if (p.grid) {
        const auto field = tabulate(p.milestones->level_function(), *p.grid);
        for (double z : m.levels) p.meshes.push_back(extract_level_set(*field, z, m.require_connected));
      } else {
        const LevelFunction& f = p.milestones->level_function();
        for (double z : m.levels) {
          LevelSetMesh mesh;
          mesh.level = z;
          const Point x = find_point_on_level(f, z, c.box);
          const Point g = f.gradient(x);
          mesh.points = {x};
          mesh.normals = {g / g.norm()};
          mesh.gradient_norm = {g.norm()};
          mesh.arc_length = {0.0};
          p.meshes.push_back(std::move(mesh));
        }
      }
      break;
    case LevelSource::committor:
      p.milestones.emplace(p.committor->level_function(), m.levels);
      for (double z : m.levels) p.meshes.push_back(extract_level_set(*p.committor, z, m.require_connected));
      break;
    case LevelSource::curve: {
      p.curve = Curve::from_points(m.curve_points);
      const auto field = tabulate_smoothed_committor(*p.curve, m.rescale, m.delta, c.box);
      p.milestones.emplace(LevelFunction::from_field(field), m.levels);
      for (double z : m.levels) p.meshes.push_back(extract_level_set(*field, z, m.require_connected));
      break;
    }
  }
  return p;
}

}  // namespace milestone
