// milestone-kit: config-driven front end.
// Exit codes: 0 ok, 1 usage or config, 2 numerical or input failure, 3 validation failure.
#include "milestone/config.hpp"
#include "milestone/io.hpp"
#include "milestone/mfpt.hpp"
#include "milestone/validate.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <optional>

namespace fs = std::filesystem;
using namespace milestone;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kFailure = 2, kInvalid = 3 };

// Stream ids per command, so that `mfpt` reproduces the statistics of `sample`.
constexpr std::uint64_t kSampleStream = 1;
constexpr std::uint64_t kEmpiricalStream = 2;
constexpr std::uint64_t kKernelStream = 3;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
  bool force = false;
};

/// Raised for artifacts that cannot be produced from the given inputs.
struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Run {
 public:
  Run(const Flags& flags, std::string command) : command_(std::move(command)), start_(std::chrono::system_clock::now()) {
    if (!fs::exists(flags.config)) throw InvalidArgument("config file '" + flags.config + "' does not exist");
    config_ = load_config(flags.config);
    if (flags.seed) {
      config_.seed = *flags.seed;
      config_.resolved["seed"] = *flags.seed;
    }
    if (flags.workers) {
      if (*flags.workers < 1) throw InvalidArgument("--workers must be positive");
      config_.workers = *flags.workers;
      config_.resolved["workers"] = *flags.workers;
    }
    out_ = flags.out.empty() ? fs::path(config_.output) : fs::path(flags.out);
    force_ = flags.force;
    if (fs::exists(out_) && !fs::is_directory(out_)) throw InvalidArgument("output '" + out_.string() + "' is not a directory");
    if (fs::exists(out_) && !fs::is_empty(out_) && !force_) {
      throw InvalidArgument("output directory '" + out_.string() + "' is not empty (use --force to overwrite)");
    }
    fs::create_directories(out_);
  }

  const Config& config() const { return config_; }
  bool force() const { return force_; }
  fs::path path(const std::string& name) const { return out_ / name; }

  /// Report header shared by every JSON artifact.
  json header() const {
    return {{"version", version()}, {"config_hash", config_.hash()}, {"seed", config_.seed}, {"command", command_}};
  }

  void report(const std::string& name, json body) const {
    const json h = header();
    for (const auto& [k, v] : h.items()) body[k] = v;
    write_json(path(name), body);
  }

  /// Timestamps and host-dependent facts live here, outside the reproducible reports.
  void metadata(int exit_code) const {
    const auto now = std::chrono::system_clock::now();
    const auto to_iso = [](std::chrono::system_clock::time_point t) {
      const std::time_t tt = std::chrono::system_clock::to_time_t(t);
      char buf[32];
      std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
      return std::string(buf);
    };
    write_json(path("metadata.json"), {{"command", command_},
                                       {"started", to_iso(start_)},
                                       {"finished", to_iso(now)},
                                       {"elapsed_seconds", std::chrono::duration<double>(now - start_).count()},
                                       {"workers", config_.workers},
                                       {"exit_code", exit_code},
                                       {"config", config_.resolved}});
  }

 private:
  std::string command_;
  Config config_;
  fs::path out_;
  bool force_ = false;
  std::chrono::system_clock::time_point start_;
};

SamplingOptions sampling_options(const Config& c) {
  SamplingOptions o;
  o.batches = c.sampling.batches;
  o.reservoir_cap = c.sampling.reservoir_cap;
  o.workers = c.workers;
  o.max_time = c.sampling.max_time;
  o.crossing = c.sampling.crossing;
  return o;
}

struct Sampled {
  TransitionStats stats;
  std::optional<CoarseChain> chain;
};

Sampled sample(const Config& c, const Pipeline& p) {
  RngStream rng(c.seed, kSampleStream);
  Sampled s;
  if (c.sampling.mode == SamplingMode::long_run) {
    s.chain.emplace();
    s.stats = estimate_long(p.model, *p.milestones, c.sampling.total_time, c.sampling.dt, rng, sampling_options(c), &*s.chain);
  } else {
    s.stats = estimate_cells(p.model, *p.milestones, c.sampling.per_cell_transitions, c.sampling.dt, rng, sampling_options(c));
  }
  return s;
}

KernelEstimate kernel(const Config& c, const Pipeline& p, const TransitionStats* hits) {
  KernelOptions o;
  o.bins = c.sampling.bins;
  o.start = c.sampling.start;
  o.batches = c.sampling.batches;
  o.workers = c.workers;
  o.max_time = c.sampling.max_time;
  o.crossing = c.sampling.crossing;
  o.hits = hits;
  RngStream rng(c.seed, kKernelStream);
  return estimate_kernel(p.model, *p.milestones, p.meshes, c.sampling.kernel_samples_per_bin, c.sampling.dt, rng, o);
}

json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(finite_or_null(v[i]));
  return a;
}

std::string mode_name(SamplingMode m) { return m == SamplingMode::long_run ? "long" : "cells"; }

int cmd_committor(Run& run) {
  const Config& c = run.config();
  const Pipeline p = build_pipeline(c, false);
  const CommittorField& q = *p.committor;
  write_grid_binary(run.path("q_minus.bin"), *q.values);
  write_grid_csv(run.path("q_minus.csv"), *q.values, "q_minus");
  write_grid_binary(run.path("density.bin"), q.density->field);

  std::ofstream z_table(run.path("Z.csv"));
  if (!z_table) throw Failure("cannot write Z.csv");
  z_table.precision(17);
  z_table << "index,level,Z,length\n";
  json levels = json::array();
  double z_min = INFINITY, z_max = -INFINITY, z_sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < c.milestones.levels.size(); ++i) {
    const double level = c.milestones.levels[i];
    if (!(level > 0.0 && level < 1.0)) continue;
    const LevelSetMesh mesh = extract_level_set(q, level, c.milestones.require_connected);
    const MilestoneDensity rho = milestone_density(p.model, *q.density, q, mesh);
    z_table << i << ',' << level << ',' << rho.normalization << ',' << mesh.length() << '\n';
    std::ofstream m(run.path("milestone_" + std::to_string(i) + ".csv"));
    if (!m) throw Failure("cannot write milestone table");
    m.precision(17);
    m << (c.dim() == 1 ? "x,arc_length,rho\n" : "x,y,arc_length,rho\n");
    for (std::size_t k = 0; k < mesh.points.size(); ++k) {
      for (Eigen::Index a = 0; a < mesh.points[k].size(); ++a) m << mesh.points[k][a] << ',';
      m << mesh.arc_length[k] << ',' << rho.values[k] << '\n';
    }
    levels.push_back({{"index", i}, {"level", level}, {"Z", rho.normalization}, {"length", mesh.length()},
                      {"closed", mesh.closed}});
    z_min = std::min(z_min, rho.normalization);
    z_max = std::max(z_max, rho.normalization);
    z_sum += rho.normalization;
    ++count;
  }
  const double mean = count ? z_sum / count : 0.0;
  run.report("committor.json", {{"model", c.resolved["model"]},
                                {"grid_nodes", c.grid_nodes},
                                {"levels", levels},
                                {"Z_mean", finite_or_null(mean)},
                                {"Z_relative_spread", count ? finite_or_null(std::max(z_max - mean, mean - z_min) / mean) : json()},
                                {"density_normalization", q.density->normalization}});
  std::printf("committor: %d milestone tables, Z mean %.6g\n", count, mean);
  return kOk;
}

int cmd_sample(Run& run) {
  const Config& c = run.config();
  const Pipeline p = build_pipeline(c);
  const Sampled s = sample(c, p);
  json body = stats_json(s.stats);
  body["mode"] = mode_name(c.sampling.mode);
  body["dt"] = c.sampling.dt;
  body["crossing"] = c.resolved["sampling"]["crossing"];
  body["levels"] = c.milestones.levels;
  std::vector<int> thin = s.stats.undersampled(static_cast<double>(c.sampling.min_count));
  body["undersampled"] = thin;
  run.report("stats.json", body);
  for (int i = 0; i < s.stats.size(); ++i) {
    std::vector<double> arc;
    for (const Point& x : s.stats.hits[static_cast<std::size_t>(i)].samples) {
      arc.push_back(p.meshes.empty() ? 0.0 : p.meshes[static_cast<std::size_t>(i)].arc_coordinate(x));
    }
    std::sort(arc.begin(), arc.end());
    write_hits_csv(run.path("hits_" + std::to_string(i) + ".csv"), arc);
  }
  if (s.chain) {
    const MemoryReport m = memory_diagnostic(*s.chain, s.stats.size(), c.sampling.min_count);
    json cells = json::array();
    for (const auto& cell : m.cells) {
      cells.push_back({{"previous", cell.previous}, {"current", cell.current}, {"count", cell.count},
                       {"chi_square", cell.chi_square}, {"dof", cell.dof}, {"p_value", cell.p_value},
                       {"excluded", cell.excluded}, {"rejected", cell.rejected}});
    }
    run.report("memory.json", {{"alpha", m.alpha}, {"tested", m.tested}, {"rejected", m.rejected},
                               {"max_lag_z", m.max_lag_z}, {"cells", cells}});
  }
  std::printf("sample (%s): %.0f transitions over %d milestones\n", mode_name(c.sampling.mode).c_str(),
              s.stats.counts.sum(), s.stats.size());
  if (!thin.empty()) {
    std::string list;
    for (int i : thin) list += (list.empty() ? "" : ", ") + std::to_string(i);
    if (!run.force()) throw Failure("under-sampled milestones (fewer than " + std::to_string(c.sampling.min_count) +
                                    " departures): " + list + " (use --force to accept)");
    std::fprintf(stderr, "warning: under-sampled milestones: %s\n", list.c_str());
  }
  return kOk;
}

int cmd_exact(Run& run) {
  const Config& c = run.config();
  const Pipeline p = build_pipeline(c);
  std::optional<Sampled> s;
  if (c.sampling.start == StartMode::empirical) s = sample(c, p);
  const KernelEstimate k = kernel(c, p, s ? &s->stats : nullptr);
  for (int i = 0; i < p.milestones->size(); ++i) write_kernel_csv(run.path("kernel_" + std::to_string(i) + ".csv"), k, i);
  const ExactSolution ex = solve_exact(k, c.mfpt.target);
  const auto mu = kernel_hitting_weights(k);
  json field = json::array(), weights = json::array();
  for (const auto& v : ex.field.values) field.push_back(vec(v));
  for (const auto& v : mu) weights.push_back(vec(v));
  run.report("exact.json", {{"target", c.mfpt.target},
                            {"T_field", field},
                            {"mu", weights},
                            {"reduced", to_json(ex.reduced)},
                            {"fixed_point_converged", ex.field.iterative},
                            {"censored", k.censored},
                            {"samples_per_bin", c.sampling.kernel_samples_per_bin},
                            {"dt", c.sampling.dt}});
  std::printf("exact: T_%d,%d = %.6g +- %.3g\n", c.mfpt.source, c.mfpt.target, ex.reduced.values[c.mfpt.source],
              ex.reduced.stderr_[c.mfpt.source]);
  return kOk;
}

int cmd_mfpt(Run& run) {
  const Config& c = run.config();
  const Pipeline p = build_pipeline(c);
  const int a = c.mfpt.source, b = c.mfpt.target;
  std::map<std::string, std::pair<double, double>> values;
  json methods;
  std::optional<Sampled> s;
  auto sampled = [&]() -> const Sampled& {
    if (!s) s = sample(c, p);
    return *s;
  };
  auto entry = [&](const std::string& name, double v, double se, double dt, json extra = json::object()) {
    values[name] = {v, se};
    extra["value"] = finite_or_null(v);
    extra["stderr"] = finite_or_null(se);
    extra["inputs_hash"] = hex64(fnv1a(c.hash() + "/" + name));
    extra["seed"] = c.seed;
    extra["dt"] = finite_or_null(dt);
    methods[name] = extra;
  };
  for (const auto& name : c.mfpt.methods) {
    if (name == "optimal") {
      const MFPTSolution sol = solve_optimal(sampled().stats, b);
      json extra = {{"mode", mode_name(c.sampling.mode)}, {"all", to_json(sol)}};
      if (c.milestones.source == LevelSource::committor) {
        const MFPTSolution iso = solve_optimal(analytic_q(c.milestones.levels), sampled().stats, b);
        extra["analytic_q"] = {{"value", iso.values[a]}, {"stderr", iso.stderr_[a]}};
      }
      entry(name, sol.values[a], sol.stderr_[a], c.sampling.dt, extra);
    } else if (name == "exact") {
      const KernelEstimate k = kernel(c, p, c.sampling.start == StartMode::empirical ? &sampled().stats : nullptr);
      const ExactSolution ex = solve_exact(k, b);
      entry(name, ex.reduced.values[a], ex.reduced.stderr_[a], c.sampling.dt,
            {{"bins", c.sampling.bins}, {"samples_per_bin", c.sampling.kernel_samples_per_bin}, {"censored", k.censored}});
    } else if (name == "empirical") {
      EmpiricalOptions o;
      o.replicas = c.mfpt.replicas;
      o.workers = c.workers;
      o.crossing = c.sampling.crossing;
      RngStream rng(c.seed, kEmpiricalStream);
      const EmpiricalMFPT e =
          mfpt_empirical(p.model, restrict(*p.milestones, {std::min(a, b), std::max(a, b)}), c.mfpt.empirical_transitions,
                         c.sampling.dt, rng, o);
      const bool forward = a < b;
      entry(name, forward ? e.forward : e.backward, forward ? e.forward_stderr : e.backward_stderr, c.sampling.dt,
            {{"transitions", e.transitions}, {"replicas", c.mfpt.replicas}});
    } else if (name == "oracle") {
      if (c.dim() != 1) throw Failure("mfpt: the quadrature oracle needs a 1D model");
      const LevelFunction& f = p.milestones->level_function();
      const double xa = find_point_on_level(f, c.milestones.levels[static_cast<std::size_t>(a)], c.box)[0];
      const double xb = find_point_on_level(f, c.milestones.levels[static_cast<std::size_t>(b)], c.box)[0];
      entry(name, mfpt_quadrature_1d(p.model, xa, xb), 0.0, NAN, {{"points", {xa, xb}}});
    }
  }
  json z = json::object();
  for (auto i = values.begin(); i != values.end(); ++i) {
    for (auto j = std::next(i); j != values.end(); ++j) {
      z[i->first + "-" + j->first] =
          finite_or_null(z_score(i->second.first, i->second.second, j->second.first, j->second.second));
    }
  }
  run.report("mfpt_report.json", {{"source", a}, {"target", b}, {"methods", methods}, {"z_scores", z}});
  for (const auto& [name, v] : values) std::printf("%-10s T_%d,%d = %.6g +- %.3g\n", name.c_str(), a, b, v.first, v.second);
  return kOk;
}

int cmd_validate(Run& run) {
  const Config& c = run.config();
  ValidationOptions o;
  o.seed = c.seed;
  o.workers = c.workers;
  o.budget_scale = c.validation.budget_scale;
  o.criteria = c.validation.criteria;
  std::vector<std::string> failed;
  const auto results = run_validation(o, [&](const CriterionResult& r) {
    std::printf("%-4s %s  %s\n", r.id.c_str(), r.passed ? "PASS" : "FAIL", r.summary.c_str());
    std::fflush(stdout);
    if (!r.passed) failed.push_back(r.id);
  });
  json list = json::array();
  for (const auto& r : results) list.push_back(to_json(r));
  run.report("validation.json", {{"budget_scale", o.budget_scale}, {"criteria", list}, {"passed", failed.empty()}});
  if (!failed.empty()) {
    std::string names;
    for (const auto& id : failed) names += (names.empty() ? "" : ", ") + id;
    std::fprintf(stderr, "validation failed: %s\n", names.c_str());
    return kInvalid;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Milestoning toolkit for elliptic diffusions"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);
  Flags flags;
  std::map<std::string, int (*)(Run&)> commands{{"committor", cmd_committor}, {"sample", cmd_sample},
                                                {"mfpt", cmd_mfpt},           {"validate", cmd_validate},
                                                {"exact", cmd_exact}};
  const std::map<std::string, std::string> help{
      {"committor", "Solve the backward committor; write fields, milestone tables and Z"},
      {"sample", "Estimate transition probabilities and residence times"},
      {"mfpt", "Mean first passage times by the configured methods"},
      {"validate", "Run the acceptance criteria"},
      {"exact", "Estimate the binned hitting kernel and solve the exact equation"}};
  for (const auto& [name, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("-c,--config", flags.config, "JSON configuration")->required();
    sub->add_option("--seed", flags.seed, "Override the configured seed");
    sub->add_option("--workers", flags.workers, "Override the worker count");
    sub->add_option("--out", flags.out, "Output directory (default: config 'output')");
    sub->add_flag("--force", flags.force, "Overwrite a non-empty output directory; accept under-sampling");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  std::optional<Run> run;
  try {
    run.emplace(flags, name);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
  int code = kOk;
  try {
    code = commands.at(name)(*run);
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    code = kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    code = kFailure;
  }
  try {
    run->metadata(code);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "warning: %s\n", e.what());
  }
  return code;
}
