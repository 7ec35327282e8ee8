#include "milestone/validate.hpp"

#include "milestone/io.hpp"
#include "milestone/mfpt.hpp"
#include "milestone/surfaces.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>

namespace milestone {

using nlohmann::json;

namespace {

// Tolerances.
constexpr double kStderrs = 3.0;           // agreement in combined standard errors
constexpr double kA2Spread = 0.02;         // relative Z spread at 201^2
constexpr double kA2Refinement = 1.8;      // spread(201) / spread(401)
constexpr double kA3Relative = 0.05;
constexpr double kA6Ks = 0.05;
constexpr double kA7Exact1d = 1e-9;
constexpr double kA8Alpha = 1e-3;
constexpr double kA8LagZ = 4.0;

// Minimum sample sizes.
constexpr long long kA1Transitions = 100000;
constexpr long long kA5Transitions = 10000;
constexpr long long kA6Hits = 10000;
constexpr long long kA8Events = 100000;

// Budgets at scale 1.
constexpr double kA1Time = 1e5;
constexpr long long kA3PerCell = 20000;
constexpr double kA4Time = 1e5;
constexpr long long kA4Empirical = 10000;
constexpr double kA5Time = 1e5;
constexpr long long kA5PerCell = 10000;
constexpr double kA6Time = 3e4;
constexpr long long kA7KernelPerBin = 1500;
constexpr long long kA7KernelPerBin1d = 2000;
constexpr double kA7Time = 1e5;
constexpr double kA9Time = 1e5;

constexpr int kGrid1d = 4001;
constexpr int kGrid2d = 201;

using Clock = std::chrono::steady_clock;

json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(finite_or_null(v[i]));
  return a;
}

std::string fixed(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

std::vector<double> uniform_levels(double high, double low, int count) {
  std::vector<double> z;
  for (int i = 0; i < count; ++i) z.push_back(high - (high - low) * i / (count - 1));
  return z;
}

/// Model, density and backward committor with the wells (or OU tails) as A and B.
struct Landscape {
  DiffusionModel model;
  std::shared_ptr<const DensityField> rho;
  CommittorField q;
};

Landscape landscape(const std::string& name, double beta, double curl, int nodes) {
  DiffusionModel model = make_builtin(name, beta, curl);
  const Grid grid(model.box, {nodes, nodes});
  auto rho = std::make_shared<const DensityField>(density_for(model, grid));
  if (!model.reversible) model.density = rho;
  Region a, b;
  if (name == "ou_1d") {
    a = Region::halfspace(make_point(1.0), -2.0);
    b = Region::halfspace(make_point(-1.0), -2.0);
  } else if (model.dim == 1) {
    a = Region::ball(make_point(-1.0), 0.2);
    b = Region::ball(make_point(1.0), 0.2);
  } else {
    a = Region::ball(make_point(-1.0, 0.0), 0.2);
    b = Region::ball(make_point(1.0, 0.0), 0.2);
  }
  CommittorField q = solve_backward_committor(model, rho, a, b, grid);
  return {std::move(model), std::move(rho), std::move(q)};
}

SamplingOptions bridged(int workers) {
  SamplingOptions o;
  o.crossing = CrossingRule::bridge;
  o.workers = workers;
  return o;
}

double scaled(double budget, double scale) { return budget * scale; }
long long scaled(long long budget, double scale) {
  return std::max<long long>(1, static_cast<long long>(std::llround(static_cast<double>(budget) * scale)));
}

double transitions(const TransitionStats& s) { return s.counts.sum(); }

/// Entries of p_hat outside 3 binomial standard errors of `q`; worst |z| in `worst`.
int p_outliers(const Eigen::MatrixXd& p, const Eigen::MatrixXd& se, const Eigen::MatrixXd& q, double& worst) {
  int bad = 0;
  worst = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double d = std::abs(p(i, j) - q(i, j));
      if (se(i, j) > 0.0) worst = std::max(worst, d / se(i, j));
      if (d > kStderrs * se(i, j) + 1e-12) ++bad;
    }
  }
  return bad;
}

class Suite {
 public:
  explicit Suite(const ValidationOptions& o) : o_(o) {}

  CriterionResult run(const std::string& id) {
    const auto start = Clock::now();
    CriterionResult r;
    r.id = id;
    try {
      if (id == "A1") a1(r);
      else if (id == "A2") a2(r);
      else if (id == "A3") a3(r);
      else if (id == "A4") a4(r);
      else if (id == "A5") a5(r);
      else if (id == "A6") a6(r);
      else if (id == "A7") a7(r);
      else if (id == "A8") a8(r);
      else if (id == "A9") a9(r);
      else if (id == "A10") a10(r);
      else throw InvalidArgument("unknown criterion '" + id + "'");
    } catch (const InvalidArgument&) {
      throw;
    } catch (const std::exception& e) {
      r.passed = false;
      r.summary = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return r;
  }

 private:
  // Isocommittor OU chain shared by A1, A8 and A10.
  struct OuRun {
    std::vector<double> levels{0.8, 0.6, 0.4, 0.2};
    double dt = 0.0;
    TransitionStats stats;
    CoarseChain chain;
  };

  RngStream stream(std::uint64_t criterion, std::uint64_t arm = 0) const {
    return RngStream(o_.seed, criterion).substream(arm);
  }

  OuRun& ou(int which) {
    auto& slot = ou_[which];
    if (slot) return *slot;
    if (!ou_landscape_) ou_landscape_ = landscape("ou_1d", 1.0, 0.0, kGrid1d);
    OuRun run;
    run.dt = which == 0 ? 1e-3 : 5e-4;
    const MilestoneSet set(ou_landscape_->q.level_function(), run.levels);
    RngStream rng = stream(1, static_cast<std::uint64_t>(which));
    run.stats = estimate_long(ou_landscape_->model, set, scaled(kA1Time, o_.budget_scale), run.dt, rng,
                              bridged(o_.workers), which == 0 ? &run.chain : nullptr);
    slot = std::move(run);
    return *slot;
  }

  void a1(CriterionResult& r) {
    bool ok = true;
    std::ostringstream msg;
    for (int which : {0, 1}) {
      const OuRun& run = ou(which);
      const Eigen::MatrixXd q = analytic_q(run.levels);
      double worst = 0.0;
      const int bad = p_outliers(run.stats.p_hat(), run.stats.p_stderr(), q, worst);
      const double n = transitions(run.stats);
      const bool pass = bad == 0 && n >= kA1Transitions;
      ok = ok && pass;
      r.details[which == 0 ? "dt" : "dt_half"] = {{"dt", run.dt},
                                                  {"transitions", n},
                                                  {"entries_outside", bad},
                                                  {"max_abs_z", worst},
                                                  {"p10", run.stats.p_hat()(1, 0)},
                                                  {"p10_stderr", run.stats.p_stderr()(1, 0)},
                                                  {"passed", pass}};
      msg << (which ? ", " : "") << "dt=" << run.dt << ": " << n << " transitions, max |z| " << fixed(worst, 3);
    }
    r.passed = ok;
    r.summary = msg.str();
  }

  void a2(CriterionResult& r) {
    const std::vector<double> levels{0.2, 0.35, 0.5, 0.65, 0.8};
    std::vector<double> spread;
    for (int nodes : {201, 401}) {
      const Landscape l = landscape("double_well_2d", 2.0, 0.0, nodes);
      std::vector<double> z;
      for (double level : levels) z.push_back(surface_integral_Z(l.model, *l.rho, l.q, extract_level_set(l.q, level)));
      double mean = 0.0;
      for (double v : z) mean += v / static_cast<double>(z.size());
      double s = 0.0;
      for (double v : z) s = std::max(s, std::abs(v - mean) / mean);
      spread.push_back(s);
      r.details["Z_" + std::to_string(nodes)] = z;
    }
    const double ratio = spread[0] / spread[1];
    r.details["spread_201"] = spread[0];
    r.details["spread_401"] = spread[1];
    r.details["refinement_ratio"] = ratio;
    r.passed = spread[0] < kA2Spread && ratio >= kA2Refinement;
    r.summary = "spread " + fixed(spread[0], 3) + " at 201^2, " + fixed(spread[1], 3) + " at 401^2 (ratio " +
                fixed(ratio, 3) + ")";
  }

  void a3(CriterionResult& r) {
    const Landscape l = landscape("double_well_1d", 3.0, 0.0, kGrid1d);
    const std::vector<double> levels = uniform_levels(0.9, 0.1, 9);
    const MilestoneSet set(l.q.level_function(), levels);
    const int last = set.last();
    const double x0 = extract_level_set(l.q, levels.front()).points.front()[0];
    const double xn = extract_level_set(l.q, levels.back()).points.front()[0];
    const double oracle = mfpt_quadrature_1d(l.model, x0, xn);
    const Eigen::MatrixXd q = analytic_q(levels);
    double value[2], se[2];
    bool ok = true;
    for (int which : {0, 1}) {
      const double dt = which == 0 ? 1e-3 : 5e-4;
      RngStream rng = stream(3, static_cast<std::uint64_t>(which));
      const TransitionStats st = estimate_cells(l.model, set, scaled(kA3PerCell, o_.budget_scale), dt, rng, bridged(o_.workers));
      const MFPTSolution s = solve_optimal(q, st, last);
      value[which] = s.values[0];
      se[which] = s.stderr_[0];
      const double d = value[which] - oracle;
      const bool pass = std::abs(d) <= kStderrs * se[which] && std::abs(d) <= kA3Relative * oracle;
      ok = ok && pass;
      r.details[which == 0 ? "dt" : "dt_half"] = {
          {"dt", dt}, {"T", value[which]}, {"stderr", se[which]}, {"relative_error", d / oracle}, {"passed", pass}};
    }
    const double d_full = std::abs(value[0] - oracle), d_half = std::abs(value[1] - oracle);
    const bool shrinks = d_half <= d_full + kStderrs * std::hypot(se[0], se[1]);
    r.details["oracle"] = oracle;
    r.details["milestone_points"] = {x0, xn};
    r.details["no_growth_under_halving"] = shrinks;
    r.passed = ok && shrinks;
    r.summary = "T=" + fixed(value[0], 5) + "+-" + fixed(se[0], 2) + " (dt/2: " + fixed(value[1], 5) + "+-" +
                fixed(se[1], 2) + ") vs oracle " + fixed(oracle, 5);
  }

  void a4(CriterionResult& r) {
    const Landscape l = landscape("nonrev_2d", 2.0, 0.5, kGrid2d);
    const std::vector<double> levels = uniform_levels(0.9, 0.1, 5);
    const MilestoneSet set(l.q.level_function(), levels);
    const int last = set.last();
    const double dt = 5e-4;

    RngStream rng_a = stream(4, 0), rng_b = stream(4, 1), rng_c = stream(4, 2);
    const TransitionStats sa = estimate_long(l.model, set, scaled(kA4Time, o_.budget_scale), dt, rng_a, bridged(o_.workers));
    const MFPTSolution a = solve_optimal(analytic_q(levels), sa, last);

    const Curve segment = Curve::from_points({make_point(1.0, 0.0), make_point(-1.0, 0.0)}, 2);
    const MilestoneSet curved = milestones_from_curve(segment, Rescale::identity(), 0.1, levels, l.model.box);
    const TransitionStats sb = estimate_long(l.model, curved, scaled(kA4Time, o_.budget_scale), dt, rng_b, bridged(o_.workers));
    const MFPTSolution b = solve_optimal(sb, last);

    EmpiricalOptions eo;
    eo.crossing = CrossingRule::bridge;
    eo.workers = o_.workers;
    const EmpiricalMFPT c =
        mfpt_empirical(l.model, restrict(set, {0, last}), scaled(kA4Empirical, o_.budget_scale), dt, rng_c, eo);

    const double za = z_score(a.values[0], a.stderr_[0], c.forward, c.forward_stderr);
    const double zb = z_score(b.values[0], b.stderr_[0], c.forward, c.forward_stderr);
    r.details["isocommittor"] = {{"T", a.values[0]}, {"stderr", a.stderr_[0]}, {"z", za}, {"p", to_json(sa.p_hat().diagonal(-1))}};
    r.details["segment_curve"] = {{"T", b.values[0]}, {"stderr", b.stderr_[0]}, {"z", zb}, {"delta", 0.1}};
    r.details["empirical"] = {{"T", c.forward}, {"stderr", c.forward_stderr}, {"transitions", c.transitions}};
    r.passed = std::abs(za) <= kStderrs;
    r.summary = "isocommittor " + fixed(a.values[0]) + "+-" + fixed(a.stderr_[0], 2) + " vs empirical " + fixed(c.forward) +
                "+-" + fixed(c.forward_stderr, 2) + " (z " + fixed(za, 2) + "); segment curve z " + fixed(zb, 3) +
                " (reported only)";
  }

  void a5(CriterionResult& r) {
    const Landscape l = landscape("double_well_1d", 3.0, 0.0, kGrid1d);
    const std::vector<double> levels = uniform_levels(0.9, 0.1, 5);
    const MilestoneSet set(l.q.level_function(), levels);
    const double dt = 1e-3;
    RngStream rl = stream(5, 0), rc = stream(5, 1);
    const TransitionStats lg = estimate_long(l.model, set, scaled(kA5Time, o_.budget_scale), dt, rl, bridged(o_.workers));
    const TransitionStats cl = estimate_cells(l.model, set, scaled(kA5PerCell, o_.budget_scale), dt, rc, bridged(o_.workers));
    const Eigen::MatrixXd pl = lg.p_hat(), pc = cl.p_hat(), sl = lg.p_stderr(), sc = cl.p_stderr();
    const Eigen::VectorXd tl = lg.t_hat(), tc = cl.t_hat(), stl = lg.t_stderr(), stc = cl.t_stderr();
    double worst_p = 0.0, worst_t = 0.0;
    int bad = 0;
    for (int i = 0; i < set.size(); ++i) {
      for (int j = 0; j < set.size(); ++j) {
        const double d = std::abs(pl(i, j) - pc(i, j)), s = std::hypot(sl(i, j), sc(i, j));
        if (s > 0.0) worst_p = std::max(worst_p, d / s);
        if (d > kStderrs * s + 1e-12) ++bad;
      }
      const double d = std::abs(tl[i] - tc[i]), s = std::hypot(stl[i], stc[i]);
      worst_t = std::max(worst_t, d / s);
      if (!(d <= kStderrs * s)) ++bad;
    }
    const double nl = transitions(lg), nc = transitions(cl);
    r.details["long"] = {{"transitions", nl}, {"t", to_json(tl)}, {"t_stderr", to_json(stl)}};
    r.details["cells"] = {{"transitions", nc}, {"t", to_json(tc)}, {"t_stderr", to_json(stc)}};
    r.details["max_abs_z_p"] = worst_p;
    r.details["max_abs_z_t"] = worst_t;
    r.details["entries_outside"] = bad;
    r.passed = bad == 0 && nl >= kA5Transitions && nc >= kA5Transitions;
    r.summary = std::to_string(static_cast<long long>(nl)) + " long / " + std::to_string(static_cast<long long>(nc)) +
                " cell transitions, max |z| p " + fixed(worst_p, 3) + ", t " + fixed(worst_t, 3);
  }

  void a6(CriterionResult& r) {
    const Landscape l = landscape("double_well_2d", 2.0, 0.0, kGrid2d);
    const std::vector<double> levels{0.7, 0.5, 0.3};
    const MilestoneSet set(l.q.level_function(), levels);
    RngStream rng = stream(6);
    const TransitionStats st = estimate_long(l.model, set, scaled(kA6Time, o_.budget_scale), 5e-4, rng, bridged(o_.workers));
    const LevelSetMesh mesh = extract_level_set(l.q, 0.5);
    const MilestoneDensity density = milestone_density(l.model, *l.rho, l.q, mesh);
    std::vector<double> s;
    for (const Point& p : st.hits[1].samples) s.push_back(mesh.arc_coordinate(p));
    std::sort(s.begin(), s.end());
    const double ks = s.empty() ? 1.0 : ks_distance(s, [&](double x) { return density.cdf(x); });
    r.details["hits"] = st.hits[1].seen;
    r.details["retained"] = s.size();
    r.details["ks"] = ks;
    r.details["Z"] = density.normalization;
    r.passed = ks < kA6Ks && static_cast<long long>(st.hits[1].seen) >= kA6Hits;
    r.summary = "KS " + fixed(ks, 3) + " over " + std::to_string(s.size()) + " hits";
  }

  void a7(CriterionResult& r) {
    // 1D: both solvers on the same kernel.
    {
      const Landscape l = landscape("double_well_1d", 3.0, 0.0, kGrid1d);
      const std::vector<double> levels = uniform_levels(0.9, 0.1, 5);
      const MilestoneSet set(l.q.level_function(), levels);
      std::vector<LevelSetMesh> meshes;
      for (double z : levels) meshes.push_back(extract_level_set(l.q, z));
      KernelOptions ko;
      ko.crossing = CrossingRule::bridge;
      ko.workers = o_.workers;
      RngStream rng = stream(7, 0);
      const KernelEstimate k = estimate_kernel(l.model, set, meshes, scaled(kA7KernelPerBin1d, o_.budget_scale), 1e-3, rng, ko);
      const ExactSolution ex = solve_exact(k, set.last(), nullptr, ExactSolver::direct);
      const MFPTSolution op = solve_optimal(k.nu(), k.tau(), set.last());
      const double diff = (ex.reduced.values - op.values).cwiseAbs().maxCoeff();
      const double scale = std::max(1.0, op.values.cwiseAbs().maxCoeff());
      r.details["1d"] = {{"exact", to_json(ex.reduced.values)}, {"optimal", to_json(op.values)}, {"max_abs_difference", diff}};
      r.passed = diff <= kA7Exact1d * scale;
    }
    // 2D: binned exact reduction vs optimal with analytic q.
    const Landscape l = landscape("double_well_2d", 2.0, 0.0, kGrid2d);
    const std::vector<double> levels = uniform_levels(0.9, 0.1, 5);
    const MilestoneSet set(l.q.level_function(), levels);
    const int last = set.last();
    std::vector<LevelSetMesh> meshes;
    for (double z : levels) meshes.push_back(extract_level_set(l.q, z));
    KernelOptions ko;
    ko.bins = 20;
    ko.crossing = CrossingRule::bridge;
    ko.workers = o_.workers;
    RngStream rk = stream(7, 1), rl = stream(7, 2);
    const KernelEstimate k = estimate_kernel(l.model, set, meshes, scaled(kA7KernelPerBin, o_.budget_scale), 5e-4, rk, ko);
    const ExactSolution ex = solve_exact(k, last);
    const TransitionStats st = estimate_long(l.model, set, scaled(kA7Time, o_.budget_scale), 5e-4, rl, bridged(o_.workers));
    const MFPTSolution op = solve_optimal(analytic_q(levels), st, last);
    const double z = z_score(ex.reduced.values[0], ex.reduced.stderr_[0], op.values[0], op.stderr_[0]);
    r.details["2d"] = {{"exact", ex.reduced.values[0]},
                       {"exact_stderr", ex.reduced.stderr_[0]},
                       {"optimal", op.values[0]},
                       {"optimal_stderr", op.stderr_[0]},
                       {"z", z},
                       {"censored", k.censored}};
    const double diff1d = r.details["1d"]["max_abs_difference"].get<double>();
    r.passed = r.passed && std::abs(z) <= kStderrs;
    r.summary = "1D max difference " + fixed(diff1d, 3) + "; 2D exact " + fixed(ex.reduced.values[0]) + "+-" +
                fixed(ex.reduced.stderr_[0], 2) + " vs optimal " + fixed(op.values[0]) + "+-" + fixed(op.stderr_[0], 2) +
                " (z " + fixed(z, 2) + ")";
  }

  void a8(CriterionResult& r) {
    const OuRun& run = ou(0);
    const MemoryReport rep = memory_diagnostic(run.chain, static_cast<int>(run.levels.size()), 30, kA8Alpha);
    r.details["events"] = run.chain.size();
    r.details["tested"] = rep.tested;
    r.details["rejected"] = rep.rejected;
    r.details["max_lag_z"] = rep.max_lag_z;
    double min_p = 1.0;
    for (const auto& c : rep.cells) {
      if (!c.excluded) min_p = std::min(min_p, c.p_value);
    }
    r.details["min_p_value"] = min_p;
    r.passed = rep.rejected == 0 && rep.max_lag_z <= kA8LagZ && static_cast<long long>(run.chain.size()) >= kA8Events;
    r.summary = std::to_string(rep.tested) + " cells tested, " + std::to_string(rep.rejected) + " rejected, max lag |z| " +
                fixed(rep.max_lag_z, 3);
  }

  void a9(CriterionResult& r) {
    const Landscape l = landscape("double_well_1d", 3.0, 0.0, kGrid1d);
    const std::vector<double> levels = uniform_levels(0.9, 0.1, 5);
    const MilestoneSet full(l.q.level_function(), levels);
    const MilestoneSet pair = restrict(full, {0, full.last()});
    // Identical streams: the same trajectory seen through both milestone sets.
    RngStream rf = stream(9), rp = stream(9);
    const TransitionStats sf = estimate_long(l.model, full, scaled(kA9Time, o_.budget_scale), 1e-3, rf, bridged(o_.workers));
    const TransitionStats sp = estimate_long(l.model, pair, scaled(kA9Time, o_.budget_scale), 1e-3, rp, bridged(o_.workers));
    const MFPTSolution tf = solve_optimal(sf, full.last()), tp = solve_optimal(sp, 1);
    const double z = z_score(tf.values[0], tf.stderr_[0], tp.values[0], tp.stderr_[0]);
    r.details["full"] = {{"T", tf.values[0]}, {"stderr", tf.stderr_[0]}};
    r.details["pair"] = {{"T", tp.values[0]}, {"stderr", tp.stderr_[0]}};
    r.details["z"] = z;
    r.passed = std::abs(z) <= kStderrs;
    r.summary = "full " + fixed(tf.values[0]) + "+-" + fixed(tf.stderr_[0], 2) + " vs pair " + fixed(tp.values[0]) + "+-" +
                fixed(tp.stderr_[0], 2) + " (z " + fixed(z, 2) + ")";
  }

  void a10(CriterionResult& r) {
    const OuRun& run = ou(0);
    const IndexFrequencies f = empirical_index_frequencies(run.stats);
    const Eigen::MatrixXd p = run.stats.p_hat();
    const Eigen::VectorXd pi = stationary_index(p);
    const Eigen::VectorXd balance = f.pi - p.transpose() * f.pi;
    const Eigen::VectorXd gap = f.pi - pi;
    double worst_balance = 0.0, worst_gap = 0.0;
    bool ok = true;
    for (Eigen::Index i = 0; i < pi.size(); ++i) {
      const double s = f.stderr_[i];
      ok = ok && std::abs(balance[i]) < kStderrs * s && std::abs(gap[i]) < kStderrs * s;
      worst_balance = std::max(worst_balance, std::abs(balance[i]) / s);
      worst_gap = std::max(worst_gap, std::abs(gap[i]) / s);
    }
    r.details["pi_empirical"] = to_json(f.pi);
    r.details["pi_stderr"] = to_json(f.stderr_);
    r.details["pi_stationary"] = to_json(pi);
    r.details["balance_residual"] = to_json(balance);
    r.details["max_balance_over_stderr"] = worst_balance;
    r.details["max_gap_over_stderr"] = worst_gap;
    r.passed = ok;
    r.summary = "balance residual " + fixed(balance.cwiseAbs().maxCoeff(), 3) + " (" + fixed(worst_balance, 3) +
                " se), stationary gap " + fixed(gap.cwiseAbs().maxCoeff(), 3) + " (" + fixed(worst_gap, 3) + " se)";
  }

  ValidationOptions o_;
  std::optional<Landscape> ou_landscape_;
  std::optional<OuRun> ou_[2];
};

}  // namespace

const std::vector<std::string>& criterion_ids() {
  static const std::vector<std::string> ids{"A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9", "A10"};
  return ids;
}

std::vector<CriterionResult> run_validation(const ValidationOptions& options,
                                            const std::function<void(const CriterionResult&)>& on_result) {
  if (!(options.budget_scale > 0.0)) throw InvalidArgument("validate: budget_scale must be positive");
  for (const auto& id : options.criteria) {
    if (std::find(criterion_ids().begin(), criterion_ids().end(), id) == criterion_ids().end()) {
      throw InvalidArgument("validate: unknown criterion '" + id + "'");
    }
  }
  Suite suite(options);
  std::vector<CriterionResult> out;
  for (const auto& id : criterion_ids()) {
    if (!options.criteria.empty() && std::find(options.criteria.begin(), options.criteria.end(), id) == options.criteria.end()) {
      continue;
    }
    out.push_back(suite.run(id));
    if (on_result) on_result(out.back());
  }
  return out;
}

json to_json(const CriterionResult& r) {
  return {{"id", r.id}, {"passed", r.passed}, {"summary", r.summary}, {"details", r.details}};
}

}  // namespace milestone
