#include "milestone/mfpt.hpp"

#include "milestone/parallel.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>

namespace milestone {

namespace {

std::vector<int> others(int n, int target) {
  std::vector<int> r;
  for (int i = 0; i < n; ++i) {
    if (i != target) r.push_back(i);
  }
  return r;
}

}  // namespace

MFPTSolution solve_optimal(const Eigen::MatrixXd& p, const Eigen::VectorXd& t, int target,
                           const Eigen::VectorXd* t_stderr, const Eigen::VectorXd* row_counts) {
  const int n = static_cast<int>(p.rows());
  if (p.cols() != n || t.size() != n) throw InvalidArgument("solve_optimal: dimension mismatch");
  if (target < 0 || target >= n) throw InvalidArgument("solve_optimal: target out of range");
  const auto rest = others(n, target);
  for (int i : rest) {
    if (std::abs(p.row(i).sum() - 1.0) > 1e-9 || p.row(i).minCoeff() < 0.0) {
      throw InvalidArgument("solve_optimal: row " + std::to_string(i) + " is not a probability vector");
    }
    if (!(t[i] > 0.0)) throw InvalidArgument("solve_optimal: t must be positive off the target");
  }
  const int m = static_cast<int>(rest.size());
  Eigen::MatrixXd a(m, m);
  Eigen::VectorXd rhs(m);
  for (int r = 0; r < m; ++r) {
    rhs[r] = t[rest[r]];
    for (int c = 0; c < m; ++c) a(r, c) = (r == c ? 1.0 : 0.0) - p(rest[r], rest[c]);
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) throw NumericalError("solve_optimal: singular system (target unreachable)");
  const Eigen::VectorXd x = lu.solve(rhs);
  MFPTSolution out;
  out.target = target;
  out.method = "optimal";
  out.values = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < m; ++r) out.values[rest[r]] = x[r];
  out.residual = (a * x - rhs).cwiseAbs().maxCoeff() / std::max(1.0, rhs.cwiseAbs().maxCoeff());
  if (!x.allFinite() || x.minCoeff() <= 0.0) throw NumericalError("solve_optimal: inconsistent inputs (non-positive MFPT)");

  // Delta method: dT = G (dt + dP T) with G = (I - P_rr)^-1.
  out.stderr_ = Eigen::VectorXd::Zero(n);
  if (t_stderr || row_counts) {
    const Eigen::MatrixXd g = lu.inverse();
    Eigen::VectorXd var = Eigen::VectorXd::Zero(m);
    for (int c = 0; c < m; ++c) {
      const int i = rest[c];
      double s2 = 0.0;
      if (t_stderr) s2 += (*t_stderr)[i] * (*t_stderr)[i];
      if (row_counts && (*row_counts)[i] > 0) {
        // Var(sum_k p_ik T_k) for a multinomial row = (E[T^2] - E[T]^2) / N_i.
        double e1 = 0.0, e2 = 0.0;
        for (int k = 0; k < n; ++k) {
          e1 += p(i, k) * out.values[k];
          e2 += p(i, k) * out.values[k] * out.values[k];
        }
        s2 += std::max(e2 - e1 * e1, 0.0) / (*row_counts)[i];
      }
      var += g.col(c).cwiseAbs2() * s2;
    }
    for (int r = 0; r < m; ++r) out.stderr_[rest[r]] = std::sqrt(var[r]);
  }
  return out;
}

MFPTSolution solve_optimal(const TransitionStats& stats, int target) {
  const Eigen::VectorXd se = stats.t_stderr();
  const Eigen::VectorXd n = stats.hit_counts();
  return solve_optimal(stats.p_hat(), stats.t_hat(), target, &se, &n);
}

MFPTSolution solve_optimal(const Eigen::MatrixXd& q, const TransitionStats& stats, int target) {
  const Eigen::VectorXd se = stats.t_stderr();
  return solve_optimal(q, stats.t_hat(), target, &se, nullptr);
}

Eigen::VectorXd value_iteration(const Eigen::MatrixXd& p, const Eigen::VectorXd& t, int target, double tol,
                                long long max_iterations) {
  const Eigen::Index n = p.rows();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (long long it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd next = t + p * x;
    next[target] = 0.0;
    const double change = (next - x).cwiseAbs().maxCoeff();
    x = std::move(next);
    if (change < tol) return x;
  }
  throw NumericalError("value iteration did not converge");
}

std::vector<Eigen::VectorXd> kernel_hitting_weights(const KernelEstimate& kernel) {
  const Eigen::MatrixXd nu = kernel.nu();
  // The chain is periodic, so solve the balance equations instead of iterating.
  const int n = kernel.states();
  Eigen::MatrixXd a = nu.transpose() - Eigen::MatrixXd::Identity(n, n);
  a.row(0).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[0] = 1.0;
  Eigen::VectorXd pi = a.fullPivLu().solve(rhs).cwiseMax(0.0);
  std::vector<Eigen::VectorXd> out;
  for (const auto& m : kernel.milestones) {
    Eigen::VectorXd w = pi.segment(m.offset, m.bins());
    const double s = w.sum();
    out.push_back(s > 0.0 ? Eigen::VectorXd(w / s) : Eigen::VectorXd::Constant(m.bins(), 1.0 / m.bins()));
  }
  return out;
}

namespace {

// Solves over the states off the target milestone; returns all states (zero on the target).
Eigen::VectorXd solve_kernel_system(const Eigen::MatrixXd& nu, const Eigen::VectorXd& tau,
                                    const std::vector<int>& free_states, ExactSolver solver, bool& iterative) {
  const Eigen::Index n = nu.rows();
  const int m = static_cast<int>(free_states.size());
  Eigen::MatrixXd sub(m, m);
  Eigen::VectorXd rhs(m);
  for (int r = 0; r < m; ++r) {
    rhs[r] = tau[free_states[static_cast<std::size_t>(r)]];
    for (int c = 0; c < m; ++c) sub(r, c) = nu(free_states[static_cast<std::size_t>(r)], free_states[static_cast<std::size_t>(c)]);
  }
  Eigen::VectorXd x;
  iterative = false;
  if (solver == ExactSolver::iterative) {
    x = Eigen::VectorXd::Zero(m);
    for (int it = 0; it < 1000000; ++it) {
      Eigen::VectorXd next = rhs + sub * x;
      const double change = (next - x).cwiseAbs().maxCoeff();
      x = std::move(next);
      if (!x.allFinite()) break;
      if (change < 1e-10) {
        iterative = true;
        break;
      }
    }
  }
  if (!iterative) {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m) - sub;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) throw NumericalError("solve_exact: singular kernel system");
    x = lu.solve(rhs);
  }
  Eigen::VectorXd all = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < m; ++r) all[free_states[static_cast<std::size_t>(r)]] = x[r];
  return all;
}

Eigen::VectorXd reduce(const KernelEstimate& kernel, const Eigen::VectorXd& field,
                       const std::vector<Eigen::VectorXd>& mu) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(kernel.milestones.size()));
  for (std::size_t i = 0; i < kernel.milestones.size(); ++i) {
    const auto& m = kernel.milestones[i];
    out[static_cast<Eigen::Index>(i)] = mu[i].dot(field.segment(m.offset, m.bins()));
  }
  return out;
}

}  // namespace

ExactSolution solve_exact(const KernelEstimate& kernel, int target, const std::vector<Eigen::VectorXd>* mu,
                          ExactSolver solver) {
  const int milestones = static_cast<int>(kernel.milestones.size());
  if (target < 0 || target >= milestones) throw InvalidArgument("solve_exact: target out of range");
  const Eigen::VectorXd n = kernel.samples();
  std::vector<int> free_states;
  for (int s = 0; s < kernel.states(); ++s) {
    if (kernel.milestone_of(s) == target) continue;
    if (!(n[s] > 0)) throw InvalidArgument("solve_exact: kernel row " + std::to_string(s) + " has no samples");
    free_states.push_back(s);
  }
  const std::vector<Eigen::VectorXd> weights = mu ? *mu : kernel_hitting_weights(kernel);
  if (static_cast<int>(weights.size()) != milestones) throw InvalidArgument("solve_exact: one weight vector per milestone");

  bool iterative = false;
  const Eigen::VectorXd nu_tau = kernel.tau();
  const Eigen::MatrixXd nu = kernel.nu();
  const Eigen::VectorXd field = solve_kernel_system(nu, nu_tau, free_states, solver, iterative);

  ExactSolution out;
  out.field.target = target;
  out.field.iterative = iterative;
  for (const auto& m : kernel.milestones) out.field.values.push_back(field.segment(m.offset, m.bins()));
  out.reduced.target = target;
  out.reduced.method = "exact";
  out.reduced.values = reduce(kernel, field, weights);
  {
    double res = 0.0;
    for (int s : free_states) res = std::max(res, std::abs(field[s] - nu.row(s).dot(field) - nu_tau[s]));
    out.reduced.residual = res / std::max(1.0, nu_tau.cwiseAbs().maxCoeff());
  }
  for (int s : free_states) {
    if (!(field[s] > 0.0)) throw NumericalError("solve_exact: inconsistent inputs (non-positive MFPT)");
  }

  // Batch spread: each batch re-solved with its own kernel and the same weights.
  std::vector<Eigen::VectorXd> batch_values;
  for (int b = 0; b < kernel.batches; ++b) {
    const KernelEstimate kb = kernel.batch(b);
    const Eigen::VectorXd nb = kb.samples();
    bool complete = true;
    for (int s : free_states) complete = complete && nb[s] > 0;
    if (!complete) continue;
    try {
      bool it = false;
      const Eigen::VectorXd fb = solve_kernel_system(kb.nu(), kb.tau(), free_states, ExactSolver::direct, it);
      batch_values.push_back(reduce(kernel, fb, weights));
    } catch (const NumericalError&) {
    }
  }
  out.reduced.stderr_ = Eigen::VectorXd::Constant(milestones, std::numeric_limits<double>::quiet_NaN());
  if (batch_values.size() >= 2) {
    for (int i = 0; i < milestones; ++i) {
      std::vector<double> v;
      for (const auto& bv : batch_values) v.push_back(bv[i]);
      out.reduced.stderr_[i] = mean_stderr(v).stderr_;
    }
  }
  return out;
}

EmpiricalMFPT mfpt_empirical(const DiffusionModel& model, const MilestoneSet& pair, long long n_transitions,
                             double dt, RngStream& rng, const EmpiricalOptions& options) {
  if (pair.size() != 2) throw InvalidArgument("mfpt_empirical: exactly two milestones required");
  if (n_transitions < 1 || options.replicas < 1) throw InvalidArgument("mfpt_empirical: counts must be positive");
  const LevelFunction& f = pair.level_function();
  const int replicas = options.replicas;
  const long long per_replica = (n_transitions + replicas - 1) / replicas;
  struct Lags {
    std::vector<double> forward, backward;
  };
  std::vector<Lags> lags(static_cast<std::size_t>(replicas));
  parallel_for(lags.size(), options.workers, [&](std::size_t r) {
    RngStream stream = rng.substream(static_cast<std::uint64_t>(r));
    IndexTracker tracker(pair, model, CrossingDetector::keyed(options.crossing, stream));
    TrajectoryState state{find_point_on_level(f, pair.level(0), model.box), 0.0};
    double f0 = f(state.position);
    std::optional<ChainEvent> last;
    bool first = true;
    Lags& out = lags[r];
    auto emit = [&](const ChainEvent& e) {
      if (last) {
        if (first) {
          first = false;  // the lag leaving the artificial start
        } else {
          (last->index == 0 ? out.forward : out.backward).push_back(e.time - last->time);
        }
      }
      last = e;
    };
    for (std::uint64_t n = 0; static_cast<long long>(std::min(out.forward.size(), out.backward.size())) < per_replica;
         ++n) {
      TrajectoryState next = em_step(model, state, dt, stream);
      const double f1 = f(next.position);
      tracker.advance(state.position, f0, next.position, f1, state.time, dt, emit, n);
      state = std::move(next);
      f0 = f1;
      if (state.time > options.max_time) throw CensoredError(state.time, state);
    }
    out.forward.resize(static_cast<std::size_t>(per_replica));
    out.backward.resize(static_cast<std::size_t>(per_replica));
  });
  // Replicas are independent batches.
  std::vector<double> fwd_means, bwd_means;
  for (const auto& l : lags) {
    fwd_means.push_back(mean_stderr(l.forward).mean);
    bwd_means.push_back(mean_stderr(l.backward).mean);
  }
  EmpiricalMFPT out;
  const MeanEstimate fm = mean_stderr(fwd_means), bm = mean_stderr(bwd_means);
  out.forward = fm.mean;
  out.backward = bm.mean;
  out.transitions = per_replica * replicas;
  if (replicas >= 2) {
    out.forward_stderr = fm.stderr_;
    out.backward_stderr = bm.stderr_;
  } else {
    // One replica: ten consecutive batches.
    auto batched = [](const std::vector<double>& v) {
      std::vector<double> means;
      const std::size_t b = v.size() / 10;
      for (std::size_t k = 0; k < 10 && b > 0; ++k) {
        means.push_back(mean_stderr(std::vector<double>(v.begin() + k * b, v.begin() + (k + 1) * b)).mean);
      }
      return mean_stderr(means).stderr_;
    };
    out.forward_stderr = batched(lags[0].forward);
    out.backward_stderr = batched(lags[0].backward);
  }
  return out;
}

double mfpt_quadrature_1d(const DiffusionModel& model, double x_start, double x_target) {
  if (model.dim != 1) throw InvalidArgument("mfpt_quadrature_1d: one-dimensional model required");
  if (!model.reversible || !model.potential) throw InvalidArgument("mfpt_quadrature_1d: reversible model with a potential required");
  const double lo = model.box.lower[0], hi = model.box.upper[0];
  const auto& v = *model.potential;
  if (!(v.hessian(make_point(lo))(0, 0) > 0.0 && v.hessian(make_point(hi))(0, 0) > 0.0)) {
    throw InvalidArgument("mfpt_quadrature_1d: potential is not confining at the box edges");
  }
  if (x_start == x_target) return 0.0;
  const double beta = model.beta;
  const bool rightward = x_start < x_target;
  const double a = std::min(x_start, x_target), b = std::max(x_start, x_target);
  using boost::math::quadrature::gauss_kronrod;
  constexpr double tol = 1e-12;
  // Inner mass seen from y, written with V(z) - V(y) so nothing overflows.
  auto inner = [&](double y) {
    const double vy = v.value(make_point(y));
    auto g = [&](double z) { return std::exp(-beta * (v.value(make_point(z)) - vy)); };
    return rightward ? gauss_kronrod<double, 61>::integrate(g, lo, y, 15, tol)
                     : gauss_kronrod<double, 61>::integrate(g, y, hi, 15, tol);
  };
  auto outer = [&](double y) { return inner(y) / model.diffusion(make_point(y))(0, 0); };
  return gauss_kronrod<double, 61>::integrate(outer, a, b, 15, tol);
}

}  // namespace milestone
