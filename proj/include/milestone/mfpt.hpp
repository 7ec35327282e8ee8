#pragma once

#include "milestone/estimate.hpp"

#include <string>

namespace milestone {

/// Mean first passage times T_{i,target} over all milestones i.
struct MFPTSolution {
  int target = 0;
  Eigen::VectorXd values;
  Eigen::VectorXd stderr_;  // zero when the inputs carry no uncertainty
  double residual = 0.0;
  std::string method;       // optimal | exact | empirical | oracle
};

/// T_i = t_i + sum_k p_ik T_k for i != target, T_target = 0 (absorbing row deleted).
/// With `t_stderr` and/or `row_counts` (N_i, multinomial rows) the delta method fills stderr_.
MFPTSolution solve_optimal(const Eigen::MatrixXd& p, const Eigen::VectorXd& t, int target,
                           const Eigen::VectorXd* t_stderr = nullptr, const Eigen::VectorXd* row_counts = nullptr);
/// Sampled p and t, with both error sources propagated.
MFPTSolution solve_optimal(const TransitionStats& stats, int target);
/// Analytic isocommittor transition probabilities with sampled t (only t errors propagate).
MFPTSolution solve_optimal(const Eigen::MatrixXd& q, const TransitionStats& stats, int target);

/// T <- t + P T from zero until the sup change drops below tol.
Eigen::VectorXd value_iteration(const Eigen::MatrixXd& p, const Eigen::VectorXd& t, int target, double tol = 1e-12,
                                long long max_iterations = 10000000);

/// Binned T_target(b) on every milestone (zero on the target).
struct ExactMFPTField {
  int target = 0;
  std::vector<Eigen::VectorXd> values;  // per milestone, per bin
  bool iterative = false;               // true when the fixed point converged
};

struct ExactSolution {
  ExactMFPTField field;
  MFPTSolution reduced;  // T_{i,target} = sum_b mu_i(b) T(b)
};

enum class ExactSolver { direct, iterative };

/// Solves tau(b) = T(b) - sum nu(b, b') T(b') with T = 0 on the target milestone and reduces with
/// the per-milestone weights `mu` (bins of each milestone; default: the stationary law of nu
/// restricted to each milestone). stderr_ comes from re-solving each sample batch.
ExactSolution solve_exact(const KernelEstimate& kernel, int target,
                          const std::vector<Eigen::VectorXd>* mu = nullptr, ExactSolver solver = ExactSolver::iterative);

/// Per-milestone bin weights: the stationary law of the binned first-hitting chain.
std::vector<Eigen::VectorXd> kernel_hitting_weights(const KernelEstimate& kernel);

/// Two-milestone ergodic estimate.
struct EmpiricalMFPT {
  double forward = 0.0, forward_stderr = 0.0;   // M_a -> M_b
  double backward = 0.0, backward_stderr = 0.0; // M_b -> M_a
  long long transitions = 0;                    // per direction (minimum)
};

struct EmpiricalOptions {
  int replicas = 10;  // independent chains, one batch each
  int workers = 1;
  double max_time = 1e7;
  CrossingRule crossing = CrossingRule::sign_change;
};

/// Runs the chain of {M_a, M_b} (a two-level MilestoneSet) until each direction has at least
/// n_transitions lags; a lag counts toward T_{a,b} when the previous index is a. The first lag
/// of each replica (started on M_a) is discarded. Replica r uses rng.substream(r).
EmpiricalMFPT mfpt_empirical(const DiffusionModel& model, const MilestoneSet& pair, long long n_transitions,
                             double dt, RngStream& rng, const EmpiricalOptions& options = {});

/// Reflecting-boundary MFPT in 1D by nested adaptive quadrature, relative error about 1e-10.
double mfpt_quadrature_1d(const DiffusionModel& model, double x_start, double x_target);

}  // namespace milestone
