#pragma once

#include "milestone/committor.hpp"
#include "milestone/milestones.hpp"
#include "milestone/statistics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace milestone {

/// Uniform sample of at most `cap` points from a stream.
struct Reservoir {
  std::size_t cap = 100000;
  std::size_t seen = 0;
  std::vector<Point> samples;

  void offer(const Point& x, RngStream& rng);
  /// Pools two reservoirs, keeping each side's share proportional to what it has seen.
  void merge(const Reservoir& other, RngStream& rng);
};

/// Sufficient statistics of a milestoning chain.
struct TransitionStats {
  TransitionStats() = default;
  TransitionStats(int size, int batches, std::size_t reservoir_cap);

  int size() const { return static_cast<int>(counts.rows()); }
  int batches() const { return static_cast<int>(batch_counts.cols()); }

  Eigen::MatrixXd counts;      // N_ij
  Eigen::MatrixXd lag_sums;    // summed lags of i -> j transitions
  Eigen::VectorXd residence;   // R_i
  Eigen::MatrixXd batch_counts;     // N_i per batch (rows i)
  Eigen::MatrixXd batch_residence;  // R_i per batch
  std::vector<Reservoir> hits;
  double total_time = 0.0;
  long long censored = 0;

  /// Records one transition i -> j with lag `lag` into `batch`.
  void add_transition(int i, int j, double lag, int batch);
  /// Sums everything; hit reservoirs pooled with `rng`. Sizes must agree.
  void merge(const TransitionStats& other, RngStream& rng);

  Eigen::VectorXd hit_counts() const;  // N_i
  /// p_ij = N_ij / N_i; rows with N_i = 0 are zero.
  Eigen::MatrixXd p_hat() const;
  /// Binomial standard error sqrt(p (1 - p) / N_i).
  Eigen::MatrixXd p_stderr() const;
  Eigen::VectorXd t_hat() const;  // R_i / N_i
  /// Batch-means standard error of t_i.
  Eigen::VectorXd t_stderr() const;
  /// Indices with fewer than `floor` departures.
  std::vector<int> undersampled(double floor) const;
};

struct SamplingOptions {
  int batches = 10;
  std::size_t reservoir_cap = 100000;
  int workers = 1;
  double max_time = 1e4;  // per transition, cells mode
  /// Start of the long run; default is a point on the middle milestone.
  std::optional<Point> initial;
  CrossingRule crossing = CrossingRule::sign_change;
};

/// One long trajectory: p_ij = N_ij / N_i, t_i = R_i / N_i. Batches split the run by time.
/// With `chain` set, the full coarse chain is returned there as well.
TransitionStats estimate_long(const DiffusionModel& model, const MilestoneSet& set, double total_time, double dt,
                              RngStream& rng, const SamplingOptions& options = {}, CoarseChain* chain = nullptr);

/// Statistics of a recorded chain (events after the first), batches by event time over [0, total_time].
TransitionStats chain_statistics(const CoarseChain& chain, int size, double total_time, int batches = 10);

/// Independent reflected runs in every cell, each contributing row i only. Cell i uses stream
/// rng.substream(i); cells run on `options.workers` threads and are merged in index order.
TransitionStats estimate_cells(const DiffusionModel& model, const MilestoneSet& set, long long per_cell_transitions,
                               double dt, RngStream& rng, const SamplingOptions& options = {});

/// Stationary law of a row-stochastic matrix. Throws naming unreachable indices when reducible.
Eigen::VectorXd stationary_index(const Eigen::MatrixXd& p);

/// Chain visit frequencies with batch-means standard errors.
struct IndexFrequencies {
  Eigen::VectorXd pi;
  Eigen::VectorXd stderr_;
};
IndexFrequencies empirical_index_frequencies(const TransitionStats& stats);

/// Arc-length histogram of retained hit positions on a milestone.
struct HitHistogram {
  std::vector<double> edges;
  std::vector<double> density;  // normalized: sum density * width = 1
  std::vector<double> coordinates;  // sorted arc-length coordinates of the samples
};
HitHistogram hit_histogram(const TransitionStats& stats, int i, const LevelSetMesh& mesh, int bins = 20,
                           std::size_t min_samples = 500);

/// Binned kernel nu(b, (j, b')) and mean exit times tau(b).
struct KernelEstimate {
  struct Milestone {
    std::vector<double> edges;  // arc length; one bin in 1D
    int offset = 0;             // first global state of this milestone
    int bins() const { return static_cast<int>(edges.size()) - 1; }
  };
  std::vector<Milestone> milestones;
  int batches = 10;
  /// Transition counts between global states, per batch (samples assigned round-robin).
  std::vector<Eigen::MatrixXd> batch_counts;
  std::vector<Eigen::VectorXd> batch_time_sums;
  long long censored = 0;

  int states() const;
  int state(int milestone, int bin) const { return milestones[static_cast<std::size_t>(milestone)].offset + bin; }
  /// Milestone owning a global state.
  int milestone_of(int state) const;
  Eigen::MatrixXd counts() const;
  Eigen::VectorXd samples() const;
  /// Row-normalized counts; empty rows stay zero.
  Eigen::MatrixXd nu() const;
  Eigen::VectorXd tau() const;
  /// Estimate built from batch k only.
  KernelEstimate batch(int k) const;
};

enum class StartMode { bin_centers, empirical };

struct KernelOptions {
  int bins = 20;  // per milestone in 2D; 1D always uses one
  StartMode start = StartMode::bin_centers;
  int batches = 10;
  int workers = 1;
  double max_time = 1e4;
  /// Arc-length window per milestone (default: whole mesh).
  std::vector<std::pair<double, double>> windows;
  /// Hit positions per milestone for empirical starts.
  const TransitionStats* hits = nullptr;
  CrossingRule crossing = CrossingRule::sign_change;
};

/// Trajectories from each bin of each milestone to the first other milestone hit.
/// Bin b of milestone i runs on rng.substream(i).substream(b).
KernelEstimate estimate_kernel(const DiffusionModel& model, const MilestoneSet& set,
                               const std::vector<LevelSetMesh>& meshes, long long samples_per_bin, double dt,
                               RngStream& rng, const KernelOptions& options = {});

/// Point at arc length s along a mesh.
Point point_at_arc(const LevelSetMesh& mesh, double s);

/// Second-order versus first-order transition frequencies, and lag means conditioned on the
/// previous index.
struct MemoryCell {
  int previous, current;
  long long count = 0;
  double chi_square = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
  bool excluded = false;
  bool rejected = false;
};
struct LagCell {
  int previous, current, next;
  long long count = 0;
  double mean = 0.0;
  double pair_mean = 0.0;
  double z = 0.0;
  bool excluded = false;
};
struct MemoryReport {
  std::vector<MemoryCell> cells;
  std::vector<LagCell> lags;
  double alpha = 1e-3;
  int tested = 0;
  int rejected = 0;
  double max_lag_z = 0.0;
};
MemoryReport memory_diagnostic(const CoarseChain& chain, int size, long long min_count = 30, double alpha = 1e-3);

}  // namespace milestone
