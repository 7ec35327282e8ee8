#pragma once

#include "milestone/integrate.hpp"
#include "milestone/level.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace milestone {

/// Nested milestones M_i = {f = z_i} with z_0 > z_1 > ... > z_N.
class MilestoneSet {
 public:
  /// `labels` name each level in reports (defaults to 0..N); restrict() keeps the parent's labels.
  MilestoneSet(LevelFunction f, std::vector<double> levels, std::vector<int> labels = {});

  const LevelFunction& level_function() const { return f_; }
  const std::vector<double>& levels() const { return levels_; }
  double level(int i) const { return levels_.at(static_cast<std::size_t>(i)); }
  const std::vector<int>& labels() const { return labels_; }
  int size() const { return static_cast<int>(levels_.size()); }
  int last() const { return size() - 1; }

  /// Number of levels z_k >= fx. Levels k >= result lie strictly below fx.
  int count_at_or_above(double fx) const;
  std::vector<LevelTarget> targets() const;

 private:
  LevelFunction f_;
  std::vector<double> levels_;
  std::vector<int> labels_;
};

/// Xi(t) for a single observation: a level reached (within tolerance) other than the current
/// index replaces it; otherwise the previous index stands. nullopt before the first hit.
std::optional<int> assign_index(double f_value, std::optional<int> previous, const std::vector<double>& levels);

/// Xi after a step f_prev -> f_now: the last level crossed along the step, else `previous`.
std::optional<int> assign_index(double f_prev, double f_now, std::optional<int> previous,
                                const std::vector<double>& levels);

struct ChainEvent {
  int index;
  double time;
  Point position;
};

/// Coarse-grained chain (xi_n, tau_n) with the first hitting positions Y_n.
struct CoarseChain {
  std::vector<ChainEvent> events;

  std::size_t size() const { return events.size(); }
  bool empty() const { return events.empty(); }
  std::vector<int> indices() const;
  /// alpha_n = tau_n - tau_{n-1}, n >= 1.
  std::vector<double> lags() const;
  /// Strictly increasing times and nearest-neighbour jumps; throws describing the violation.
  void validate() const;
};

/// Tracks the milestoning index process along a discretized path and reports every first hit
/// of a milestone other than the current one.
class IndexTracker {
 public:
  explicit IndexTracker(const MilestoneSet& set) : set_(&set) {}
  /// With the bridge rule, steps that cross nothing may still touch the adjacent levels.
  IndexTracker(const MilestoneSet& set, const DiffusionModel& model, CrossingDetector detector)
      : set_(&set), model_(&model), detector_(detector) {}

  std::optional<int> current() const { return current_; }
  void reset(std::optional<int> index = std::nullopt) { current_ = index; }

  /// Processes the step x0 -> x1 over [t0, t0 + dt]. `emit` receives each new index hit, in
  /// order along the step. `step` keys the bridge draws.
  void advance(const Point& x0, double f0, const Point& x1, double f1, double t0, double dt,
               const std::function<void(const ChainEvent&)>& emit, std::uint64_t step = 0);

 private:
  const MilestoneSet* set_;
  const DiffusionModel* model_ = nullptr;
  CrossingDetector detector_;
  std::optional<int> current_;
};

/// Simulates for total_time and streams every chain event to `emit`. Returns the final state.
TrajectoryState simulate_chain(const DiffusionModel& model, const MilestoneSet& set, const Point& initial,
                               double total_time, double dt, RngStream& rng,
                               const std::function<void(const ChainEvent&)>& emit,
                               CrossingRule rule = CrossingRule::sign_change);

CoarseChain extract_chain(const DiffusionModel& model, const MilestoneSet& set, const Point& initial,
                          double total_time, double dt, RngStream& rng,
                          CrossingRule rule = CrossingRule::sign_change);

/// Omega_i: the band between the neighbouring levels of milestone i; one-sided for i = 0, N.
CellBounds cell(const MilestoneSet& set, int i);

/// Milestones keeping only the listed indices (sorted, unique, non-empty).
MilestoneSet restrict(const MilestoneSet& set, const std::vector<int>& subset);

/// A point with f(x) = level inside the box, found by scanning a lattice for a sign change and
/// bisecting along the bracketing edge. Throws when the level does not cross the box.
Point find_point_on_level(const LevelFunction& f, double level, const Box& box, int resolution = 201);

}  // namespace milestone
