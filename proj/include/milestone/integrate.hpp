#pragma once

#include "milestone/core.hpp"
#include "milestone/level.hpp"
#include "milestone/model.hpp"
#include "milestone/rng.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace milestone {

/// Crossings are registered in level-function units within this tolerance.
inline constexpr double kCrossingTolerance = 1e-9;

struct TrajectoryState {
  Point position;
  double time = 0.0;
};

/// First arrival on a milestone.
struct HitEvent {
  int index = -1;
  Point position;
  double time = 0.0;
};

struct LevelTarget {
  int index;
  double level;
};

/// Non-finite position; carries the last finite state.
class BlowUpError : public NumericalError {
 public:
  explicit BlowUpError(TrajectoryState last) : NumericalError("blow-up: non-finite position"), last_finite(std::move(last)) {}
  TrajectoryState last_finite;
};

/// max_time elapsed before any target was hit.
class CensoredError : public NumericalError {
 public:
  CensoredError(double elapsed_time, TrajectoryState at)
      : NumericalError("censored: no target hit after " + std::to_string(elapsed_time) + " time units"),
        elapsed(elapsed_time),
        state(std::move(at)) {}
  double elapsed;
  TrajectoryState state;
};

/// A reflected step would leave the cell through its other side.
class StepTooLargeError : public NumericalError {
 public:
  StepTooLargeError() : NumericalError("step too large: proposal crosses the whole cell") {}
};

/// One Euler-Maruyama step: x + (b + div a) dt + sqrt(2 dt) sigma Z.
TrajectoryState em_step(const DiffusionModel& model, const TrajectoryState& state, double dt, RngStream& rng);

enum class CrossingRule { sign_change, bridge };

/// Crossing test for one step. Under the bridge rule a step whose end points lie on the same
/// side of a level still counts as touching it with probability
/// exp(-2 (f0 - z)(f1 - z) / (s^2 dt)), s^2 = 2 grad f^T a grad f at the start of the step.
/// Its uniforms are keyed by (step, level label) and not drawn from the trajectory stream, so
/// the path is unchanged and a restricted set sees the same draws as the full one.
struct CrossingDetector {
  CrossingRule rule = CrossingRule::sign_change;
  std::uint64_t seed = 0;
  std::uint64_t key = 0;

  /// Keyed by the stream's id and position, so later calls on the same stream draw afresh.
  static CrossingDetector keyed(CrossingRule rule, const RngStream& rng);

  bool bridged() const { return rule == CrossingRule::bridge; }
  /// Whether the path f0 -> f1 (same side of z) touched z during step `step`.
  bool touched(const DiffusionModel& model, const LevelFunction& f, const Point& x0, double f0, double f1, double z,
               double dt, std::uint64_t step, int label) const;
};

/// exp(-2 (f0 - z)(f1 - z) / (rate dt)); one when the end points straddle z.
double bridge_touch_probability(double f0, double f1, double z, double rate, double dt);

/// Where a step segment x0 -> x1 first crosses one of the levels.
struct Crossing {
  int index;
  double fraction;  // along the step, in [0, 1]
};

/// Earliest crossing among `targets` for f going from f0 to f1 (sign change of f - z).
std::optional<Crossing> first_crossing(double f0, double f1, const std::vector<LevelTarget>& targets);

/// Point on the segment at `fraction`, pulled onto {f = level} by one Newton step along grad f.
Point crossing_point(const LevelFunction& f, const Point& x0, const Point& x1, double fraction, double level);

/// Steps until f crosses a target level. With `departing` set, a target the start lies on is
/// ignored until the trajectory first moves off it. Throws CensoredError after max_time.
HitEvent run_until_hit(const DiffusionModel& model, TrajectoryState state, const std::vector<LevelTarget>& targets,
                       const LevelFunction& f, double dt, RngStream& rng, double max_time,
                       std::optional<int> departing = std::nullopt,
                       CrossingRule rule = CrossingRule::sign_change);

/// Region {lower <= f <= upper}; a missing bound is open (the box side).
struct CellBounds {
  std::optional<LevelTarget> lower;
  std::optional<LevelTarget> upper;

  bool contains(double fx) const {
    return (!lower || fx >= lower->level) && (!upper || fx <= upper->level);
  }
};

/// Result of one confined step: the new state plus the bound whose level the proposal crossed
/// (or, under the bridge rule, touched and left again).
struct CellStep {
  TrajectoryState state;
  double level_value = 0.0;  // f at the new position
  std::optional<HitEvent> boundary_hit;
};

/// One step with normal reflection at the cell's bounding level sets: a proposal that leaves the
/// cell is mirrored across the tangent plane of the crossed level set at the crossing point.
CellStep run_in_cell(const DiffusionModel& model, const TrajectoryState& state, const CellBounds& cell,
                     const LevelFunction& f, double dt, RngStream& rng);
/// Same, with f at the current position already known. `step` keys the bridge draws.
CellStep run_in_cell(const DiffusionModel& model, const TrajectoryState& state, double f_current,
                     const CellBounds& cell, const LevelFunction& f, double dt, RngStream& rng,
                     const CrossingDetector& detector = {}, std::uint64_t step = 0);

}  // namespace milestone
