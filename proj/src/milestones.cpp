#include "milestone/milestones.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace milestone {

MilestoneSet::MilestoneSet(LevelFunction f, std::vector<double> levels, std::vector<int> labels)
    : f_(std::move(f)), levels_(std::move(levels)), labels_(std::move(labels)) {
  if (levels_.empty()) throw InvalidArgument("milestones: at least one level required");
  for (std::size_t k = 1; k < levels_.size(); ++k) {
    if (!(levels_[k] < levels_[k - 1])) throw InvalidArgument("milestones: levels must be strictly decreasing");
  }
  if (labels_.empty()) {
    labels_.resize(levels_.size());
    std::iota(labels_.begin(), labels_.end(), 0);
  }
  if (labels_.size() != levels_.size()) throw InvalidArgument("milestones: label count mismatch");
}

int MilestoneSet::count_at_or_above(double fx) const {
  // levels_ is decreasing: the first k with z_k < fx.
  const auto it = std::partition_point(levels_.begin(), levels_.end(), [fx](double z) { return z >= fx; });
  return static_cast<int>(it - levels_.begin());
}

std::vector<LevelTarget> MilestoneSet::targets() const {
  std::vector<LevelTarget> t;
  for (int i = 0; i < size(); ++i) t.push_back({i, levels_[static_cast<std::size_t>(i)]});
  return t;
}

std::optional<int> assign_index(double f_value, std::optional<int> previous, const std::vector<double>& levels) {
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (std::abs(f_value - levels[k]) < kCrossingTolerance) {
      const int idx = static_cast<int>(k);
      return previous && *previous == idx ? previous : std::optional<int>(idx);
    }
  }
  return previous;
}

std::optional<int> assign_index(double f_prev, double f_now, std::optional<int> previous,
                                const std::vector<double>& levels) {
  std::optional<int> out = previous;
  // Levels crossed in order along the step; the last one is the index afterwards.
  std::vector<std::pair<double, int>> crossed;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if ((f_prev > levels[k]) != (f_now > levels[k])) {
      crossed.emplace_back(std::abs(levels[k] - f_prev), static_cast<int>(k));
    }
  }
  std::sort(crossed.begin(), crossed.end());
  if (!crossed.empty()) out = crossed.back().second;
  return assign_index(f_now, out, levels);
}

std::vector<int> CoarseChain::indices() const {
  std::vector<int> xi;
  xi.reserve(events.size());
  for (const auto& e : events) xi.push_back(e.index);
  return xi;
}

std::vector<double> CoarseChain::lags() const {
  std::vector<double> a;
  for (std::size_t n = 1; n < events.size(); ++n) a.push_back(events[n].time - events[n - 1].time);
  return a;
}

void CoarseChain::validate() const {
  for (std::size_t n = 1; n < events.size(); ++n) {
    const auto& prev = events[n - 1];
    const auto& cur = events[n];
    std::ostringstream msg;
    if (!(cur.time > prev.time)) {
      msg << "chain: jump times not increasing at event " << n;
      throw NumericalError(msg.str());
    }
    if (std::abs(cur.index - prev.index) != 1) {
      msg << "chain: non-nearest-neighbour jump " << prev.index << " -> " << cur.index << " at event " << n;
      throw NumericalError(msg.str());
    }
  }
}

void IndexTracker::advance(const Point& x0, double f0, const Point& x1, double f1, double t0, double dt,
                           const std::function<void(const ChainEvent&)>& emit, std::uint64_t step) {
  const int m0 = set_->count_at_or_above(f0);
  const int m1 = set_->count_at_or_above(f1);
  const LevelFunction& f = set_->level_function();
  if (m0 == m1) {
    if (!model_ || !detector_.bridged()) return;
    for (const int k : {m0 - 1, m0}) {
      if (k < 0 || k > set_->last() || (current_ && *current_ == k)) continue;
      const double z = set_->level(k);
      if (detector_.touched(*model_, f, x0, f0, f1, z, dt, step, set_->labels()[static_cast<std::size_t>(k)])) {
        current_ = k;
        emit(ChainEvent{k, t0 + 0.5 * dt, crossing_point(f, x0, x0, 0.0, z)});
        return;
      }
    }
    return;
  }
  auto hit = [&](int k) {
    if (current_ && *current_ == k) return;
    const double z = set_->level(k);
    const double frac = f1 == f0 ? 0.0 : std::clamp((z - f0) / (f1 - f0), 0.0, 1.0);
    current_ = k;
    emit(ChainEvent{k, t0 + frac * dt, crossing_point(f, x0, x1, frac, z)});
  };
  if (m1 < m0) {
    // f increased: crossing levels in increasing z, i.e. decreasing index.
    for (int k = m0 - 1; k >= m1; --k) hit(k);
  } else {
    for (int k = m0; k < m1; ++k) hit(k);
  }
}

TrajectoryState simulate_chain(const DiffusionModel& model, const MilestoneSet& set, const Point& initial,
                               double total_time, double dt, RngStream& rng,
                               const std::function<void(const ChainEvent&)>& emit, CrossingRule rule) {
  if (initial.size() != model.dim) throw InvalidArgument("simulate_chain: initial point dimension mismatch");
  if (!model.box.contains(initial)) throw InvalidArgument("simulate_chain: initial point outside the bounding box");
  const LevelFunction& f = set.level_function();
  IndexTracker tracker(set, model, CrossingDetector::keyed(rule, rng));
  TrajectoryState state{initial, 0.0};
  double f0 = f(initial);
  const auto steps = static_cast<long long>(std::floor(total_time / dt + 1e-9));
  for (long long n = 0; n < steps; ++n) {
    TrajectoryState next = em_step(model, state, dt, rng);
    const double f1 = f(next.position);
    tracker.advance(state.position, f0, next.position, f1, state.time, dt, emit, static_cast<std::uint64_t>(n));
    state = std::move(next);
    f0 = f1;
  }
  return state;
}

CoarseChain extract_chain(const DiffusionModel& model, const MilestoneSet& set, const Point& initial,
                          double total_time, double dt, RngStream& rng, CrossingRule rule) {
  CoarseChain chain;
  simulate_chain(
      model, set, initial, total_time, dt, rng, [&](const ChainEvent& e) { chain.events.push_back(e); }, rule);
  return chain;
}

CellBounds cell(const MilestoneSet& set, int i) {
  if (i < 0 || i > set.last()) throw InvalidArgument("cell: index outside the milestone set");
  CellBounds c;
  if (i + 1 <= set.last()) c.lower = LevelTarget{i + 1, set.level(i + 1)};
  if (i - 1 >= 0) c.upper = LevelTarget{i - 1, set.level(i - 1)};
  return c;
}

MilestoneSet restrict(const MilestoneSet& set, const std::vector<int>& subset) {
  if (subset.empty()) throw InvalidArgument("restrict: empty subset");
  std::vector<double> levels;
  std::vector<int> labels;
  for (std::size_t k = 0; k < subset.size(); ++k) {
    const int i = subset[k];
    if (i < 0 || i > set.last()) throw InvalidArgument("restrict: index outside the milestone set");
    if (k > 0 && !(i > subset[k - 1])) throw InvalidArgument("restrict: subset must be sorted and unique");
    levels.push_back(set.level(i));
    labels.push_back(set.labels()[static_cast<std::size_t>(i)]);
  }
  return MilestoneSet(set.level_function(), std::move(levels), std::move(labels));
}

Point find_point_on_level(const LevelFunction& f, double level, const Box& box, int resolution) {
  const Grid grid = Grid::uniform(box, std::max(resolution, Grid::kMinNodes));
  auto bisect = [&](Point a, Point b) {
    double fa = f(a) - level;
    for (int it = 0; it < 200; ++it) {
      const Point m = 0.5 * (a + b);
      const double fm = f(m) - level;
      if ((fm > 0.0) == (fa > 0.0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
      }
      if ((b - a).norm() < 1e-14) break;
    }
    return Point(0.5 * (a + b));
  };
  // Prefer the crossing closest to the box centre so the start sits away from the box faces.
  const Point centre = 0.5 * (box.lower + box.upper);
  std::optional<Point> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    const auto c = grid.coords(k);
    for (int axis = 0; axis < grid.dim(); ++axis) {
      if (c[axis] + 1 >= grid.nodes(axis)) continue;
      auto c1 = c;
      c1[axis] += 1;
      const Point a = grid.node(k), b = grid.node(c1[0], c1[1]);
      if ((f(a) > level) == (f(b) > level)) continue;
      const double d = (0.5 * (a + b) - centre).norm();
      if (d < best_dist) {
        best_dist = d;
        best = bisect(a, b);
      }
    }
  }
  if (!best) throw NumericalError("level " + std::to_string(level) + " does not cross the box");
  return *best;
}

}  // namespace milestone
