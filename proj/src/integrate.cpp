#include "milestone/integrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace milestone {

TrajectoryState em_step(const DiffusionModel& model, const TrajectoryState& state, double dt, RngStream& rng) {
  if (!(dt > 0.0)) throw InvalidArgument("em_step: dt must be positive");
  const Point& x = state.position;
  Point drift = model.drift(x);
  if (model.diffusion_divergence) drift += model.diffusion_divergence(x);
  Point z(x.size());
  for (Eigen::Index a = 0; a < z.size(); ++a) z[a] = rng.normal();
  const double scale = std::sqrt(2.0 * dt);
  TrajectoryState next;
  if (model.constant_noise) {
    next.position = x + drift * dt + scale * (*model.constant_noise * z);
  } else {
    next.position = x + drift * dt + scale * (model.noise(x) * z);
  }
  next.time = state.time + dt;
  if (!next.position.allFinite()) throw BlowUpError(state);
  return next;
}

CrossingDetector CrossingDetector::keyed(CrossingRule rule, const RngStream& rng) {
  return {rule, rng.seed(), splitmix64(rng.stream() ^ splitmix64(rng.counter() + 0x5851F42D4C957F2Dull))};
}

double bridge_touch_probability(double f0, double f1, double z, double rate, double dt) {
  const double prod = (f0 - z) * (f1 - z);
  if (prod <= 0.0) return 1.0;
  if (!(rate > 0.0)) return 0.0;
  return std::exp(-2.0 * prod / (rate * dt));
}

bool CrossingDetector::touched(const DiffusionModel& model, const LevelFunction& f, const Point& x0, double f0,
                               double f1, double z, double dt, std::uint64_t step, int label) const {
  if (rule != CrossingRule::bridge) return false;
  // Cheap reject before the gradient: beyond ~40 exponents the probability is below 1e-17.
  const double prod = (f0 - z) * (f1 - z);
  if (prod <= 0.0) return false;
  const Point g = f.gradient(x0);
  const double rate = 2.0 * g.dot(model.diffusion(x0) * g);
  if (!(rate > 0.0) || 2.0 * prod > 40.0 * rate * dt) return false;
  const double prob = std::exp(-2.0 * prod / (rate * dt));
  const auto lab = static_cast<std::uint64_t>(static_cast<std::int64_t>(label));
  const std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                                         static_cast<std::uint32_t>(key ^ lab),
                                         static_cast<std::uint32_t>((key >> 32) ^ (lab << 16))};
  const auto out = RngStream::philox(ctr, {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  const std::uint64_t bits = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  const double u = (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  return u < prob;
}

std::optional<Crossing> first_crossing(double f0, double f1, const std::vector<LevelTarget>& targets) {
  std::optional<Crossing> best;
  for (const LevelTarget& t : targets) {
    if ((f0 > t.level) == (f1 > t.level)) continue;
    const double frac = f1 == f0 ? 0.0 : std::clamp((t.level - f0) / (f1 - f0), 0.0, 1.0);
    if (!best || frac < best->fraction) best = Crossing{t.index, frac};
  }
  return best;
}

Point crossing_point(const LevelFunction& f, const Point& x0, const Point& x1, double fraction, double level) {
  Point p = x0 + fraction * (x1 - x0);
  const Point g = f.gradient(p);
  const double g2 = g.squaredNorm();
  if (g2 > 0.0) p -= (f(p) - level) / g2 * g;
  return p;
}

HitEvent run_until_hit(const DiffusionModel& model, TrajectoryState state, const std::vector<LevelTarget>& targets,
                       const LevelFunction& f, double dt, RngStream& rng, double max_time,
                       std::optional<int> departing, CrossingRule rule) {
  if (!(dt > 0.0)) throw InvalidArgument("run_until_hit: dt must be positive");
  const CrossingDetector detector = CrossingDetector::keyed(rule, rng);
  double f0 = f(state.position);
  std::vector<LevelTarget> active;
  std::optional<LevelTarget> held;  // the departing target, re-armed after first exit
  for (const LevelTarget& t : targets) {
    if (std::abs(f0 - t.level) < kCrossingTolerance) {
      if (departing && *departing == t.index) {
        held = t;
        continue;
      }
      return {t.index, state.position, state.time};
    }
    active.push_back(t);
  }

  const double t_start = state.time;
  for (std::uint64_t step = 0; state.time - t_start < max_time; ++step) {
    TrajectoryState next = em_step(model, state, dt, rng);
    const double f1 = f(next.position);
    if (auto c = first_crossing(f0, f1, active)) {
      double level = 0.0;
      for (const LevelTarget& t : active) {
        if (t.index == c->index) level = t.level;
      }
      return {c->index, crossing_point(f, state.position, next.position, c->fraction, level),
              state.time + c->fraction * dt};
    }
    if (detector.bridged()) {
      for (const LevelTarget& t : active) {
        if (detector.touched(model, f, state.position, f0, f1, t.level, dt, step, t.index)) {
          return {t.index, crossing_point(f, state.position, state.position, 0.0, t.level), state.time + 0.5 * dt};
        }
      }
    }
    if (held && std::abs(f1 - held->level) >= kCrossingTolerance) {
      active.push_back(*held);
      held.reset();
    }
    state = std::move(next);
    f0 = f1;
  }
  throw CensoredError(state.time - t_start, state);
}

namespace {

// Normal reflection of y across the tangent plane of {f = level} at the crossing point p.
Point mirror(const LevelFunction& f, const Point& p, const Point& y) {
  const Point g = f.gradient(p);
  const double gn = g.norm();
  if (gn == 0.0) return p;
  const Point n = g / gn;
  return y - 2.0 * n.dot(y - p) * n;
}

}  // namespace

CellStep run_in_cell(const DiffusionModel& model, const TrajectoryState& state, const CellBounds& cell,
                     const LevelFunction& f, double dt, RngStream& rng) {
  return run_in_cell(model, state, f(state.position), cell, f, dt, rng);
}

CellStep run_in_cell(const DiffusionModel& model, const TrajectoryState& state, double f_current,
                     const CellBounds& cell, const LevelFunction& f, double dt, RngStream& rng,
                     const CrossingDetector& detector, std::uint64_t step) {
  TrajectoryState next = em_step(model, state, dt, rng);
  double f1 = f(next.position);
  CellStep out{next, f1, std::nullopt};
  if (cell.contains(f1)) {
    // An excursion through a bound and back within the step still ends the transition.
    for (const auto* b : {&cell.lower, &cell.upper}) {
      if (*b && detector.touched(model, f, state.position, f_current, f1, (*b)->level, dt, step, (*b)->index)) {
        out.boundary_hit =
            HitEvent{(*b)->index, crossing_point(f, state.position, state.position, 0.0, (*b)->level), state.time + 0.5 * dt};
        break;
      }
    }
    return out;
  }

  const bool below = cell.lower && f1 < cell.lower->level;
  const LevelTarget bound = below ? *cell.lower : *cell.upper;
  const std::optional<LevelTarget>& other = below ? cell.upper : cell.lower;
  const double frac = std::clamp((bound.level - f_current) / (f1 - f_current), 0.0, 1.0);
  const Point p = crossing_point(f, state.position, next.position, frac, bound.level);
  out.boundary_hit = HitEvent{bound.index, p, state.time + frac * dt};

  Point y = mirror(f, p, next.position);
  double fy = f(y);
  // Curved level sets: the tangent-plane mirror can land marginally outside; repeat locally.
  for (int tries = 0; tries < 3 && !cell.contains(fy); ++tries) {
    if (other && ((below && fy > other->level) || (!below && fy < other->level))) break;
    const Point q = crossing_point(f, y, y, 0.0, bound.level);
    y = 2.0 * q - y;
    fy = f(y);
  }
  if (other && ((below && fy > other->level) || (!below && fy < other->level))) throw StepTooLargeError();
  if (!cell.contains(fy)) {
    y = p;
    fy = bound.level;
  }
  out.state.position = y;
  out.level_value = fy;
  return out;
}

}  // namespace milestone
