#include "milestone/estimate.hpp"

#include "milestone/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

namespace milestone {

namespace {

// Reservoir draws use their own stream so recording hits never perturbs a trajectory.
constexpr std::uint64_t kReservoirStream = 0x7265736572766f69ULL;

int batch_of(double fraction, int batches) {
  return std::clamp(static_cast<int>(std::floor(fraction * batches)), 0, batches - 1);
}

}  // namespace

void Reservoir::offer(const Point& x, RngStream& rng) {
  ++seen;
  if (samples.size() < cap) {
    samples.push_back(x);
    return;
  }
  const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(seen));
  if (j < cap) samples[j] = x;
}

void Reservoir::merge(const Reservoir& other, RngStream& rng) {
  const std::size_t total_seen = seen + other.seen;
  if (samples.size() + other.samples.size() <= cap) {
    samples.insert(samples.end(), other.samples.begin(), other.samples.end());
    seen = total_seen;
    return;
  }
  // Keep cap points, split in proportion to the streams each side summarized.
  const double share = total_seen > 0 ? static_cast<double>(seen) / total_seen : 0.5;
  std::size_t mine = std::min(samples.size(), static_cast<std::size_t>(std::llround(share * cap)));
  std::size_t theirs = std::min(other.samples.size(), cap - mine);
  mine = std::min(samples.size(), cap - theirs);
  auto pick = [&rng](std::vector<Point> pool, std::size_t k) {
    for (std::size_t a = 0; a < k; ++a) {
      const std::size_t b = a + static_cast<std::size_t>(rng.uniform() * static_cast<double>(pool.size() - a));
      std::swap(pool[a], pool[std::min(b, pool.size() - 1)]);
    }
    pool.resize(k);
    return pool;
  };
  std::vector<Point> merged = pick(samples, mine);
  const auto rest = pick(other.samples, theirs);
  merged.insert(merged.end(), rest.begin(), rest.end());
  samples = std::move(merged);
  seen = total_seen;
}

TransitionStats::TransitionStats(int size, int batches, std::size_t reservoir_cap)
    : counts(Eigen::MatrixXd::Zero(size, size)),
      lag_sums(Eigen::MatrixXd::Zero(size, size)),
      residence(Eigen::VectorXd::Zero(size)),
      batch_counts(Eigen::MatrixXd::Zero(size, batches)),
      batch_residence(Eigen::MatrixXd::Zero(size, batches)),
      hits(static_cast<std::size_t>(size)) {
  if (size < 1 || batches < 1) throw InvalidArgument("transition stats: size and batches must be positive");
  for (auto& r : hits) r.cap = reservoir_cap;
}

void TransitionStats::add_transition(int i, int j, double lag, int batch) {
  counts(i, j) += 1.0;
  lag_sums(i, j) += lag;
  residence[i] += lag;
  batch_counts(i, batch) += 1.0;
  batch_residence(i, batch) += lag;
}

void TransitionStats::merge(const TransitionStats& other, RngStream& rng) {
  if (other.size() != size() || other.batches() != batches()) throw InvalidArgument("merge: incompatible statistics");
  counts += other.counts;
  lag_sums += other.lag_sums;
  residence += other.residence;
  batch_counts += other.batch_counts;
  batch_residence += other.batch_residence;
  for (std::size_t i = 0; i < hits.size(); ++i) hits[i].merge(other.hits[i], rng);
  total_time += other.total_time;
  censored += other.censored;
}

Eigen::VectorXd TransitionStats::hit_counts() const { return counts.rowwise().sum(); }

Eigen::MatrixXd TransitionStats::p_hat() const {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(size(), size());
  const Eigen::VectorXd n = hit_counts();
  for (int i = 0; i < size(); ++i) {
    if (n[i] > 0) p.row(i) = counts.row(i) / n[i];
  }
  return p;
}

Eigen::MatrixXd TransitionStats::p_stderr() const {
  const Eigen::MatrixXd p = p_hat();
  const Eigen::VectorXd n = hit_counts();
  Eigen::MatrixXd se = Eigen::MatrixXd::Zero(size(), size());
  for (int i = 0; i < size(); ++i) {
    if (n[i] > 0) se.row(i) = (p.row(i).array() * (1.0 - p.row(i).array()) / n[i]).sqrt().matrix();
  }
  return se;
}

Eigen::VectorXd TransitionStats::t_hat() const {
  Eigen::VectorXd t = Eigen::VectorXd::Zero(size());
  const Eigen::VectorXd n = hit_counts();
  for (int i = 0; i < size(); ++i) t[i] = n[i] > 0 ? residence[i] / n[i] : std::numeric_limits<double>::quiet_NaN();
  return t;
}

Eigen::VectorXd TransitionStats::t_stderr() const {
  Eigen::VectorXd se(size());
  for (int i = 0; i < size(); ++i) {
    std::vector<double> num(static_cast<std::size_t>(batches())), den(num.size());
    for (int b = 0; b < batches(); ++b) {
      num[static_cast<std::size_t>(b)] = batch_residence(i, b);
      den[static_cast<std::size_t>(b)] = batch_counts(i, b);
    }
    se[i] = batch_ratio(num, den).stderr_;
  }
  return se;
}

std::vector<int> TransitionStats::undersampled(double floor) const {
  std::vector<int> out;
  const Eigen::VectorXd n = hit_counts();
  for (int i = 0; i < size(); ++i) {
    if (n[i] < floor) out.push_back(i);
  }
  return out;
}

namespace {

// Streams chain events into statistics, batching by event time.
struct ChainAccumulator {
  TransitionStats& stats;
  double total_time;
  RngStream reservoir_rng;
  std::optional<ChainEvent> last;

  void operator()(const ChainEvent& e) {
    if (last) {
      stats.add_transition(last->index, e.index, e.time - last->time, batch_of(e.time / total_time, stats.batches()));
    }
    stats.hits[static_cast<std::size_t>(e.index)].offer(e.position, reservoir_rng);
    last = e;
  }
};

}  // namespace

TransitionStats estimate_long(const DiffusionModel& model, const MilestoneSet& set, double total_time, double dt,
                              RngStream& rng, const SamplingOptions& options, CoarseChain* chain) {
  if (!(total_time > 0.0)) throw InvalidArgument("estimate_long: total_time must be positive");
  const Point start = options.initial.value_or(
      find_point_on_level(set.level_function(), set.level(set.size() / 2), model.box));
  TransitionStats stats(set.size(), options.batches, options.reservoir_cap);
  ChainAccumulator acc{stats, total_time, RngStream(rng.seed(), rng.stream()).substream(kReservoirStream), {}};
  if (chain) chain->events.clear();
  simulate_chain(
      model, set, start, total_time, dt, rng,
      [&](const ChainEvent& e) {
        acc(e);
        if (chain) chain->events.push_back(e);
      },
      options.crossing);
  stats.total_time = total_time;
  return stats;
}

TransitionStats chain_statistics(const CoarseChain& chain, int size, double total_time, int batches) {
  TransitionStats stats(size, batches, 100000);
  ChainAccumulator acc{stats, total_time, RngStream(0, kReservoirStream), {}};
  for (const auto& e : chain.events) {
    if (e.index < 0 || e.index >= size) throw InvalidArgument("chain_statistics: index out of range");
    acc(e);
  }
  stats.total_time = total_time;
  return stats;
}

namespace {

TransitionStats sample_cell(const DiffusionModel& model, const MilestoneSet& set, int i, long long target, double dt,
                            RngStream rng, const SamplingOptions& options) {
  const LevelFunction& f = set.level_function();
  const CellBounds bounds = cell(set, i);
  const double zi = set.level(i);
  TransitionStats stats(set.size(), options.batches, options.reservoir_cap);
  RngStream reservoir_rng = rng.substream(kReservoirStream);
  const CrossingDetector detector = CrossingDetector::keyed(options.crossing, rng);

  TrajectoryState state{find_point_on_level(f, zi, model.box), 0.0};
  double fx = f(state.position);
  bool armed = true;  // index i is current
  double arrival = 0.0;
  long long done = 0;

  // Re-arms when the piece a -> b of the path crosses z_i.
  auto scan = [&](const Point& xa, double fa, double ta, const Point& xb, double fb, double tb) {
    if (armed || (fa > zi) == (fb > zi)) return;
    const double frac = fb == fa ? 0.0 : std::clamp((zi - fa) / (fb - fa), 0.0, 1.0);
    arrival = ta + frac * (tb - ta);
    armed = true;
    stats.hits[static_cast<std::size_t>(i)].offer(crossing_point(f, xa, xb, frac, zi), reservoir_rng);
  };

  for (std::uint64_t n = 0; done < target; ++n) {
    const CellStep step = run_in_cell(model, state, fx, bounds, f, dt, rng, detector, n);
    if (step.boundary_hit) {
      const HitEvent& h = *step.boundary_hit;
      const double zb = set.level(h.index);
      scan(state.position, fx, state.time, h.position, zb, h.time);
      if (armed) {
        stats.add_transition(i, h.index, h.time - arrival, batch_of(static_cast<double>(done) / target, options.batches));
        ++done;
        armed = false;
      }
      scan(h.position, zb, h.time, step.state.position, step.level_value, step.state.time);
    } else {
      scan(state.position, fx, state.time, step.state.position, step.level_value, step.state.time);
      if (!armed && detector.touched(model, f, state.position, fx, step.level_value, zi, dt, n,
                                     set.labels()[static_cast<std::size_t>(i)])) {
        arrival = state.time + 0.5 * dt;
        armed = true;
        stats.hits[static_cast<std::size_t>(i)].offer(crossing_point(f, state.position, state.position, 0.0, zi),
                                                      reservoir_rng);
      }
    }
    state = step.state;
    fx = step.level_value;
    if (armed && state.time - arrival > options.max_time) throw CensoredError(state.time - arrival, state);
  }
  stats.total_time = state.time;
  return stats;
}

}  // namespace

TransitionStats estimate_cells(const DiffusionModel& model, const MilestoneSet& set, long long per_cell_transitions,
                               double dt, RngStream& rng, const SamplingOptions& options) {
  if (set.size() < 2) throw InvalidArgument("estimate_cells: need at least two milestones");
  if (per_cell_transitions < 1) throw InvalidArgument("estimate_cells: per_cell_transitions must be positive");
  std::vector<TransitionStats> parts(static_cast<std::size_t>(set.size()));
  parallel_for(parts.size(), options.workers, [&](std::size_t i) {
    parts[i] = sample_cell(model, set, static_cast<int>(i), per_cell_transitions, dt,
                           rng.substream(static_cast<std::uint64_t>(i)), options);
  });
  TransitionStats out(set.size(), options.batches, options.reservoir_cap);
  RngStream merge_rng = rng.substream(kReservoirStream);
  for (const auto& p : parts) out.merge(p, merge_rng);
  return out;
}

Eigen::VectorXd stationary_index(const Eigen::MatrixXd& p) {
  const Eigen::Index n = p.rows();
  if (n == 0 || p.cols() != n) throw InvalidArgument("stationary_index: square matrix required");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(p.row(i).sum() - 1.0) > 1e-9 || p.row(i).minCoeff() < 0.0) {
      throw InvalidArgument("stationary_index: row " + std::to_string(i) + " is not a probability vector");
    }
  }
  // Irreducibility: every index reaches 0 and is reached from 0.
  auto reach = [&](bool forward) {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::vector<Eigen::Index> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const Eigen::Index a = stack.back();
      stack.pop_back();
      for (Eigen::Index b = 0; b < n; ++b) {
        const double w = forward ? p(a, b) : p(b, a);
        if (w > 0.0 && !seen[static_cast<std::size_t>(b)]) {
          seen[static_cast<std::size_t>(b)] = true;
          stack.push_back(b);
        }
      }
    }
    return seen;
  };
  const auto fwd = reach(true), bwd = reach(false);
  std::ostringstream bad;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!fwd[static_cast<std::size_t>(i)] || !bwd[static_cast<std::size_t>(i)]) bad << (bad.tellp() > 0 ? ", " : "") << i;
  }
  if (bad.tellp() > 0) throw NumericalError("stationary_index: reducible chain, unreachable indices: " + bad.str());

  Eigen::MatrixXd a = p.transpose() - Eigen::MatrixXd::Identity(n, n);
  a.row(0).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[0] = 1.0;
  Eigen::VectorXd pi = a.fullPivLu().solve(rhs);
  pi = pi.cwiseMax(0.0);
  return pi / pi.sum();
}

IndexFrequencies empirical_index_frequencies(const TransitionStats& stats) {
  IndexFrequencies out;
  const Eigen::VectorXd n = stats.hit_counts();
  out.pi = n / n.sum();
  out.stderr_ = Eigen::VectorXd::Zero(stats.size());
  const Eigen::RowVectorXd per_batch = stats.batch_counts.colwise().sum();
  for (int i = 0; i < stats.size(); ++i) {
    std::vector<double> num, den;
    for (int b = 0; b < stats.batches(); ++b) {
      num.push_back(stats.batch_counts(i, b));
      den.push_back(per_batch[b]);
    }
    out.stderr_[i] = batch_ratio(num, den).stderr_;
  }
  return out;
}

HitHistogram hit_histogram(const TransitionStats& stats, int i, const LevelSetMesh& mesh, int bins,
                           std::size_t min_samples) {
  if (i < 0 || i >= stats.size()) throw InvalidArgument("hit_histogram: index out of range");
  const auto& samples = stats.hits[static_cast<std::size_t>(i)].samples;
  if (samples.size() < min_samples) {
    throw NumericalError("hit_histogram: milestone " + std::to_string(i) + " has " + std::to_string(samples.size()) +
                         " retained hits, need " + std::to_string(min_samples));
  }
  HitHistogram h;
  for (const Point& x : samples) h.coordinates.push_back(mesh.arc_coordinate(x));
  std::sort(h.coordinates.begin(), h.coordinates.end());
  if (mesh.dim == 1 || mesh.length() == 0.0) {
    h.edges = {0.0, 0.0};
    h.density = {1.0};
    return h;
  }
  if (bins < 1) throw InvalidArgument("hit_histogram: bins must be positive");
  const double width = mesh.length() / bins;
  for (int b = 0; b <= bins; ++b) h.edges.push_back(b * width);
  h.density.assign(static_cast<std::size_t>(bins), 0.0);
  for (double s : h.coordinates) h.density[static_cast<std::size_t>(batch_of(s / mesh.length(), bins))] += 1.0;
  for (double& d : h.density) d /= h.coordinates.size() * width;
  return h;
}

int KernelEstimate::states() const {
  return milestones.empty() ? 0 : milestones.back().offset + milestones.back().bins();
}

int KernelEstimate::milestone_of(int s) const {
  for (std::size_t i = 0; i < milestones.size(); ++i) {
    if (s >= milestones[i].offset && s < milestones[i].offset + milestones[i].bins()) return static_cast<int>(i);
  }
  throw InvalidArgument("kernel: state out of range");
}

Eigen::MatrixXd KernelEstimate::counts() const {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(states(), states());
  for (const auto& b : batch_counts) c += b;
  return c;
}

Eigen::VectorXd KernelEstimate::samples() const { return counts().rowwise().sum(); }

Eigen::MatrixXd KernelEstimate::nu() const {
  Eigen::MatrixXd c = counts();
  for (Eigen::Index r = 0; r < c.rows(); ++r) {
    const double s = c.row(r).sum();
    if (s > 0) c.row(r) /= s;
  }
  return c;
}

Eigen::VectorXd KernelEstimate::tau() const {
  Eigen::VectorXd t = Eigen::VectorXd::Zero(states());
  for (const auto& b : batch_time_sums) t += b;
  const Eigen::VectorXd n = samples();
  for (Eigen::Index r = 0; r < t.size(); ++r) t[r] = n[r] > 0 ? t[r] / n[r] : 0.0;
  return t;
}

KernelEstimate KernelEstimate::batch(int k) const {
  KernelEstimate out;
  out.milestones = milestones;
  out.batches = 1;
  out.batch_counts = {batch_counts.at(static_cast<std::size_t>(k))};
  out.batch_time_sums = {batch_time_sums.at(static_cast<std::size_t>(k))};
  return out;
}

Point point_at_arc(const LevelSetMesh& mesh, double s) {
  if (mesh.points.size() == 1) return mesh.points[0];
  const auto& a = mesh.arc_length;
  s = std::clamp(s, a.front(), a.back());
  const auto it = std::upper_bound(a.begin(), a.end(), s);
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - a.begin()), a.size() - 1);
  const double w = a[k] - a[k - 1];
  const double t = w > 0.0 ? (s - a[k - 1]) / w : 0.0;
  return mesh.points[k - 1] + t * (mesh.points[k] - mesh.points[k - 1]);
}

KernelEstimate estimate_kernel(const DiffusionModel& model, const MilestoneSet& set,
                               const std::vector<LevelSetMesh>& meshes, long long samples_per_bin, double dt,
                               RngStream& rng, const KernelOptions& options) {
  if (static_cast<int>(meshes.size()) != set.size()) throw InvalidArgument("estimate_kernel: one mesh per milestone");
  if (set.size() < 2) throw InvalidArgument("estimate_kernel: need at least two milestones");
  if (samples_per_bin < 1 || options.batches < 1) throw InvalidArgument("estimate_kernel: counts must be positive");
  if (options.start == StartMode::empirical && !options.hits) {
    throw InvalidArgument("estimate_kernel: empirical starts need retained hit positions");
  }
  KernelEstimate k;
  k.batches = options.batches;
  int offset = 0;
  for (int i = 0; i < set.size(); ++i) {
    const auto& mesh = meshes[static_cast<std::size_t>(i)];
    KernelEstimate::Milestone m;
    m.offset = offset;
    if (mesh.dim == 1 || mesh.points.size() == 1) {
      m.edges = {0.0, 0.0};
    } else {
      double lo = 0.0, hi = mesh.length();
      if (!options.windows.empty()) std::tie(lo, hi) = options.windows.at(static_cast<std::size_t>(i));
      if (!(hi > lo)) throw InvalidArgument("estimate_kernel: empty arc-length window");
      for (int b = 0; b <= options.bins; ++b) m.edges.push_back(lo + (hi - lo) * b / options.bins);
    }
    offset += m.bins();
    k.milestones.push_back(std::move(m));
  }
  const int n = k.states();
  auto bin_of = [&](int i, const Point& x) {
    const auto& m = k.milestones[static_cast<std::size_t>(i)];
    if (m.bins() == 1) return 0;
    const double s = meshes[static_cast<std::size_t>(i)].arc_coordinate(x);
    return batch_of((s - m.edges.front()) / (m.edges.back() - m.edges.front()), m.bins());
  };

  // Empirical starts: retained hits sorted into bins.
  std::vector<std::vector<Point>> pools(static_cast<std::size_t>(n));
  if (options.start == StartMode::empirical) {
    for (int i = 0; i < set.size(); ++i) {
      for (const Point& x : options.hits->hits.at(static_cast<std::size_t>(i)).samples) {
        const auto& m = k.milestones[static_cast<std::size_t>(i)];
        if (m.bins() > 1) {
          const double s = meshes[static_cast<std::size_t>(i)].arc_coordinate(x);
          if (s < m.edges.front() || s > m.edges.back()) continue;
        }
        pools[static_cast<std::size_t>(k.state(i, bin_of(i, x)))].push_back(x);
      }
    }
  }

  struct Partial {
    std::vector<Eigen::VectorXd> counts, times;  // per batch: row of this state
    long long censored = 0;
  };
  std::vector<Partial> parts(static_cast<std::size_t>(n));
  const LevelFunction& f = set.level_function();
  parallel_for(parts.size(), options.workers, [&](std::size_t sidx) {
    const int state = static_cast<int>(sidx);
    const int i = k.milestone_of(state);
    const int b = state - k.milestones[static_cast<std::size_t>(i)].offset;
    Partial part;
    part.counts.assign(static_cast<std::size_t>(options.batches), Eigen::VectorXd::Zero(n));
    part.times.assign(static_cast<std::size_t>(options.batches), Eigen::VectorXd::Zero(1));
    const auto& pool = pools[sidx];
    if (options.start == StartMode::empirical && pool.empty()) {
      parts[sidx] = std::move(part);  // empty bin: reported through samples() == 0
      return;
    }
    const auto& m = k.milestones[static_cast<std::size_t>(i)];
    const Point centre = point_at_arc(meshes[static_cast<std::size_t>(i)], 0.5 * (m.edges[b] + m.edges[b + 1]));
    std::vector<LevelTarget> targets;
    if (i > 0) targets.push_back({i - 1, set.level(i - 1)});
    if (i + 1 < set.size()) targets.push_back({i + 1, set.level(i + 1)});
    RngStream stream = rng.substream(static_cast<std::uint64_t>(i)).substream(static_cast<std::uint64_t>(b));
    for (long long s = 0; s < samples_per_bin; ++s) {
      const Point start = options.start == StartMode::empirical ? pool[static_cast<std::size_t>(s) % pool.size()] : centre;
      try {
        const HitEvent hit = run_until_hit(model, {start, 0.0}, targets, f, dt, stream, options.max_time, std::nullopt,
                                             options.crossing);
        const auto batch = static_cast<std::size_t>(s % options.batches);
        part.counts[batch][k.state(hit.index, bin_of(hit.index, hit.position))] += 1.0;
        part.times[batch][0] += hit.time;
      } catch (const CensoredError&) {
        ++part.censored;
      }
    }
    parts[sidx] = std::move(part);
  });

  k.batch_counts.assign(static_cast<std::size_t>(options.batches), Eigen::MatrixXd::Zero(n, n));
  k.batch_time_sums.assign(static_cast<std::size_t>(options.batches), Eigen::VectorXd::Zero(n));
  for (int s = 0; s < n; ++s) {
    const auto& part = parts[static_cast<std::size_t>(s)];
    for (int bt = 0; bt < options.batches; ++bt) {
      k.batch_counts[static_cast<std::size_t>(bt)].row(s) = part.counts[static_cast<std::size_t>(bt)].transpose();
      k.batch_time_sums[static_cast<std::size_t>(bt)][s] = part.times[static_cast<std::size_t>(bt)][0];
    }
    k.censored += part.censored;
  }
  return k;
}

MemoryReport memory_diagnostic(const CoarseChain& chain, int size, long long min_count, double alpha) {
  MemoryReport rep;
  rep.alpha = alpha;
  const auto xi = chain.indices();
  const auto lags = chain.lags();  // lags[n-1] = tau_n - tau_{n-1}
  if (xi.size() < 3) throw InvalidArgument("memory_diagnostic: chain too short");
  for (int x : xi) {
    if (x < 0 || x >= size) throw InvalidArgument("memory_diagnostic: index out of range");
  }

  // First-order frequencies from the same transitions the triples use.
  Eigen::MatrixXd first = Eigen::MatrixXd::Zero(size, size);
  std::map<std::pair<int, int>, std::vector<long long>> second;
  std::map<std::tuple<int, int, int>, std::vector<double>> lag_cells;
  for (std::size_t n = 1; n + 1 < xi.size(); ++n) {
    first(xi[n], xi[n + 1]) += 1.0;
    auto& row = second[{xi[n - 1], xi[n]}];
    row.resize(static_cast<std::size_t>(size), 0);
    row[static_cast<std::size_t>(xi[n + 1])] += 1;
    lag_cells[{xi[n - 1], xi[n], xi[n + 1]}].push_back(lags[n]);
  }

  for (const auto& [key, row] : second) {
    MemoryCell c{key.first, key.second};
    c.count = std::accumulate(row.begin(), row.end(), 0LL);
    const double total = first.row(key.second).sum();
    int outcomes = 0;
    for (int j = 0; j < size; ++j) {
      const double p = first(key.second, j) / total;
      if (p <= 0.0) continue;
      ++outcomes;
      const double expected = c.count * p;
      c.chi_square += (row[static_cast<std::size_t>(j)] - expected) * (row[static_cast<std::size_t>(j)] - expected) / expected;
    }
    c.dof = outcomes - 1;
    // The reference frequencies include this cell's own counts, which shrinks the statistic by
    // the share of the rest; rescale so it is chi-square under the null.
    const double rest_share = 1.0 - c.count / total;
    if (rest_share > 0.0) c.chi_square /= rest_share;
    c.excluded = c.count < min_count || c.dof < 1 || !(rest_share > 0.0);
    if (!c.excluded) {
      c.p_value = chi_square_sf(c.chi_square, c.dof);
      ++rep.tested;
    }
    rep.cells.push_back(c);
  }
  for (auto& c : rep.cells) {
    if (c.excluded) continue;
    c.rejected = c.p_value < alpha / rep.tested;
    rep.rejected += c.rejected;
  }

  for (const auto& [key, values] : lag_cells) {
    const auto [prev, cur, next] = key;
    LagCell c{prev, cur, next};
    c.count = static_cast<long long>(values.size());
    std::vector<double> others;
    for (const auto& [k2, v2] : lag_cells) {
      if (std::get<1>(k2) == cur && std::get<2>(k2) == next && std::get<0>(k2) != prev) {
        others.insert(others.end(), v2.begin(), v2.end());
      }
    }
    const MeanEstimate mine = mean_stderr(values);
    c.mean = mine.mean;
    c.excluded = c.count < min_count;
    if (others.empty()) {
      c.pair_mean = c.mean;
      rep.lags.push_back(c);
      continue;
    }
    const MeanEstimate rest = mean_stderr(others);
    const double n_c = values.size(), n_o = others.size(), n_p = n_c + n_o;
    c.pair_mean = (n_c * mine.mean + n_o * rest.mean) / n_p;
    // m_c - m_pair = (n_o / n_p) (m_c - m_o) with independent groups.
    const double se = n_o / n_p * std::sqrt(mine.stderr_ * mine.stderr_ + rest.stderr_ * rest.stderr_);
    c.z = se > 0.0 ? (c.mean - c.pair_mean) / se : 0.0;
    if (!c.excluded && !(others.size() < static_cast<std::size_t>(min_count))) {
      rep.max_lag_z = std::max(rep.max_lag_z, std::abs(c.z));
    } else {
      c.excluded = true;
    }
    rep.lags.push_back(c);
  }
  return rep;
}

}  // namespace milestone
