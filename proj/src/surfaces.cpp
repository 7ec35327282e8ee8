#include "milestone/surfaces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace milestone {

namespace {

std::vector<double> cumulative_length(const std::vector<Point>& p) {
  std::vector<double> a{0.0};
  for (std::size_t k = 1; k < p.size(); ++k) a.push_back(a.back() + (p[k] - p[k - 1]).norm());
  return a;
}

std::vector<Point> resample(const std::vector<Point>& p, int samples) {
  const auto a = cumulative_length(p);
  std::vector<Point> out;
  std::size_t seg = 1;
  for (int k = 0; k < samples; ++k) {
    const double target = a.back() * k / (samples - 1);
    while (seg + 1 < a.size() && a[seg] < target) ++seg;
    const double w = a[seg] - a[seg - 1];
    const double t = w > 0.0 ? std::clamp((target - a[seg - 1]) / w, 0.0, 1.0) : 0.0;
    out.push_back(p[seg - 1] + t * (p[seg] - p[seg - 1]));
  }
  return out;
}

}  // namespace

Curve Curve::from_points(const std::vector<Point>& points, int samples) {
  if (points.size() < 2) throw InvalidArgument("curve: at least two points required");
  const auto dim = points.front().size();
  std::vector<Point> clean{points.front()};
  for (const Point& x : points) {
    if (x.size() != dim) throw InvalidArgument("curve: points of mixed dimension");
    if (!x.allFinite()) throw InvalidArgument("curve: non-finite point");
    if ((x - clean.back()).norm() > 0.0) clean.push_back(x);
  }
  if (clean.size() < 2) throw InvalidArgument("curve: degenerate (all points coincide)");
  const int n = samples > 0 ? samples : static_cast<int>(points.size());
  if (n < 2) throw InvalidArgument("curve: at least two samples required");

  // Chords cut corners, so equal arc steps on the input are not equal chords on the output;
  // a few passes settle the segment lengths.
  std::vector<Point> p = resample(clean, n);
  for (int pass = 0; pass < 50; ++pass) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t k = 1; k < p.size(); ++k) {
      const double d = (p[k] - p[k - 1]).norm();
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    if (hi <= lo * 1.001) break;
    p = resample(p, n);
  }
  Curve c;
  c.points_ = std::move(p);
  c.length_ = cumulative_length(c.points_).back();
  if (!(c.length_ > 0.0)) throw InvalidArgument("curve: degenerate (zero length)");
  return c;
}

Curve Curve::from_parametrized(std::vector<std::pair<double, Point>> rows, int samples) {
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Point> pts;
  for (auto& r : rows) pts.push_back(std::move(r.second));
  return from_points(pts, samples);
}

Point Curve::at(double s) const {
  const double u = std::clamp(s, 0.0, 1.0) * segments();
  const int k = std::min(static_cast<int>(std::floor(u)), segments() - 1);
  const double t = u - k;
  return points_[static_cast<std::size_t>(k)] + t * (points_[static_cast<std::size_t>(k + 1)] - points_[static_cast<std::size_t>(k)]);
}

double project(const Curve& curve, const Point& x) {
  if (x.size() != curve.dim()) throw InvalidArgument("project: dimension mismatch");
  const auto& p = curve.points();
  double best_d2 = std::numeric_limits<double>::infinity();
  double best_s = 0.0;
  const double tie = 1e-12 * curve.length() * curve.length();
  for (int k = 0; k < curve.segments(); ++k) {
    const Point& a = p[static_cast<std::size_t>(k)];
    const Point ab = p[static_cast<std::size_t>(k + 1)] - a;
    const double t = std::clamp((x - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    const double d2 = (x - a - t * ab).squaredNorm();
    // Scanning in increasing s, only a strictly closer point replaces the current one.
    if (d2 < best_d2 - tie) {
      best_d2 = d2;
      best_s = (k + t) / curve.segments();
    }
  }
  return best_s;
}

Rescale Rescale::identity() { return {}; }

Rescale Rescale::logistic(double slope) {
  if (!(slope > 0.0)) throw InvalidArgument("rescale: logistic slope must be positive");
  Rescale r;
  r.kind_ = Kind::logistic;
  r.slope_ = slope;
  return r;
}

Rescale Rescale::table(std::vector<double> s, std::vector<double> q) {
  if (s.size() != q.size() || s.size() < 2) throw InvalidArgument("rescale: table needs matching knots, at least two");
  if (s.front() != 0.0 || s.back() != 1.0 || q.front() != 0.0 || q.back() != 1.0) {
    throw InvalidArgument("rescale: table must run from (0, 0) to (1, 1)");
  }
  for (std::size_t k = 1; k < s.size(); ++k) {
    if (!(s[k] > s[k - 1]) || !(q[k] > q[k - 1])) throw InvalidArgument("rescale: table must be strictly increasing");
  }
  Rescale r;
  r.kind_ = Kind::table;
  r.s_ = std::move(s);
  r.q_ = std::move(q);
  return r;
}

double Rescale::operator()(double s) const {
  s = std::clamp(s, 0.0, 1.0);
  switch (kind_) {
    case Kind::identity:
      return s;
    case Kind::logistic: {
      auto sigma = [this](double u) { return 1.0 / (1.0 + std::exp(-slope_ * (u - 0.5))); };
      const double lo = sigma(0.0), hi = sigma(1.0);
      return std::clamp((sigma(s) - lo) / (hi - lo), 0.0, 1.0);
    }
    case Kind::table: {
      const auto it = std::upper_bound(s_.begin(), s_.end(), s);
      const std::size_t k = std::clamp<std::size_t>(static_cast<std::size_t>(it - s_.begin()), 1, s_.size() - 1);
      const double t = (s - s_[k - 1]) / (s_[k] - s_[k - 1]);
      return q_[k - 1] + t * (q_[k] - q_[k - 1]);
    }
  }
  return s;
}

namespace {

// Normalized 1D weights at offsets (k + 1/2) h, k = -cells .. cells - 1.
std::vector<double> kernel_weights(double delta, double h, int cells) {
  std::vector<double> w;
  double sum = 0.0;
  for (int k = -cells; k < cells; ++k) {
    const double u = (k + 0.5) * h / delta;
    w.push_back(std::exp(-0.5 * u * u));
    sum += w.back();
  }
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace

double smoothed_committor(const Curve& curve, const Rescale& q, double delta, const Point& x) {
  if (!(delta > 0.0)) throw InvalidArgument("smoothed committor: delta must be positive");
  if (x.size() != curve.dim()) throw InvalidArgument("smoothed committor: dimension mismatch");
  const int cells = kSmoothingCellsPerDelta * kSmoothingHalfWidth;
  const double h = delta / kSmoothingCellsPerDelta;
  const auto w = kernel_weights(delta, h, cells);
  const int n = 2 * cells;
  double f = 0.0;
  if (x.size() == 1) {
    for (int a = 0; a < n; ++a) f += w[static_cast<std::size_t>(a)] * q(project(curve, make_point(x[0] + (a - cells + 0.5) * h)));
  } else {
    for (int b = 0; b < n; ++b) {
      double row = 0.0;
      for (int a = 0; a < n; ++a) {
        const Point y = make_point(x[0] + (a - cells + 0.5) * h, x[1] + (b - cells + 0.5) * h);
        row += w[static_cast<std::size_t>(a)] * q(project(curve, y));
      }
      f += w[static_cast<std::size_t>(b)] * row;
    }
  }
  return std::clamp(f, 0.0, 1.0);
}

std::shared_ptr<const GridField> tabulate_smoothed_committor(const Curve& curve, const Rescale& q, double delta,
                                                             const Box& box) {
  if (!(delta > 0.0)) throw InvalidArgument("smoothed committor: delta must be positive");
  if (box.dim() != curve.dim()) throw InvalidArgument("smoothed committor: box and curve dimensions differ");
  const int d = box.dim();
  // Node count per axis from the nominal spacing, at least the grid minimum.
  std::array<int, 2> nodes{1, 1};
  double h = delta / kSmoothingCellsPerDelta;
  for (int a = 0; a < d; ++a) {
    const double width = box.upper[a] - box.lower[a];
    h = std::min(h, width / (Grid::kMinNodes - 1));
  }
  Box lattice_box = box;
  for (int a = 0; a < d; ++a) {
    const double width = box.upper[a] - box.lower[a];
    nodes[static_cast<std::size_t>(a)] = static_cast<int>(std::ceil(width / h - 1e-9)) + 1;
    lattice_box.upper[a] = box.lower[a] + (nodes[static_cast<std::size_t>(a)] - 1) * h;
  }
  const Grid grid(lattice_box, nodes);
  const int cells = static_cast<int>(std::ceil(kSmoothingHalfWidth * delta / h - 1e-9));
  const auto w = kernel_weights(delta, h, cells);

  // Q(s) on the offset lattice y_m = lower + (m + 1/2) h, m = -cells .. nodes + cells - 2.
  const int nx = nodes[0], ny = d == 2 ? nodes[1] : 1;
  const int mx = nx + 2 * cells - 1, my = d == 2 ? ny + 2 * cells - 1 : 1;
  Eigen::MatrixXd g(mx, my);
  for (int j = 0; j < my; ++j) {
    for (int i = 0; i < mx; ++i) {
      const double yx = box.lower[0] + (i - cells + 0.5) * h;
      g(i, j) = d == 1 ? q(project(curve, make_point(yx)))
                       : q(project(curve, make_point(yx, box.lower[1] + (j - cells + 0.5) * h)));
    }
  }
  // Node i averages offset points m = i + k, k = -cells .. cells - 1 (stored at i + k + cells).
  Eigen::MatrixXd gx = Eigen::MatrixXd::Zero(nx, my);
  for (int j = 0; j < my; ++j) {
    for (int i = 0; i < nx; ++i) {
      double s = 0.0;
      for (int k = 0; k < 2 * cells; ++k) s += w[static_cast<std::size_t>(k)] * g(i + k, j);
      gx(i, j) = s;
    }
  }
  Eigen::VectorXd values(grid.size());
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      double s = 0.0;
      if (d == 1) {
        s = gx(i, 0);
      } else {
        for (int k = 0; k < 2 * cells; ++k) s += w[static_cast<std::size_t>(k)] * gx(i, j + k);
      }
      values[grid.index(i, j)] = std::clamp(s, 0.0, 1.0);
    }
  }
  return std::make_shared<const GridField>(grid, std::move(values));
}

MilestoneSet milestones_from_curve(const Curve& curve, const Rescale& q, double delta, std::vector<double> levels,
                                   const Box& box) {
  for (double z : levels) {
    if (!(z > 0.0 && z < 1.0)) throw InvalidArgument("milestones from curve: levels must lie in (0, 1)");
  }
  return MilestoneSet(LevelFunction::from_field(tabulate_smoothed_committor(curve, q, delta, box)), std::move(levels));
}

}  // namespace milestone
