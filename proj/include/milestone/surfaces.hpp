#pragma once

#include "milestone/milestones.hpp"

#include <memory>
#include <vector>

namespace milestone {

/// Polyline phi(s), s in [0, 1], resampled so that consecutive points are equally spaced in arc
/// length. s = 0 is the first input point; orient the curve so that s grows toward A when the
/// surrogate should mimic q^-.
class Curve {
 public:
  /// Points in order; they are reparametrized by normalized arc length. At least two distinct
  /// points are required. `samples` defaults to the input count.
  static Curve from_points(const std::vector<Point>& points, int samples = 0);
  /// Rows (s, x): sorted by s, then reparametrized by arc length like from_points.
  static Curve from_parametrized(std::vector<std::pair<double, Point>> rows, int samples = 0);

  int dim() const { return static_cast<int>(points_.front().size()); }
  int segments() const { return static_cast<int>(points_.size()) - 1; }
  const std::vector<Point>& points() const { return points_; }
  double length() const { return length_; }
  /// phi(s) with s clamped to [0, 1].
  Point at(double s) const;

 private:
  std::vector<Point> points_;
  double length_ = 0.0;
};

/// s_gamma(x): parameter of the closest curve point; ties go to the smallest s.
double project(const Curve& curve, const Point& x);

/// Strictly increasing map of [0, 1] onto itself.
class Rescale {
 public:
  static Rescale identity();
  /// Logistic with slope k at 1/2, shifted and scaled to pass through (0, 0) and (1, 1).
  static Rescale logistic(double slope);
  /// Piecewise linear through (s, Q) knots that must start at (0, 0) and end at (1, 1).
  static Rescale table(std::vector<double> s, std::vector<double> q);

  double operator()(double s) const;

 private:
  enum class Kind { identity, logistic, table } kind_ = Kind::identity;
  double slope_ = 0.0;
  std::vector<double> s_, q_;
};

/// Midpoint quadrature spacing h = delta / 4 and window half-width 4 delta.
inline constexpr int kSmoothingCellsPerDelta = 4;
inline constexpr int kSmoothingHalfWidth = 4;

/// f(x) = sum over the local midpoint grid of K_delta(x - y) Q(s_gamma(y)), normalized by the
/// kernel sum (Gaussian K_delta). Direct evaluation: about 1000 projections per call in 2D.
double smoothed_committor(const Curve& curve, const Rescale& q, double delta, const Point& x);

/// The surrogate sampled on a lattice covering `box`. Lattice spacing is delta / 4 (finer when
/// the box would get too few nodes); on that lattice the quadrature points of all nodes share one
/// offset lattice, so the convolution is separable. Nodal values equal smoothed_committor.
std::shared_ptr<const GridField> tabulate_smoothed_committor(const Curve& curve, const Rescale& q, double delta,
                                                             const Box& box);

/// Milestones {f = z_i} of the tabulated surrogate on `box`.
MilestoneSet milestones_from_curve(const Curve& curve, const Rescale& q, double delta, std::vector<double> levels,
                                   const Box& box);

}  // namespace milestone
