#pragma once

#include "milestone/core.hpp"

#include <array>
#include <vector>

namespace milestone {

/// Axis-aligned box [lower, upper] in R^d.
struct Box {
  Point lower;
  Point upper;

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Point& x, double slack = 0.0) const;
  Point clamp(const Point& x) const;
};

/// Uniform node-centred grid on a box, 1D or 2D. Node k = i + nx * j (x fastest),
/// which is row-major with rows along y.
class Grid {
 public:
  static constexpr int kMinNodes = 32;

  Grid(Box box, std::array<int, 2> nodes);
  static Grid uniform(const Box& box, int nodes_per_axis);

  int dim() const { return box_.dim(); }
  const Box& box() const { return box_; }
  int nodes(int axis) const { return nodes_[axis]; }
  double spacing(int axis) const { return h_[axis]; }
  Eigen::Index size() const;

  Eigen::Index index(int i, int j = 0) const { return i + static_cast<Eigen::Index>(nodes_[0]) * j; }
  std::array<int, 2> coords(Eigen::Index k) const;
  Point node(Eigen::Index k) const;
  Point node(int i, int j) const;

  /// Trapezoidal quadrature weight of node k.
  double weight(Eigen::Index k) const;
  Eigen::VectorXd weights() const;

  /// Same box, `factor` times finer (nodes - 1 scaled by factor).
  Grid refined(int factor) const;

 private:
  Box box_;
  std::array<int, 2> nodes_;
  std::array<double, 2> h_;
};

/// Nodal scalar field with (bi)linear interpolation. Points outside the box are clamped.
class GridField {
 public:
  GridField(Grid grid, Eigen::VectorXd values);

  const Grid& grid() const { return grid_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }

  double value(const Point& x) const;
  /// Gradient of the interpolant (piecewise constant in 1D, piecewise linear in 2D).
  Point gradient(const Point& x) const;
  /// Gradient from central differences at the nodes, one-sided at the box faces.
  Eigen::MatrixXd nodal_gradient() const;
  /// Interpolates a nodal vector field (rows = nodes) at x.
  Point interpolate_rows(const Eigen::MatrixXd& nodal, const Point& x) const;

  double integral() const;

 private:
  struct Cell {
    int i, j;
    double tx, ty;
  };
  Cell locate(const Point& x) const;

  Grid grid_;
  Eigen::VectorXd values_;
};

}  // namespace milestone
