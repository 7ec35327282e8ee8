#pragma once

#include "milestone/core.hpp"
#include "milestone/grid.hpp"

#include <functional>
#include <memory>

namespace milestone {

/// Scalar function whose level sets are the milestones.
struct LevelFunction {
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;

  double operator()(const Point& x) const { return value(x); }

  /// f(x) = <direction, x> + offset.
  static LevelFunction linear(const Point& direction, double offset = 0.0);
  /// Interpolated grid field (committor or tabulated surrogate).
  static LevelFunction from_field(std::shared_ptr<const GridField> field);
  /// Gradient by central differences with step h.
  static LevelFunction with_numeric_gradient(std::function<double(const Point&)> value, double h);
};

/// Samples `f` at the grid nodes, giving an interpolated level function.
std::shared_ptr<const GridField> tabulate(const LevelFunction& f, const Grid& grid);

}  // namespace milestone
