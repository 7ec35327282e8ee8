#include "milestone/level.hpp"

namespace milestone {

LevelFunction LevelFunction::linear(const Point& direction, double offset) {
  if (direction.norm() == 0.0) throw InvalidArgument("linear level function: zero direction");
  return {[direction, offset](const Point& x) { return direction.dot(x) + offset; },
          [direction](const Point&) { return direction; }};
}

LevelFunction LevelFunction::from_field(std::shared_ptr<const GridField> field) {
  if (!field) throw InvalidArgument("level function: null field");
  return {[field](const Point& x) { return field->value(x); },
          [field](const Point& x) { return field->gradient(x); }};
}

LevelFunction LevelFunction::with_numeric_gradient(std::function<double(const Point&)> value, double h) {
  if (!(h > 0.0)) throw InvalidArgument("level function: difference step must be positive");
  auto grad = [value, h](const Point& x) {
    Point g(x.size());
    for (Eigen::Index a = 0; a < x.size(); ++a) {
      Point xp = x, xm = x;
      xp[a] += h;
      xm[a] -= h;
      g[a] = (value(xp) - value(xm)) / (2.0 * h);
    }
    return g;
  };
  return {std::move(value), grad};
}

std::shared_ptr<const GridField> tabulate(const LevelFunction& f, const Grid& grid) {
  Eigen::VectorXd v(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k) v[k] = f(grid.node(k));
  return std::make_shared<const GridField>(grid, std::move(v));
}

}  // namespace milestone
