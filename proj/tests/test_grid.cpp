#include <doctest.h>

#include "milestone/grid.hpp"

#include <cmath>

using namespace milestone;

TEST_CASE("grid rejects coarse resolutions") {
  const Box box{make_point(0.0), make_point(1.0)};
  CHECK_THROWS_AS(Grid(box, {16, 1}), InvalidArgument);
  CHECK_NOTHROW(Grid(box, {32, 1}));
}

TEST_CASE("trapezoid weights integrate linear fields exactly") {
  const Box box{make_point(-1.0, 0.0), make_point(2.0, 1.0)};
  const Grid g(box, {41, 33});
  Eigen::VectorXd v(g.size());
  for (Eigen::Index k = 0; k < g.size(); ++k) v[k] = 1.0 + g.node(k)[0] + 3.0 * g.node(k)[1];
  const GridField f(g, v);
  // integral of 1 + x + 3y over [-1,2]x[0,1] = 3 + 1.5 + 4.5
  CHECK(f.integral() == doctest::Approx(9.0).epsilon(1e-12));
}

TEST_CASE("bilinear interpolation reproduces bilinear functions") {
  const Box box{make_point(0.0, 0.0), make_point(1.0, 1.0)};
  const Grid g = Grid::uniform(box, 33);
  Eigen::VectorXd v(g.size());
  auto fn = [](const Point& x) { return 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1]; };
  for (Eigen::Index k = 0; k < g.size(); ++k) v[k] = fn(g.node(k));
  const GridField f(g, v);
  const Point x = make_point(0.3712, 0.8123);
  CHECK(f.value(x) == doctest::Approx(fn(x)).epsilon(1e-13));
  const Point grad = f.gradient(x);
  CHECK(grad[0] == doctest::Approx(2.0 + 0.5 * x[1]).epsilon(1e-12));
  CHECK(grad[1] == doctest::Approx(-1.0 + 0.5 * x[0]).epsilon(1e-12));
}

TEST_CASE("refined grid keeps the box and multiplies intervals") {
  const Box box{make_point(0.0), make_point(1.0)};
  const Grid g(box, {33, 1});
  const Grid r = g.refined(2);
  CHECK(r.nodes(0) == 65);
  CHECK(r.spacing(0) == doctest::Approx(g.spacing(0) / 2));
}
