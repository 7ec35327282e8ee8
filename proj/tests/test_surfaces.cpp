#include <doctest.h>

#include "milestone/surfaces.hpp"

#include <cmath>
#include <numbers>

using namespace milestone;

namespace {

Curve segment(Point a, Point b, int samples = 11) { return Curve::from_points({a, b}, samples); }

// Half circle of radius r from (r, 0) to (-r, 0), sampled unevenly.
Curve arc(int samples = 101, double r = 1.0) {
  std::vector<Point> pts;
  for (int k = 0; k <= 40; ++k) {
    const double u = static_cast<double>(k) / 40;
    const double t = std::numbers::pi * u * u * (3 - 2 * u);
    pts.push_back(make_point(r * std::cos(t), r * std::sin(t)));
  }
  return Curve::from_points(pts, samples);
}

}  // namespace

TEST_CASE("curve is parametrized by normalized arc length") {
  const Curve c = arc();
  double lo = 1e9, hi = 0.0;
  for (int k = 1; k <= c.segments(); ++k) {
    const double d = (c.points()[k] - c.points()[k - 1]).norm();
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  CHECK(hi / lo < 1.01);
  CHECK(c.length() == doctest::Approx(std::numbers::pi).epsilon(1e-3));
  CHECK((c.at(0.0) - make_point(1.0, 0.0)).norm() < 1e-12);
  CHECK((c.at(1.0) - make_point(-1.0, 0.0)).norm() < 1e-12);

  CHECK_THROWS_AS(Curve::from_points({make_point(1.0, 1.0), make_point(1.0, 1.0)}), InvalidArgument);
  CHECK_THROWS_AS(Curve::from_points({make_point(1.0, 1.0)}), InvalidArgument);

  const Curve reordered = Curve::from_parametrized({{1.0, make_point(2.0, 0.0)}, {0.0, make_point(0.0, 0.0)}}, 5);
  CHECK(reordered.at(0.25)[0] == doctest::Approx(0.5));
}

TEST_CASE("projection onto a curve") {
  const Curve s = segment(make_point(0.0, 0.0), make_point(1.0, 0.0));
  CHECK(project(s, make_point(0.3, 5.0)) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(project(s, make_point(-2.0, 1.0)) == 0.0);
  CHECK(project(s, make_point(7.0, -1.0)) == 1.0);

  // U shape: (0.5, 1) is equally far from the bottom and top legs; the bottom comes first.
  const Curve u = Curve::from_points({make_point(0, 0), make_point(2, 0), make_point(2, 2), make_point(0, 2)}, 61);
  CHECK(project(u, make_point(0.5, 1.0)) == doctest::Approx(0.5 / 6.0).epsilon(1e-9));

  const Curve c = arc();
  for (double s : {0.0, 0.17, 0.5, 0.83, 1.0}) {
    const Point x = c.at(s);
    CHECK((c.at(project(c, x)) - x).norm() < 1e-12);
  }
  // Orthogonality at interior minima, and invariance under uniform scaling.
  RngStream rng(3, 0);
  const Curve big = arc(101, 3.0);
  for (int n = 0; n < 50; ++n) {
    const Point x = make_point(2.4 * rng.uniform() - 1.2, 1.2 * rng.uniform() + 0.1);
    const double sx = project(c, x);
    const double k = std::min(std::floor(sx * c.segments()), c.segments() - 1.0);
    const Point tangent = c.points()[static_cast<std::size_t>(k) + 1] - c.points()[static_cast<std::size_t>(k)];
    const Point r = x - c.at(sx);
    const bool at_vertex = std::abs(sx * c.segments() - std::round(sx * c.segments())) < 1e-9;
    if (!at_vertex && sx > 0.0 && sx < 1.0) CHECK(std::abs(tangent.dot(r)) < 1e-8 * tangent.norm() * r.norm() + 1e-15);
    CHECK(project(big, 3.0 * x) == doctest::Approx(sx).epsilon(1e-9));
  }
}

TEST_CASE("rescale functions") {
  const auto id = Rescale::identity();
  CHECK(id(0.3) == 0.3);
  const auto lg = Rescale::logistic(8.0);
  CHECK(lg(0.0) == doctest::Approx(0.0));
  CHECK(lg(1.0) == doctest::Approx(1.0));
  CHECK(lg(0.5) == doctest::Approx(0.5));
  double prev = -1.0;
  for (int k = 0; k <= 100; ++k) {
    const double v = lg(k / 100.0);
    CHECK(v > prev);
    prev = v;
  }
  const auto tb = Rescale::table({0.0, 0.5, 1.0}, {0.0, 0.2, 1.0});
  CHECK(tb(0.25) == doctest::Approx(0.1));
  CHECK(tb(0.75) == doctest::Approx(0.6));
  CHECK_THROWS_AS(Rescale::table({0.0, 0.5, 1.0}, {0.0, 0.7, 0.6}), InvalidArgument);
  CHECK_THROWS_AS(Rescale::table({0.0, 1.0}, {0.1, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(Rescale::logistic(0.0), InvalidArgument);
}

TEST_CASE("smoothing a straight segment keeps the linear coordinate") {
  const Curve s = segment(make_point(0.0, 0.0), make_point(1.0, 0.0));
  RngStream rng(5, 0);
  for (int n = 0; n < 20; ++n) {
    const Point x = make_point(0.25 + 0.5 * rng.uniform(), 2.0 * rng.uniform() - 1.0);
    CHECK(std::abs(smoothed_committor(s, Rescale::identity(), 0.05, x) - x[0]) < 1e-6);
  }
  CHECK(smoothed_committor(s, Rescale::identity(), 0.05, make_point(-3.0, 0.0)) == 0.0);
  CHECK(smoothed_committor(s, Rescale::identity(), 0.05, make_point(3.0, 0.0)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(smoothed_committor(s, Rescale::identity(), 0.0, make_point(0.5, 0.0)), InvalidArgument);
}

TEST_CASE("vanishing width recovers Q of the projection") {
  const Curve c = arc();
  const auto lg = Rescale::logistic(6.0);
  RngStream rng(9, 0);
  for (int n = 0; n < 15; ++n) {
    const double t = std::numbers::pi * (0.1 + 0.8 * rng.uniform());
    const double r = 0.7 + 0.6 * rng.uniform();
    const Point x = make_point(r * std::cos(t), r * std::sin(t));
    const double f = smoothed_committor(c, lg, 1e-3, x);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    // First order in delta: s is flat in the wedges outside the polyline's vertices.
    CHECK(std::abs(f - lg(project(c, x))) < 1e-3);
  }
}

TEST_CASE("tabulated surrogate equals direct evaluation at the nodes") {
  const Curve c = arc(41);
  const auto lg = Rescale::logistic(4.0);
  const double delta = 0.1;
  const Box box{make_point(-1.5, -0.5), make_point(1.5, 1.5)};
  const auto table = tabulate_smoothed_committor(c, lg, delta, box);
  const Grid& g = table->grid();
  CHECK(g.spacing(0) == doctest::Approx(delta / 4));
  for (Eigen::Index k = 0; k < g.size(); k += 997) {
    CHECK(std::abs(table->values()[k] - smoothed_committor(c, lg, delta, g.node(k))) < 1e-12);
  }
  // Nested level sets: the surrogate increases along the curve.
  double prev = -1.0;
  for (int k = 0; k <= 20; ++k) {
    const double v = table->value(c.at(k / 20.0));
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("straight-segment milestones are planes") {
  // s = (x + 1) / 2 on the segment from (-1, 0) to (1, 0).
  const Curve s = segment(make_point(-1.0, 0.0), make_point(1.0, 0.0), 21);
  const Box box{make_point(-2.0, -1.0), make_point(2.0, 1.0)};
  const MilestoneSet m = milestones_from_curve(s, Rescale::identity(), 0.05, {0.75, 0.5, 0.25}, box);
  const auto& f = m.level_function();
  for (int i = 0; i < m.size(); ++i) {
    const double x = 2.0 * m.level(i) - 1.0;
    for (double y : {-0.8, -0.3, 0.0, 0.41, 0.9}) CHECK(std::abs(f(make_point(x, y)) - m.level(i)) < 1e-6);
  }
  CHECK_THROWS_AS(milestones_from_curve(s, Rescale::identity(), 0.05, {1.0, 0.5}, box), InvalidArgument);

  const Curve line = segment(make_point(-1.0), make_point(1.0));
  const auto t1 = tabulate_smoothed_committor(line, Rescale::identity(), 0.05, Box{make_point(-2.0), make_point(2.0)});
  CHECK(t1->value(make_point(0.2)) == doctest::Approx(0.6).epsilon(1e-9));
}
