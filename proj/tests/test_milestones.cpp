#include <doctest.h>

#include "milestone/milestones.hpp"

#include <cmath>

using namespace milestone;

TEST_CASE("levels must decrease strictly") {
  const auto f = LevelFunction::linear(make_point(1.0));
  CHECK_THROWS_AS(MilestoneSet(f, {0.0, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(MilestoneSet(f, {0.5, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(MilestoneSet(f, {}), InvalidArgument);
  const MilestoneSet m(f, {0.5, 0.0, -0.5});
  CHECK(m.count_at_or_above(0.7) == 0);
  CHECK(m.count_at_or_above(0.5) == 1);
  CHECK(m.count_at_or_above(0.2) == 1);
  CHECK(m.count_at_or_above(-1.0) == 3);
}

TEST_CASE("index assignment") {
  const std::vector<double> z{1.0, 0.5, 0.0};
  CHECK(assign_index(0.7, 0.3, 1, z) == 1);            // no crossing
  CHECK(assign_index(0.2, -0.1, 1, z) == 2);           // crosses z_2
  CHECK(assign_index(0.5, 1, z) == 1);                 // re-touch keeps the index
  CHECK(assign_index(0.5, assign_index(0.5, 1, z), z) == 1);
  CHECK_FALSE(assign_index(0.7, std::nullopt, z).has_value());
  CHECK(assign_index(0.0, std::nullopt, z) == 2);
  CHECK(assign_index(1.2, -0.2, 0, z) == 2);           // a wide step: last crossed wins
}

TEST_CASE("OU chain has only nearest-neighbour jumps") {
  const auto ou = make_builtin("ou_1d", 1.0);
  const MilestoneSet m(LevelFunction::linear(make_point(1.0)), {0.5, 0.0, -0.5});
  RngStream rng(17, 0);
  const auto chain = extract_chain(ou, m, make_point(0.1), 200.0, 1e-3, rng);
  REQUIRE(chain.size() > 50);
  CHECK_NOTHROW(chain.validate());
  for (const double a : chain.lags()) CHECK(a > 0.0);
  for (const auto& e : chain.events) CHECK(std::abs(e.position[0] - m.level(e.index)) < kCrossingTolerance);
}

TEST_CASE("short runs give an empty chain") {
  const auto ou = make_builtin("ou_1d", 1.0);
  const MilestoneSet m(LevelFunction::linear(make_point(1.0)), {3.0, 2.5});
  RngStream rng(1, 0);
  CHECK(extract_chain(ou, m, make_point(0.0), 0.01, 1e-3, rng).empty());
}

TEST_CASE("cells") {
  const MilestoneSet m(LevelFunction::linear(make_point(1.0)), {0.8, 0.5, 0.2});
  const auto c1 = cell(m, 1);
  CHECK(c1.lower->level == 0.2);
  CHECK(c1.upper->level == 0.8);
  const auto c0 = cell(m, 0);
  CHECK(c0.lower->level == 0.5);
  CHECK_FALSE(c0.upper.has_value());
  CHECK(c0.contains(100.0));
  const auto c2 = cell(m, 2);
  CHECK(c2.upper->level == 0.5);
  CHECK_FALSE(c2.lower.has_value());
  CHECK_THROWS_AS(cell(m, 3), InvalidArgument);
  CHECK_THROWS_AS(cell(m, -1), InvalidArgument);
}

TEST_CASE("restriction") {
  const MilestoneSet m(LevelFunction::linear(make_point(1.0)), {0.8, 0.6, 0.4, 0.2, 0.0});
  const auto ends = restrict(m, {0, 4});
  CHECK(ends.levels() == std::vector<double>{0.8, 0.0});
  CHECK(ends.labels() == std::vector<int>{0, 4});
  CHECK(restrict(m, {0, 1, 2, 3, 4}).levels() == m.levels());
  CHECK(restrict(m, {2, 4}).levels() == std::vector<double>{0.4, 0.0});
  CHECK_THROWS_AS(restrict(m, {}), InvalidArgument);
  CHECK_THROWS_AS(restrict(m, {3, 1}), InvalidArgument);
}

TEST_CASE("restricted chain equals the full chain with other indices erased") {
  const auto ou = make_builtin("ou_1d", 1.0);
  const MilestoneSet full(LevelFunction::linear(make_point(1.0)), {0.8, 0.4, 0.0, -0.4, -0.8});
  const auto pair = restrict(full, {1, 3});
  RngStream a(5, 3), b(5, 3);
  const auto cf = extract_chain(ou, full, make_point(0.0), 300.0, 1e-3, a);
  const auto cp = extract_chain(ou, pair, make_point(0.0), 300.0, 1e-3, b);
  // Erase events off {1, 3}, then collapse repeats: the pair chain's first hits.
  std::vector<std::pair<int, double>> expect;
  for (const auto& e : cf.events) {
    if (e.index != 1 && e.index != 3) continue;
    const int label = e.index == 1 ? 0 : 1;
    if (!expect.empty() && expect.back().first == label) continue;
    expect.emplace_back(label, e.time);
  }
  REQUIRE(cp.size() == expect.size());
  REQUIRE(cp.size() > 10);
  for (std::size_t n = 0; n < cp.size(); ++n) {
    CHECK(cp.events[n].index == expect[n].first);
    CHECK(cp.events[n].time == expect[n].second);
  }
}

TEST_CASE("point on a level") {
  const auto f = LevelFunction::linear(make_point(1.0, 1.0));
  const Box box{make_point(-1.0, -1.0), make_point(1.0, 1.0)};
  const Point p = find_point_on_level(f, 0.3, box);
  CHECK(f(p) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK_THROWS_AS(find_point_on_level(f, 5.0, box), NumericalError);
}
