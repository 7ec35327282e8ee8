#include <doctest.h>

#include "milestone/committor.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numeric>

using namespace milestone;

namespace {

std::shared_ptr<const DensityField> density(const DiffusionModel& m, const Grid& g) {
  return std::make_shared<const DensityField>(density_for(m, g));
}

}  // namespace

TEST_CASE("free Brownian committor is linear") {
  const auto bm = make_overdamped_langevin(flat_potential(1), 1.0, Box{make_point(-0.5), make_point(1.5)});
  const Grid g(bm.box, {81, 1});
  const auto rho = density(bm, g);
  const auto A = Region::halfspace(make_point(1.0), 0.0);    // x <= 0
  const auto B = Region::halfspace(make_point(-1.0), -1.0);  // x >= 1
  const auto qm = solve_backward_committor(bm, rho, A, B, g);
  const auto qp = solve_forward_committor(bm, rho, A, B, g);
  double err_m = 0, err_p = 0;
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    const double x = std::clamp(g.node(k)[0], 0.0, 1.0);
    err_m = std::max(err_m, std::abs(qm.values->values()[k] - (1 - x)));
    err_p = std::max(err_p, std::abs(qp.values->values()[k] - x));
  }
  CHECK(err_m < 1e-10);
  CHECK(err_p < 1e-10);

  const auto mesh = extract_level_set(qm, 0.25);
  REQUIRE(mesh.points.size() == 1);
  CHECK(mesh.points[0][0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK_THROWS_AS(extract_level_set(qm, 1.0), InvalidArgument);
  CHECK_THROWS_AS(extract_level_set(qm, -0.1), InvalidArgument);

  // rho = 1/2 on the box of length 2, |grad q| = 1, a = 1.
  for (double z : {0.2, 0.5, 0.8}) {
    const auto m = extract_level_set(qm, z);
    CHECK(surface_integral_Z(bm, *rho, qm, m) == doctest::Approx(0.5).epsilon(1e-9));
    const auto md = milestone_density(bm, *rho, qm, m);
    CHECK(md.values.size() == 1);
    CHECK(md.values[0] == doctest::Approx(1.0));
  }
}

TEST_CASE("OU committor against quadrature, and q- = 1 - q+") {
  const auto ou = make_builtin("ou_1d", 1.0);
  const Grid g(ou.box, {1201, 1});
  const auto rho = density(ou, g);
  const auto A = Region::halfspace(make_point(1.0), -1.0);
  const auto B = Region::halfspace(make_point(-1.0), -1.0);
  const auto qm = solve_backward_committor(ou, rho, A, B, g);
  const auto qp = solve_forward_committor(ou, rho, A, B, g);
  const Eigen::VectorXd sum = qm.values->values() + qp.values->values();
  CHECK((sum.array() - 1.0).abs().maxCoeff() < 1e-10);

  // q+(x) = int_{-1}^x e^{y^2/2} dy / int_{-1}^{1} e^{y^2/2} dy
  using boost::math::quadrature::gauss_kronrod;
  auto w = [](double y) { return std::exp(0.5 * y * y); };
  const double total = gauss_kronrod<double, 31>::integrate(w, -1.0, 1.0, 10, 1e-14);
  double err = 0.0;
  for (double x : {-0.6, -0.2, 0.1, 0.45, 0.9}) {
    const double exact = gauss_kronrod<double, 31>::integrate(w, -1.0, x, 10, 1e-14) / total;
    err = std::max(err, std::abs(qp(make_point(x)) - exact));
  }
  CHECK(err < 1e-5);
}

TEST_CASE("2D double well: symmetric half level and equal surface integrals") {
  const auto dw = make_builtin("double_well_2d", 2.0);
  const Grid g = Grid::uniform(dw.box, 201);
  const auto rho = density(dw, g);
  const auto A = Region::ball(make_point(-1.0, 0.0), 0.2);
  const auto B = Region::ball(make_point(1.0, 0.0), 0.2);
  const auto qm = solve_backward_committor(dw, rho, A, B, g);
  const auto qp = solve_forward_committor(dw, rho, A, B, g);
  const Eigen::VectorXd v = qm.values->values();
  CHECK(v.minCoeff() >= 0.0);
  CHECK(v.maxCoeff() <= 1.0);
  CHECK(((v + qp.values->values()).array() - 1.0).abs().maxCoeff() < 1e-8);

  const auto half = extract_level_set(qm, 0.5);
  for (const Point& p : half.points) {
    CHECK(std::abs(p[0]) < 2 * g.spacing(0));
    CHECK(std::abs(qm(p) - 0.5) < 1e-6);
  }
  std::vector<double> zs;
  for (double z : {0.2, 0.35, 0.5, 0.65, 0.8}) {
    const auto mesh = extract_level_set(qm, z);
    zs.push_back(surface_integral_Z(dw, *rho, qm, mesh));
    const auto md = milestone_density(dw, *rho, qm, mesh);
    CHECK(md.total() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(md.cdf(mesh.length()) == doctest::Approx(1.0).epsilon(1e-9));
  }
  const double mean = std::accumulate(zs.begin(), zs.end(), 0.0) / zs.size();
  double spread = 0.0;
  for (double z : zs) spread = std::max(spread, std::abs(z - mean) / mean);
  CHECK(spread < 0.02);
}

TEST_CASE("curl breaks the committor identity") {
  const auto m = make_builtin("nonrev_2d", 2.0, 0.5);
  const Grid g = Grid::uniform(m.box, 101);
  const auto rho = density(m, g);
  const auto A = Region::ball(make_point(-1.0, 0.0), 0.2);
  const auto B = Region::ball(make_point(1.0, 0.0), 0.2);
  const auto qm = solve_backward_committor(m, rho, A, B, g);
  const auto qp = solve_forward_committor(m, rho, A, B, g);
  const Eigen::VectorXd sum = qm.values->values() + qp.values->values();
  CHECK((sum.array() - 1.0).abs().maxCoeff() > 1e-6);
  CHECK(qm.values->values().minCoeff() >= 0.0);
  CHECK(qm.values->values().maxCoeff() <= 1.0);
}

TEST_CASE("overlapping or empty reactant sets are rejected") {
  const auto ou = make_builtin("ou_1d", 1.0);
  const Grid g(ou.box, {101, 1});
  const auto rho = density(ou, g);
  CHECK_THROWS_AS(solve_backward_committor(ou, rho, Region::halfspace(make_point(1.0), 0.5),
                                           Region::halfspace(make_point(-1.0), 0.5), g),
                  InvalidArgument);
  CHECK_THROWS_AS(solve_backward_committor(ou, rho, Region::ball(make_point(0.05), 1e-6),
                                           Region::halfspace(make_point(-1.0), -1.0), g),
                  InvalidArgument);
}

TEST_CASE("disconnected levels are rejected when connectivity is required") {
  const Box box{make_point(-2.0, -1.0), make_point(2.0, 1.0)};
  const Grid g = Grid::uniform(box, 81);
  Eigen::VectorXd v(g.size());
  for (Eigen::Index k = 0; k < g.size(); ++k) v[k] = std::abs(g.node(k)[0]);
  const GridField f(g, v);
  CHECK_THROWS_WITH(extract_level_set(f, 1.0), doctest::Contains("disconnected milestone"));
  CHECK_NOTHROW(extract_level_set(f, 1.0, false));

  // x^9 is flat at the origin: the nodal gradient there is h^8.
  for (Eigen::Index k = 0; k < g.size(); ++k) v[k] = std::pow(g.node(k)[0], 9);
  CHECK_THROWS_WITH(extract_level_set(GridField(g, v), 0.0), doctest::Contains("irregular"));
}

TEST_CASE("closed level sets form loops") {
  const Box box{make_point(-1.0, -1.0), make_point(1.0, 1.0)};
  const Grid g = Grid::uniform(box, 101);
  Eigen::VectorXd v(g.size());
  for (Eigen::Index k = 0; k < g.size(); ++k) v[k] = g.node(k).squaredNorm();
  const auto mesh = extract_level_set(GridField(g, v), 0.25);
  CHECK(mesh.closed);
  CHECK(mesh.length() == doctest::Approx(M_PI).epsilon(1e-3));
  CHECK(mesh.arc_coordinate(mesh.points[10]) == doctest::Approx(mesh.arc_length[10]));
}

TEST_CASE("analytic transition probabilities") {
  const auto q3 = analytic_q({1.0, 0.5, 0.0});
  CHECK(q3(1, 0) == doctest::Approx(0.5));
  CHECK(q3(1, 2) == doctest::Approx(0.5));
  const auto q = analytic_q({1.0, 0.75, 0.25, 0.0});
  CHECK(q(1, 0) == doctest::Approx(2.0 / 3));
  CHECK(q(1, 2) == doctest::Approx(1.0 / 3));
  CHECK(q(2, 1) == doctest::Approx(1.0 / 3));
  CHECK(q(2, 3) == doctest::Approx(2.0 / 3));
  CHECK(q(0, 1) == 1.0);
  CHECK(q(3, 2) == 1.0);
  for (int i = 0; i < 4; ++i) CHECK(q.row(i).sum() == 1.0);
  CHECK(q.minCoeff() >= 0.0);
  CHECK_THROWS_AS(analytic_q({0.0, 1.0}), InvalidArgument);
}
