#include <doctest.h>

#include "milestone/model.hpp"
#include "milestone/rng.hpp"

#include <cmath>

using namespace milestone;

TEST_CASE("overdamped Langevin drift and diffusion") {
  const Box box{make_point(-3.0), make_point(3.0)};
  const auto dw = make_overdamped_langevin(double_well_1d_potential(), 1.0, box);
  const Point x = make_point(0.7);
  CHECK(dw.drift(x)[0] == doctest::Approx(-4.0 * 0.7 * (0.49 - 1.0)));
  CHECK(dw.diffusion(x)(0, 0) == doctest::Approx(1.0));
  CHECK(dw.reversible);

  const auto ou = make_overdamped_langevin(ou_potential(), 2.0, box);
  CHECK(ou.drift(x)[0] == doctest::Approx(-0.7));
  CHECK(ou.diffusion(x)(0, 0) == doctest::Approx(0.5));

  const auto bm = make_overdamped_langevin(flat_potential(1), 1.0, box);
  CHECK(bm.drift(x)[0] == 0.0);
  CHECK(bm.diffusion(x)(0, 0) == 1.0);

  CHECK_THROWS_AS(make_overdamped_langevin(ou_potential(), 0.0, box), InvalidArgument);
  CHECK_THROWS_AS(make_overdamped_langevin(ou_potential(), -1.0, box), InvalidArgument);
}

TEST_CASE("noise factor squares to the diffusion tensor and drift matches -a beta grad V") {
  RngStream rng(3, 0);
  for (const char* name : {"ou_1d", "double_well_1d", "double_well_2d", "nonrev_2d"}) {
    const auto m = make_builtin(name, 1.7, 0.5);
    std::vector<Point> pts;
    for (int k = 0; k < 1000; ++k) {
      Point x(m.dim);
      for (int a = 0; a < m.dim; ++a) x[a] = m.box.lower[a] + rng.uniform() * (m.box.upper[a] - m.box.lower[a]);
      pts.push_back(x);
      if (m.reversible) {
        const Point expect = -(m.diffusion(x) * m.beta * m.potential->gradient(x));
        CHECK((m.drift(x) - expect).norm() < 1e-12);
      }
    }
    const auto chk = check_diffusion_tensor(m, pts);
    CHECK(chk.max_factor_error < 1e-12);
    CHECK(chk.min_eigenvalue > 0.0);
  }
}

TEST_CASE("OU density at the origin") {
  const auto ou = make_builtin("ou_1d", 1.0, 0.0, Box{make_point(-6.0), make_point(6.0)});
  // e^{-x^2/2} loses ~2e-9 of its mass outside [-6, 6].
  CHECK(invariant_density(ou, make_point(0.0)) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-7));
}

TEST_CASE("flat potential gives a uniform density") {
  const auto bm = make_overdamped_langevin(flat_potential(1), 1.0, Box{make_point(0.0), make_point(2.0)});
  CHECK(invariant_density(bm, make_point(0.3)) == doctest::Approx(0.5));
  CHECK(invariant_density(bm, make_point(1.9)) == doctest::Approx(0.5));
  const auto rho = solve_invariant_density(bm, Grid(bm.box, {64, 1}));
  CHECK((rho.field.values().array() - 0.5).abs().maxCoeff() < 1e-12);
}

TEST_CASE("non-reversible model needs a density field") {
  const auto m = make_builtin("nonrev_2d", 2.0, 0.5);
  CHECK_THROWS_WITH_AS(invariant_density(m, make_point(0.0, 0.0)), doctest::Contains("density unavailable"),
                       NumericalError);
}

TEST_CASE("solved density matches the Boltzmann density, second order") {
  const auto dw = make_builtin("double_well_1d", 3.0);
  const Grid g(dw.box, {201, 1});
  const auto solved = solve_invariant_density(dw, g);
  const auto exact = analytic_density(dw, g);
  CHECK(solved.field.integral() == doctest::Approx(1.0).epsilon(1e-8));
  const double e1 = (solved.field.values() - exact.field.values()).cwiseAbs().maxCoeff();
  const Grid g2 = g.refined(2);
  const double e2 = (solve_invariant_density(dw, g2).field.values() - analytic_density(dw, g2).field.values())
                        .cwiseAbs()
                        .maxCoeff();
  CHECK(e1 < 1e-2 * exact.field.values().maxCoeff());
  CHECK(e1 / e2 > 3.5);
}

TEST_CASE("rotational drift keeps exp(-beta V) invariant") {
  const auto m = make_builtin("nonrev_2d", 2.0, 0.5);
  const Grid g = Grid::uniform(m.box, 121);
  const auto solved = solve_invariant_density(m, g);
  auto rev = make_builtin("double_well_2d", 2.0);
  const auto exact = analytic_density(rev, g);
  const double peak = exact.field.values().maxCoeff();
  CHECK((solved.field.values() - exact.field.values()).cwiseAbs().maxCoeff() < 0.02 * peak);
}

TEST_CASE("stationary current: zero under detailed balance, divergence-free otherwise") {
  const auto rev = make_builtin("double_well_2d", 2.0);
  const Grid g = Grid::uniform(rev.box, 101);
  const auto rho = analytic_density(rev, g);
  const Eigen::MatrixXd j_rev = stationary_current_nodes(rev, rho);

  const auto nonrev = make_builtin("nonrev_2d", 2.0, 0.5);
  const auto rho_n = solve_invariant_density(nonrev, g);
  const Eigen::MatrixXd j = stationary_current_nodes(nonrev, rho_n);
  const double jmax = j.cwiseAbs().maxCoeff();
  CHECK(jmax > 0.1);
  CHECK(j_rev.cwiseAbs().maxCoeff() < 0.05 * jmax);
  const Eigen::VectorXd div = nodal_divergence(g, j);
  const double dscale = jmax / g.spacing(0);
  CHECK(div.cwiseAbs().maxCoeff() < 0.05 * dscale);

  const auto bm = make_overdamped_langevin(flat_potential(1), 1.0, Box{make_point(0.0), make_point(1.0)});
  const auto rho_bm = analytic_density(bm, Grid(bm.box, {40, 1}));
  CHECK(stationary_current(bm, rho_bm, make_point(0.4)).norm() < 1e-12);
  CHECK_THROWS_AS(stationary_current(bm, rho_bm, make_point(1.5)), InvalidArgument);
}

TEST_CASE("Boltzmann density residual shrinks fourfold per halving") {
  const auto dw = make_builtin("double_well_1d", 1.0);
  auto residual = [&](int n) {
    const Grid g(dw.box, {n, 1});
    const auto rho = analytic_density(dw, g);
    const Eigen::VectorXd r = adjoint_operator(dw, g) * rho.field.values();
    // operator rows are integrated over cells of width h
    return r.cwiseAbs().maxCoeff() / g.spacing(0);
  };
  const double r1 = residual(201), r2 = residual(401);
  CHECK(r1 / r2 > 3.5);
}
