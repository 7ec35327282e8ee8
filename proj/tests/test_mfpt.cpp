#include <doctest.h>

#include "milestone/mfpt.hpp"

#include <cmath>

using namespace milestone;

namespace {

// Nearest-neighbour chain on n milestones with the given up-probabilities (toward index 0).
Eigen::MatrixXd birth_death(const std::vector<double>& up) {
  const int n = static_cast<int>(up.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  p(0, 1) = 1.0;
  p(n - 1, n - 2) = 1.0;
  for (int i = 1; i + 1 < n; ++i) {
    p(i, i - 1) = up[static_cast<std::size_t>(i)];
    p(i, i + 1) = 1.0 - up[static_cast<std::size_t>(i)];
  }
  return p;
}

// Kernel with one bin per milestone reproducing p and t exactly (counts scaled by `scale`).
KernelEstimate single_bin_kernel(const Eigen::MatrixXd& p, const Eigen::VectorXd& t, double scale) {
  KernelEstimate k;
  const int n = static_cast<int>(p.rows());
  for (int i = 0; i < n; ++i) k.milestones.push_back({{0.0, 0.0}, i});
  k.batches = 2;
  for (int b = 0; b < 2; ++b) {
    k.batch_counts.push_back(p * scale);
    k.batch_time_sums.push_back(t * scale);
  }
  return k;
}

}  // namespace

TEST_CASE("one-step chain") {
  Eigen::MatrixXd p(2, 2);
  p << 0, 1, 1, 0;
  const auto s = solve_optimal(p, Eigen::Vector2d(2.5, 7.0), 1);
  CHECK(s.values[0] == doctest::Approx(2.5));
  CHECK(s.values[1] == 0.0);
  CHECK(s.method == "optimal");
}

TEST_CASE("three milestones at z = (1, 0.5, 0)") {
  const auto q = analytic_q({1.0, 0.5, 0.0});
  const auto s = solve_optimal(q, Eigen::Vector3d::Ones(), 2);
  CHECK(s.values[0] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(s.values[1] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(s.residual < 1e-10);

  // Delta method with G = (I - P_rr)^-1 = [[2, 2], [1, 2]].
  const Eigen::VectorXd se = Eigen::Vector3d(0.1, 0.2, 0.0);
  const auto e = solve_optimal(q, Eigen::VectorXd::Ones(3), 2, &se);
  CHECK(e.stderr_[0] == doctest::Approx(std::sqrt(4 * 0.01 + 4 * 0.04)));
  CHECK(e.stderr_[1] == doctest::Approx(std::sqrt(0.01 + 4 * 0.04)));
}

TEST_CASE("relabelling milestones permutes the solution") {
  const auto p = birth_death({0, 0.3, 0.6, 0.45, 0});
  const Eigen::VectorXd t = (Eigen::VectorXd(5) << 1.0, 2.0, 0.5, 1.5, 3.0).finished();
  const auto s = solve_optimal(p, t, 4);
  Eigen::PermutationMatrix<5> perm;
  perm.indices() << 3, 0, 4, 1, 2;  // old index k becomes perm(k)
  const Eigen::MatrixXd pp = perm * p * perm.transpose();
  const Eigen::VectorXd tp = perm * t;
  const auto sp = solve_optimal(pp, tp, perm.indices()[4]);
  CHECK((perm * s.values - sp.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("direct solve is the minimal fixed point") {
  for (const auto& up : {std::vector<double>{0, 0.5, 0}, std::vector<double>{0, 0.3, 0.6, 0.45, 0},
                         std::vector<double>{0, 0.9, 0.9, 0.9, 0.9, 0}}) {
    const auto p = birth_death(up);
    const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(p.rows(), 1.0, 2.0);
    for (int target : {0, static_cast<int>(p.rows()) - 1}) {
      const auto direct = solve_optimal(p, t, target);
      const auto iterated = value_iteration(p, t, target);
      CHECK((direct.values - iterated).cwiseAbs().maxCoeff() < 1e-9 * direct.values.maxCoeff());
    }
  }
}

TEST_CASE("larger residence raises every upstream MFPT") {
  const auto p = birth_death({0, 0.5, 0});
  Eigen::Vector3d t = Eigen::Vector3d::Ones();
  const auto base = solve_optimal(p, t, 2);
  t[1] += 0.1;
  const auto more = solve_optimal(p, t, 2);
  CHECK(more.values[0] > base.values[0]);
  CHECK(more.values[1] > base.values[1]);
  t = Eigen::Vector3d::Ones();
  t[0] += 0.1;
  const auto more0 = solve_optimal(p, t, 2);
  CHECK(more0.values[1] > base.values[1]);
}

TEST_CASE("solver contracts") {
  Eigen::MatrixXd trapped(3, 3);
  trapped << 0, 1, 0, 1, 0, 0, 0, 1, 0;
  CHECK_THROWS_AS(solve_optimal(trapped, Eigen::Vector3d::Ones(), 2), NumericalError);
  CHECK_THROWS_AS(solve_optimal(birth_death({0, 0.5, 0}), Eigen::Vector3d(1, -1, 1), 2), InvalidArgument);
  CHECK_THROWS_AS(solve_optimal(birth_death({0, 0.5, 0}), Eigen::Vector3d::Ones(), 3), InvalidArgument);
}

TEST_CASE("exact milestoning with one bin equals optimal milestoning") {
  const auto p = birth_death({0, 0.3, 0.6, 0});
  const Eigen::Vector4d t(1.0, 2.0, 0.5, 1.5);
  const auto k = single_bin_kernel(p, t, 1000.0);
  for (int target : {0, 3}) {
    const auto opt = solve_optimal(p, t, target);
    for (auto solver : {ExactSolver::direct, ExactSolver::iterative}) {
      const auto ex = solve_exact(k, target, nullptr, solver);
      CHECK((ex.reduced.values - opt.values).cwiseAbs().maxCoeff() < 1e-9);
      CHECK(ex.field.values[static_cast<std::size_t>(target)].isZero());
    }
    CHECK(solve_exact(k, target).field.iterative);
  }
}

TEST_CASE("fixed point and direct kernel solves agree") {
  // Three milestones, two bins each, target milestone 2.
  KernelEstimate k;
  k.milestones = {{{0.0, 0.5, 1.0}, 0}, {{0.0, 0.5, 1.0}, 2}, {{0.0, 0.5, 1.0}, 4}};
  k.batches = 1;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(6, 6);
  c.row(0) << 0, 0, 30, 70, 0, 0;
  c.row(1) << 0, 0, 55, 45, 0, 0;
  c.row(2) << 20, 10, 0, 0, 40, 30;
  c.row(3) << 5, 25, 0, 0, 10, 60;
  c.row(4) << 0, 0, 50, 50, 0, 0;
  c.row(5) << 0, 0, 50, 50, 0, 0;
  k.batch_counts = {c};
  k.batch_time_sums = {(Eigen::VectorXd(6) << 100, 120, 90, 80, 100, 100).finished()};
  const auto direct = solve_exact(k, 2, nullptr, ExactSolver::direct);
  const auto iter = solve_exact(k, 2, nullptr, ExactSolver::iterative);
  CHECK(iter.field.iterative);
  CHECK_FALSE(direct.field.iterative);
  for (int i = 0; i < 2; ++i) {
    CHECK((direct.field.values[static_cast<std::size_t>(i)] - iter.field.values[static_cast<std::size_t>(i)])
              .cwiseAbs()
              .maxCoeff() < 1e-9);
  }
  CHECK(direct.reduced.residual < 1e-10);

  const auto mu = kernel_hitting_weights(k);
  for (const auto& w : mu) CHECK(w.sum() == doctest::Approx(1.0));

  k.batch_counts[0].row(1).setZero();
  CHECK_THROWS_WITH_AS(solve_exact(k, 2), doctest::Contains("no samples"), InvalidArgument);
}

TEST_CASE("quadrature oracle for OU") {
  const auto ou = make_builtin("ou_1d", 1.0);
  const double t = mfpt_quadrature_1d(ou, -1.0, 1.0);
  // Reflecting at the box edge -6, not at -infinity.
  CHECK(t == doctest::Approx(2.9953146564208).epsilon(1e-10));
  CHECK(mfpt_quadrature_1d(ou, 1.0, -1.0) == doctest::Approx(t).epsilon(1e-12));
  const auto wide = with_box(ou, Box{make_point(-12.0), make_point(12.0)});
  CHECK(std::abs(mfpt_quadrature_1d(wide, -1.0, 1.0) - t) < 1e-6);
}

TEST_CASE("quadrature oracle contracts") {
  const auto flat = make_overdamped_langevin(flat_potential(1), 1.0, Box{make_point(0.0), make_point(1.0)}, "flat");
  CHECK_THROWS_WITH_AS(mfpt_quadrature_1d(flat, 0.2, 0.8), doctest::Contains("confining"), InvalidArgument);
  CHECK_THROWS_AS(mfpt_quadrature_1d(make_builtin("double_well_2d", 1.0), 0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(mfpt_quadrature_1d(make_builtin("nonrev_2d", 1.0, 0.5), 0.0, 1.0), InvalidArgument);
}

TEST_CASE("empirical MFPT on OU matches the oracle and is symmetric") {
  const auto ou = make_builtin("ou_1d", 1.0);
  const MilestoneSet pair(LevelFunction::linear(make_point(-1.0)), {1.0, -1.0});  // M_0 at x = -1
  RngStream rng(77, 0);
  EmpiricalOptions opt;
  opt.workers = 4;
  opt.crossing = CrossingRule::bridge;
  const auto e = mfpt_empirical(ou, pair, 2000, 1e-3, rng, opt);
  const double oracle = mfpt_quadrature_1d(ou, -1.0, 1.0);
  CHECK(e.transitions >= 2000);
  CHECK(std::abs(e.forward - oracle) < 3 * e.forward_stderr);
  CHECK(std::abs(z_score(e.forward, e.forward_stderr, e.backward, e.backward_stderr)) < 3.0);
}
