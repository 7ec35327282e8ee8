#include <doctest.h>

#include "milestone/estimate.hpp"

#include <algorithm>
#include <cmath>

using namespace milestone;

namespace {

TransitionStats random_stats(std::uint64_t seed) {
  TransitionStats s(3, 4, 10);
  RngStream rng(seed, 0);
  for (int n = 0; n < 50; ++n) {
    const int i = static_cast<int>(rng.uniform() * 3);
    const int j = i == 1 ? (rng.uniform() < 0.5 ? 0 : 2) : 1;
    s.add_transition(i, j, rng.uniform(), static_cast<int>(rng.uniform() * 4));
    s.hits[static_cast<std::size_t>(j)].offer(make_point(rng.uniform()), rng);
  }
  s.total_time = 50.0;
  return s;
}

bool same_sums(const TransitionStats& a, const TransitionStats& b) {
  return a.counts.isApprox(b.counts, 1e-14) && a.lag_sums.isApprox(b.lag_sums, 1e-14) &&
         a.residence.isApprox(b.residence, 1e-14) && a.batch_counts.isApprox(b.batch_counts, 1e-14) &&
         a.batch_residence.isApprox(b.batch_residence, 1e-14) && std::abs(a.total_time - b.total_time) < 1e-12;
}

// Birth-death chain on 0..n-1 with reflecting ends; exponential lags with rate depending on
// (current, next) only, so the chain and its lags are exactly first order.
CoarseChain markov_chain(int n, long long events, std::uint64_t seed, double persistence = 0.5) {
  RngStream rng(seed, 0);
  CoarseChain c;
  int cur = n / 2, prev = cur - 1;
  double t = 0.0;
  for (long long e = 0; e < events; ++e) {
    c.events.push_back({cur, t, make_point(static_cast<double>(cur))});
    int next;
    if (cur == 0) next = 1;
    else if (cur == n - 1) next = n - 2;
    else {
      // persistence 0.5 is memoryless; otherwise the step repeats the last direction.
      const int dir = cur - prev;
      next = rng.uniform() < persistence ? cur + dir : cur - dir;
    }
    t += -std::log(rng.uniform()) * (1.0 + 0.5 * next);
    prev = cur;
    cur = next;
  }
  return c;
}

LevelSetMesh point_mesh(double x) {
  LevelSetMesh m;
  m.level = x;
  m.dim = 1;
  m.points = {make_point(x)};
  return m;
}

}  // namespace

TEST_CASE("merge is associative and commutative and equals pooling") {
  const auto a = random_stats(1), b = random_stats(2), c = random_stats(3);
  RngStream rng(0, 0);
  auto ab_c = a;
  ab_c.merge(b, rng);
  ab_c.merge(c, rng);
  auto bc = b;
  bc.merge(c, rng);
  auto a_bc = a;
  a_bc.merge(bc, rng);
  auto cba = c;
  cba.merge(b, rng);
  cba.merge(a, rng);
  CHECK(same_sums(ab_c, a_bc));
  CHECK(same_sums(ab_c, cba));
  CHECK(ab_c.p_hat().isApprox(cba.p_hat(), 1e-14));
  CHECK(ab_c.t_hat().isApprox(cba.t_hat(), 1e-14));
  for (const auto& r : ab_c.hits) {
    CHECK(r.samples.size() == std::min<std::size_t>(r.seen, r.cap));
  }

  TransitionStats pooled(3, 4, 10);
  for (const auto* s : {&a, &b, &c}) {
    for (int i = 0; i < 3; ++i) {
      for (int bt = 0; bt < 4; ++bt) {
        pooled.batch_counts(i, bt) += s->batch_counts(i, bt);
        pooled.batch_residence(i, bt) += s->batch_residence(i, bt);
      }
    }
    pooled.counts += s->counts;
    pooled.lag_sums += s->lag_sums;
    pooled.residence += s->residence;
    pooled.total_time += s->total_time;
  }
  CHECK(same_sums(pooled, ab_c));
  CHECK_THROWS_AS(pooled.merge(TransitionStats(2, 4, 10), rng), InvalidArgument);
}

TEST_CASE("estimators on a hand-filled table") {
  TransitionStats s(3, 2, 10);
  s.add_transition(1, 0, 2.0, 0);
  s.add_transition(1, 2, 4.0, 1);
  s.add_transition(1, 2, 6.0, 1);
  s.add_transition(0, 1, 1.0, 0);
  const auto p = s.p_hat();
  CHECK(p(1, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(p(1, 2) == doctest::Approx(2.0 / 3.0));
  CHECK(p(0, 1) == 1.0);
  CHECK(p.row(2).sum() == 0.0);
  CHECK(s.t_hat()[1] == doctest::Approx(4.0));
  CHECK(std::isnan(s.t_hat()[2]));
  CHECK(s.p_stderr()(1, 0) == doctest::Approx(std::sqrt(2.0 / 9.0 / 3.0)));
  CHECK(s.undersampled(2.0) == std::vector<int>{0, 2});
}

TEST_CASE("stationary law of the index chain") {
  Eigen::MatrixXd flip(2, 2);
  flip << 0, 1, 1, 0;
  const auto pi2 = stationary_index(flip);
  CHECK(pi2[0] == doctest::Approx(0.5));
  CHECK(pi2[1] == doctest::Approx(0.5));

  const auto pi3 = stationary_index(analytic_q({1.0, 0.5, 0.0}));
  CHECK(pi3[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(pi3[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(pi3[2] == doctest::Approx(0.25).epsilon(1e-12));

  Eigen::MatrixXd reducible(3, 3);
  reducible << 0, 1, 0, 1, 0, 0, 0, 0, 1;
  CHECK_THROWS_WITH_AS(stationary_index(reducible), doctest::Contains("unreachable indices: 2"), NumericalError);
  Eigen::MatrixXd bad(2, 2);
  bad << 0.5, 0.4, 1, 0;
  CHECK_THROWS_AS(stationary_index(bad), InvalidArgument);
}

TEST_CASE("two milestones: each row is a single certain transition") {
  const auto ou = make_builtin("ou_1d", 1.0);
  const MilestoneSet m(LevelFunction::linear(make_point(1.0)), {0.5, -0.5});
  RngStream rng(4, 0);
  const auto s = estimate_long(ou, m, 200.0, 1e-3, rng);
  REQUIRE(s.hit_counts().minCoeff() > 10);
  CHECK(s.p_hat()(0, 1) == 1.0);
  CHECK(s.p_hat()(1, 0) == 1.0);
  CHECK(s.t_hat().minCoeff() > 0.0);
  CHECK(s.residence.sum() <= s.total_time);

  RngStream cells_rng(4, 1);
  const auto c = estimate_cells(ou, m, 50, 1e-3, cells_rng);
  CHECK(c.p_hat()(0, 1) == 1.0);
  CHECK(c.p_hat()(1, 0) == 1.0);
}

TEST_CASE("cell sampling does not depend on the worker count") {
  const auto dw = make_builtin("double_well_1d", 2.0);
  const MilestoneSet m(LevelFunction::linear(make_point(1.0)), {0.6, 0.0, -0.6});
  SamplingOptions one, four;
  four.workers = 4;
  RngStream a(8, 0), b(8, 0);
  const auto s1 = estimate_cells(dw, m, 200, 1e-3, a, one);
  const auto s4 = estimate_cells(dw, m, 200, 1e-3, b, four);
  CHECK(s1.counts == s4.counts);
  CHECK(s1.residence == s4.residence);
  CHECK(s1.batch_residence == s4.batch_residence);
  for (int i = 0; i < 3; ++i) CHECK(s1.hit_counts()[i] == 200);
  CHECK(s1.p_hat().rowwise().sum().isApprox(Eigen::VectorXd::Ones(3), 1e-15));
}

TEST_CASE("empirical index frequencies balance with the estimated chain") {
  const auto chain = markov_chain(4, 200000, 21);
  const auto s = chain_statistics(chain, 4, chain.events.back().time);
  const auto freq = empirical_index_frequencies(s);
  const Eigen::VectorXd pi = stationary_index(s.p_hat());
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(freq.pi[i] - pi[i]) < 4 * freq.stderr_[i]);
    CHECK(freq.stderr_[i] > 0.0);
  }
  CHECK(freq.pi.sum() == doctest::Approx(1.0));
}

TEST_CASE("hit histogram in 1D is a single unit bin") {
  TransitionStats s(2, 2, 1000);
  RngStream rng(0, 0);
  for (int n = 0; n < 600; ++n) s.hits[0].offer(make_point(0.5), rng);
  const auto h = hit_histogram(s, 0, point_mesh(0.5));
  CHECK(h.density == std::vector<double>{1.0});
  CHECK_THROWS_AS(hit_histogram(s, 1, point_mesh(-0.5)), NumericalError);
}

TEST_CASE("1D kernel reduces to the index chain") {
  const auto ou = make_builtin("ou_1d", 1.0);
  const MilestoneSet m(LevelFunction::linear(make_point(1.0)), {0.5, 0.0, -0.5});
  const std::vector<LevelSetMesh> meshes{point_mesh(0.5), point_mesh(0.0), point_mesh(-0.5)};
  RngStream rng(31, 0);
  const auto k = estimate_kernel(ou, m, meshes, 4000, 1e-3, rng);
  REQUIRE(k.states() == 3);
  const auto nu = k.nu();
  CHECK(nu.rowwise().sum().isApprox(Eigen::VectorXd::Ones(3), 1e-12));
  CHECK(nu.diagonal().isZero());
  CHECK(nu(0, 2) == 0.0);
  // By symmetry the middle milestone splits evenly.
  CHECK(std::abs(nu(1, 0) - 0.5) < 4 * std::sqrt(0.25 / 4000));

  // tau on each milestone against the long-run residence time.
  RngStream long_rng(32, 0);
  const auto s = estimate_long(ou, m, 4000.0, 1e-3, long_rng);
  const auto tau = k.tau();
  for (int i = 0; i < 3; ++i) {
    std::vector<double> batch_tau;
    for (int b = 0; b < k.batches; ++b) batch_tau.push_back(k.batch(b).tau()[i]);
    const double se_tau = mean_stderr(batch_tau).stderr_;
    CHECK(std::abs(z_score(tau[i], se_tau, s.t_hat()[i], s.t_stderr()[i])) < 4.0);
  }
}

TEST_CASE("memory diagnostic on an exactly first-order chain") {
  std::vector<double> p_values;
  int rejected = 0;
  double worst_lag = 0.0;
  for (std::uint64_t r = 0; r < 40; ++r) {
    const auto rep = memory_diagnostic(markov_chain(5, 20000, 100 + r), 5);
    rejected += rep.rejected;
    worst_lag = std::max(worst_lag, rep.max_lag_z);
    for (const auto& c : rep.cells) {
      if (!c.excluded) p_values.push_back(c.p_value);
    }
  }
  REQUIRE(p_values.size() >= 200);
  std::sort(p_values.begin(), p_values.end());
  // Under the null the p-values are uniform.
  CHECK(ks_distance(p_values, [](double x) { return std::clamp(x, 0.0, 1.0); }) < 1.63 / std::sqrt(p_values.size()));
  CHECK(rejected <= 1);
  CHECK(worst_lag < 5.0);
}

TEST_CASE("memory diagnostic flags a persistent walk") {
  const auto rep = memory_diagnostic(markov_chain(5, 20000, 7, 0.7), 5);
  CHECK(rep.rejected > 0);
  for (const auto& c : rep.cells) {
    if (c.current == 0 || c.current == 4) CHECK(c.excluded);
  }
}
