#include <doctest.h>

#include "milestone/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

using namespace milestone;

TEST_CASE("mean and naive standard error") {
  const auto m = mean_stderr({1.0, 2.0, 3.0, 4.0});
  CHECK(m.mean == doctest::Approx(2.5));
  CHECK(m.stderr_ == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(m.count == 4);
}

TEST_CASE("batch ratio is the pooled ratio") {
  const auto r = batch_ratio({2.0, 4.0, 6.0}, {1.0, 1.0, 2.0});
  CHECK(r.mean == doctest::Approx(12.0 / 4.0));
  CHECK(r.stderr_ > 0.0);
  const auto equal = batch_ratio({2.0, 4.0}, {1.0, 2.0});
  CHECK(equal.stderr_ == doctest::Approx(0.0));
  CHECK(std::isnan(batch_ratio({1.0, 1.0}, {1.0, 0.0}).stderr_));
}

TEST_CASE("chi-square tail") {
  CHECK(chi_square_sf(0.0, 3.0) == doctest::Approx(1.0));
  CHECK(chi_square_sf(3.841458820694124, 1.0) == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(chi_square_sf(2.0, 2.0) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("KS distance against a uniform CDF") {
  const auto cdf = [](double x) { return std::clamp(x, 0.0, 1.0); };
  CHECK(ks_distance({0.5}, cdf) == doctest::Approx(0.5));
  CHECK(ks_distance({0.125, 0.375, 0.625, 0.875}, cdf) == doctest::Approx(0.125));
}

TEST_CASE("z-score") {
  CHECK(z_score(1.0, 3.0, 0.0, 4.0) == doctest::Approx(0.2));
  CHECK(z_score(2.0, 0.0, 2.0, 0.0) == 0.0);
}
