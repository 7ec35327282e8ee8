#include <doctest.h>

#include "milestone/rng.hpp"

#include <cmath>
#include <vector>

using namespace milestone;

TEST_CASE("philox known answer") {
  // Random123 reference vector for philox4x32-10, zero counter and key.
  const auto out = RngStream::philox({0, 0, 0, 0}, {0, 0});
  CHECK(out[0] == 0x6627e8d5u);
  CHECK(out[1] == 0xe169c58du);
  CHECK(out[2] == 0xbc57ac4cu);
  CHECK(out[3] == 0x9b00dbd8u);
}

TEST_CASE("philox known answer, all ones") {
  const auto out = RngStream::philox({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  CHECK(out[0] == 0x408f276du);
  CHECK(out[1] == 0x41c83b0eu);
  CHECK(out[2] == 0xa20bc7c6u);
  CHECK(out[3] == 0x6d5451fdu);
}

TEST_CASE("same seed and stream reproduce; other streams differ") {
  RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  bool diff_c = false, diff_d = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    diff_c |= x != c();
    diff_d |= x != d();
  }
  CHECK(diff_c);
  CHECK(diff_d);
}

TEST_CASE("normal moments") {
  RngStream r(1, 0);
  const int n = 400000;
  double s = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  CHECK(std::abs(s / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(s4 / n - 3.0) < 4.0 * std::sqrt(96.0 / n));
}

TEST_CASE("uniform stays in the open interval and substreams are distinct") {
  RngStream r(5, 0);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
  CHECK(r.substream(1).stream() != r.substream(2).stream());
  CHECK(r.substream(1).stream() == RngStream(5, 0).substream(1).stream());
}
