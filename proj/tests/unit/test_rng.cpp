#include <doctest.h>

#include <cmath>
#include <vector>

#include "mfsim/rng.hpp"

using namespace mfsim;

TEST_CASE("philox4x32-10 known answers") {
  // Reference vectors distributed with the Random123 library.
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("stream draws are addressable") {
  const CounterStream s(42, StreamRole::kCommon, 3, 7);
  std::vector<double> block(37);
  s.normals(0, block);
  for (std::size_t j = 0; j < block.size(); ++j) CHECK(block[j] == s.normal(j));
  std::vector<double> tail(10);
  s.normals(20, tail);
  for (std::size_t j = 0; j < tail.size(); ++j) CHECK(tail[j] == block[20 + j]);
}

TEST_CASE("streams differ by role, path, index and seed") {
  const double base = CounterStream(1, StreamRole::kCommon, 0, 0).normal(0);
  CHECK(CounterStream(1, StreamRole::kIdiosyncratic, 0, 0).normal(0) != base);
  CHECK(CounterStream(1, StreamRole::kCommon, 1, 0).normal(0) != base);
  CHECK(CounterStream(1, StreamRole::kCommon, 0, 1).normal(0) != base);
  CHECK(CounterStream(2, StreamRole::kCommon, 0, 0).normal(0) != base);
  CHECK(mix_seed(1, 1) != mix_seed(1, 2));
}

TEST_CASE("normal and uniform moments") {
  const std::size_t n = 200000;
  std::vector<double> z(n), u(n);
  CounterStream(9, StreamRole::kAuxiliary, 0, 0).normals(0, z);
  CounterStream(9, StreamRole::kAuxiliary, 0, 1).uniforms(0, u);
  double m = 0, v = 0, um = 0;
  for (std::size_t i = 0; i < n; ++i) {
    m += z[i];
    v += z[i] * z[i];
    um += u[i];
    REQUIRE(u[i] > 0.0);
    REQUIRE(u[i] < 1.0);
  }
  m /= n;
  v /= n;
  um /= n;
  // 5 standard errors.
  CHECK(std::abs(m) < 5.0 / std::sqrt(double(n)));
  CHECK(std::abs(v - 1.0) < 5.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(um - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
}
