#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "mfsim/errors.hpp"
#include "mfsim/measures.hpp"
#include "mfsim/rng.hpp"
#include "mfsim/test_functions.hpp"

using namespace mfsim;
namespace tf = mfsim::test_functions;

namespace {

EmpiricalMeasure random_measure(std::uint64_t seed, std::size_t n, double mass) {
  std::vector<double> pts(n);
  CounterStream(seed, StreamRole::kAuxiliary, 0, 0).normals(0, pts);
  for (double& p : pts) p *= 2.0;
  return EmpiricalMeasure::uniform(1, pts, mass);
}

// Brute-force W1 for two equal-size uniform clouds: best matching over all permutations.
double w1_bruteforce(std::vector<double> a, std::vector<double> b, double mass) {
  std::sort(b.begin(), b.end());
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) c += std::abs(a[i] - b[i]);
    best = std::min(best, c * mass / static_cast<double>(a.size()));
  } while (std::next_permutation(b.begin(), b.end()));
  return best;
}

}  // namespace

TEST_CASE("integrate examples") {
  const double zero = 0.0;
  CHECK(integrate(EmpiricalMeasure::dirac(std::span<const double>(&zero, 1)), tf::constant(1, 3.5)) == 3.5);
  const EmpiricalMeasure two(1, {0.0, 2.0}, {0.5, 0.5});
  CHECK(integrate(two, tf::by_name(1, "x")) == 1.0);
  const auto u = EmpiricalMeasure::uniform(1, {0, 1, 2, 3}, 2.0);
  CHECK(integrate(u, tf::by_name(1, "x2")) == 7.0);
}

TEST_CASE("integrate reports the offending atom") {
  TestFunction bad = tf::by_name(1, "x");
  bad.value = [](std::span<const double> x) { return x[0] > 1.0 ? std::nan("") : x[0]; };
  const EmpiricalMeasure mu(1, {0.0, 2.0}, {1.0, 1.0});
  try {
    integrate(mu, bad);
    FAIL("expected EvaluationError");
  } catch (const EvaluationError& e) {
    CHECK(std::string(e.what()).find("(2)") != std::string::npos);
  }
}

TEST_CASE("measure invariants are validated") {
  CHECK_THROWS_AS(EmpiricalMeasure(1, {}, {}), InvalidMeasure);
  CHECK_THROWS_AS(EmpiricalMeasure(1, {0.0, 1.0}, {1.0}), InvalidMeasure);
  CHECK_THROWS_AS(EmpiricalMeasure(1, {0.0}, {-1.0}), InvalidMeasure);
  CHECK_THROWS_AS(EmpiricalMeasure(1, {0.0}, {0.0}), InvalidMeasure);
  CHECK_THROWS_AS(EmpiricalMeasure(1, {INFINITY}, {1.0}), InvalidMeasure);
}

TEST_CASE("integrate is linear in phi and mu") {
  const auto mu = random_measure(1, 50, 1.5);
  const auto nu = random_measure(2, 30, 0.5);
  const auto s = tf::by_name(1, "sin");
  const auto b = tf::by_name(1, "bump");
  TestFunction combo = s;
  combo.value = [&](std::span<const double> x) { return 2.0 * s.value(x) - 3.0 * b.value(x); };
  CHECK(integrate(mu, combo) == doctest::Approx(2.0 * integrate(mu, s) - 3.0 * integrate(mu, b)).epsilon(1e-14));
  // mu + nu as a single cloud.
  std::vector<double> pts(mu.points().begin(), mu.points().end());
  pts.insert(pts.end(), nu.points().begin(), nu.points().end());
  std::vector<double> ws(mu.weights().begin(), mu.weights().end());
  ws.insert(ws.end(), nu.weights().begin(), nu.weights().end());
  const EmpiricalMeasure sum(1, pts, ws);
  CHECK(integrate(sum, s) == doctest::Approx(integrate(mu, s) + integrate(nu, s)).epsilon(1e-14));
}

TEST_CASE("bounded-Lipschitz examples") {
  const double z = 0.0, one = 1.0, three = 3.0;
  const auto d0 = EmpiricalMeasure::dirac(std::span<const double>(&z, 1));
  const auto d1 = EmpiricalMeasure::dirac(std::span<const double>(&one, 1));
  const auto d3 = EmpiricalMeasure::dirac(std::span<const double>(&three, 1));
  CHECK(bl_distance(d0, d0, 16) == 0.0);
  // Two-point dual: sup phi(0) - phi(3) = min(3, 2), sup phi(0) - phi(1) = min(1, 2).
  CHECK(bl_distance(d0, d3, 16) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(bl_distance(d0, d1, 16) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("exact mode rejects d > 1, sliced mode works") {
  const auto mu = EmpiricalMeasure::uniform(2, {0, 0, 1, 1}, 1.0);
  const auto nu = EmpiricalMeasure::uniform(2, {0, 1, 1, 0}, 1.0);
  BlOptions exact;
  CHECK_THROWS_AS(bl_distance(mu, nu, exact), UnsupportedDimension);
  BlOptions sliced;
  sliced.mode = BlMode::kSliced;
  const double r = bl_distance(mu, nu, sliced);
  CHECK(r >= 0.0);
  CHECK(r <= 1.0 + 1e-12);
}

TEST_CASE("w1 examples and errors") {
  const double z = 0.0, one = 1.0;
  const auto d0 = EmpiricalMeasure::dirac(std::span<const double>(&z, 1));
  const auto d1 = EmpiricalMeasure::dirac(std::span<const double>(&one, 1));
  CHECK(w1_1d(d0, d1) == 1.0);
  CHECK(w1_1d(d0, d0) == 0.0);
  const auto a = EmpiricalMeasure::uniform(1, {0, 2}, 1.0);
  const auto b = EmpiricalMeasure::uniform(1, {1, 3}, 1.0);
  CHECK(w1_1d(a, b) == doctest::Approx(w1_bruteforce({0, 2}, {1, 3}, 1.0)));
  CHECK(w1_1d(a, b) == doctest::Approx(1.0));
  CHECK_THROWS_AS(w1_1d(a, EmpiricalMeasure::uniform(1, {1, 3}, 2.0)), MassMismatch);
  CHECK_THROWS_AS(w1_1d(EmpiricalMeasure::uniform(2, {0, 0}, 1.0), EmpiricalMeasure::uniform(2, {0, 1}, 1.0)),
                  UnsupportedDimension);
}

TEST_CASE("w1 matches brute-force matching on small clouds") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    std::vector<double> x(5), y(5);
    CounterStream(s, StreamRole::kAuxiliary, 1, 0).normals(0, x);
    CounterStream(s, StreamRole::kAuxiliary, 1, 1).normals(0, y);
    CHECK(w1_1d(EmpiricalMeasure::uniform(1, x, 1.0), EmpiricalMeasure::uniform(1, y, 1.0)) ==
          doctest::Approx(w1_bruteforce(x, y, 1.0)).epsilon(1e-12));
  }
}

TEST_CASE("metric properties on random triples") {
  for (std::uint64_t s = 0; s < 15; ++s) {
    const auto a = random_measure(3 * s, 7, 1.0);
    const auto b = random_measure(3 * s + 1, 7, 1.0);
    const auto c = random_measure(3 * s + 2, 7, 1.0);
    const double slack = 1e-9;
    CHECK(std::abs(w1_1d(a, b) - w1_1d(b, a)) < slack);
    CHECK(w1_1d(a, c) <= w1_1d(a, b) + w1_1d(b, c) + slack);
    CHECK(std::abs(bl_distance(a, b, 16) - bl_distance(b, a, 16)) < slack);
    // Grid-restricted sup: triangle inequality up to the discretization error.
    CHECK(bl_distance(a, c, 16) <= bl_distance(a, b, 16) + bl_distance(b, c, 16) + 2.0 / 16 + slack);
    CHECK(bl_distance(a, b, 16) <= w1_1d(a, b) + slack);
    CHECK(bl_distance(a, b, 8) <= bl_distance(a, b, 16) + slack);
    CHECK(bl_distance(a, b, 16) <= bl_distance(a, b, 64) + slack);
  }
}

TEST_CASE("canonical form merges coincident atoms") {
  const EmpiricalMeasure mu(1, {2.0, 0.0, 2.0, 1.0}, {0.25, 0.5, 0.25, 0.0});
  const auto c = mu.canonical();
  REQUIRE(c.size() == 2);
  CHECK(c.point(0)[0] == 0.0);
  CHECK(c.point(1)[0] == 2.0);
  CHECK(c.weight(1) == 0.5);
  CHECK(bl_distance(mu, c, 16) == 0.0);
}

TEST_CASE("test-function derivatives agree with finite differences") {
  for (std::size_t d = 1; d <= 3; ++d) {
    for (const auto& f : tf::bank(d)) {
      const auto audit = tf::audit_derivatives(f, 50, 11);
      CHECK_MESSAGE(audit.gradient_error < 1e-6, f.name);
      CHECK_MESSAGE(audit.hessian_error < 1e-5, f.name);
    }
  }
}
