#include <doctest.h>

#include <cmath>
#include <vector>

#include <json.hpp>

#include "mfsim/duality.hpp"
#include "mfsim/errors.hpp"
#include "mfsim/initial_law.hpp"
#include "mfsim/mckv.hpp"
#include "mfsim/models.hpp"
#include "mfsim/noise.hpp"
#include "mfsim/simulate.hpp"
#include "mfsim/test_functions.hpp"

using namespace mfsim;
using nlohmann::json;
namespace tf = mfsim::test_functions;

namespace {

struct Setup {
  CoefficientSet coeffs;
  TimeGrid grid;
  NoiseBundle noise;
  std::vector<double> x0;
  LawTrajectory frozen;
};

Setup make_setup(const std::string& model, const json& params, std::size_t n, std::uint32_t path, std::uint64_t b_seed,
                 double horizon = 0.5, double dt = 0.05) {
  auto c = models::make_model(model, 1, 1, params);
  const TimeGrid grid(horizon, dt);
  NoiseBundle noise(grid, 1, 1, n, PathId{41, path}, b_seed);
  auto x0 = InitialLaw::gaussian({0.0}, 1.0).sample(n, 43, path);
  auto frozen = law_trajectory(run_particle_system(c, noise, x0, 1.0), grid);
  return {std::move(c), grid, std::move(noise), std::move(x0), std::move(frozen)};
}

}  // namespace

TEST_CASE("deterministic characteristics: f0(x) = phi(x + b t) with zero variance") {
  const double b = 0.6;
  auto s = make_setup("constant", {{"b", b}, {"sigma", 0.0}, {"alpha", 0.0}}, 5, 0, 42);
  const auto phi = tf::by_name(1, "sin");
  for (double x : {-1.0, 0.0, 0.8}) {
    const auto f = feynman_kac_f(s.coeffs, s.frozen, std::span<const double>(&x, 1), 0, s.grid.steps(), phi, s.noise,
                                 8, 1);
    CHECK(f.standard_error == 0.0);
    CHECK(f.value == doctest::Approx(std::sin(x + b * 0.5)).epsilon(1e-13));
  }
}

TEST_CASE("shift model: f0(x) = phi(x + sigma0 W_t) per path") {
  const double s0 = 1.2;
  auto s = make_setup("constant", {{"b", 0.0}, {"sigma", s0}, {"alpha", 0.0}}, 5, 3, 42);
  const auto phi = tf::by_name(1, "bump");
  const double w = s.noise.w_at(s.grid.steps())[0];
  for (double x : {-0.5, 0.25}) {
    const auto f = feynman_kac_f(s.coeffs, s.frozen, std::span<const double>(&x, 1), 0, s.grid.steps(), phi, s.noise,
                                 4, 1);
    CHECK(f.standard_error == 0.0);
    CHECK(f.value == doctest::Approx(std::exp(-(x + s0 * w) * (x + s0 * w))).epsilon(1e-12));
  }
}

TEST_CASE("pure idiosyncratic heat: Gaussian convolution of exp(-x^2)") {
  // a = 1/2, sigma = 0: X_t = x + B_t.
  auto s = make_setup("constant", {{"b", 0.0}, {"sigma", 0.0}, {"alpha", 1.0}}, 3, 0, 42, 1.0, 0.1);
  const auto phi = tf::by_name(1, "bump");
  for (double x : {0.0, 0.7, -1.5}) {
    const auto f = feynman_kac_f(s.coeffs, s.frozen, std::span<const double>(&x, 1), 0, s.grid.steps(), phi, s.noise,
                                 4000, 77);
    const double exact = std::exp(-x * x / 3.0) / std::sqrt(3.0);
    CHECK(std::abs(f.value - exact) <= 3.0 * f.standard_error);
    CHECK(f.standard_error > 0.0);
  }
}

TEST_CASE("feynman_kac_f argument checks") {
  auto s = make_setup("constant", {}, 3, 0, 42);
  const double x = 0.0;
  CHECK_THROWS_AS(feynman_kac_f(s.coeffs, s.frozen, std::span<const double>(&x, 1), 0, 2, tf::constant(1), s.noise, 1, 0),
                  InsufficientSamples);
  const NoiseBundle other(s.grid, 1, 1, 3, PathId{41, 9}, 42);
  CHECK_THROWS_AS(feynman_kac_f(s.coeffs, s.frozen, std::span<const double>(&x, 1), 0, 2, tf::constant(1), other, 2, 0),
                  ConditioningMismatch);
}

TEST_CASE("duality gap: phi = 1 gives exactly zero") {
  auto s = make_setup("mean_reversion_to_conditional_mean", {{"alpha", 0.5}}, 40, 0, 42);
  const NoiseBundle fwd_noise(s.grid, 1, 1, 40, s.noise.path_id(), 99);
  std::vector<LawTrajectory> forward{law_trajectory(run_frozen(s.coeffs, s.frozen.laws, fwd_noise, s.x0, 1.0), s.grid)};
  const auto one = tf::constant(1);
  std::vector<DualEvaluation> dual{
      dual_at_atoms(s.coeffs, s.frozen, forward[0].laws[0], s.grid.steps(), one, fwd_noise, 4, 5)};
  const auto gap = duality_gap(forward, dual, one, 0.5);
  CHECK(gap.gap == 0.0);
}

TEST_CASE("duality gap: deterministic and shift models within O(dt)") {
  const double dt = 0.05;
  for (const json& params : {json{{"b", 0.4}, {"sigma", 0.0}, {"alpha", 0.0}}, json{{"b", 0.0}, {"sigma", 1.0}, {"alpha", 0.0}}}) {
    std::vector<LawTrajectory> forward;
    std::vector<DualEvaluation> dual;
    const auto phi = tf::by_name(1, "sin");
    for (std::uint32_t p = 0; p < 4; ++p) {
      auto s = make_setup("constant", params, 30, p, 42);
      forward.push_back(s.frozen);
      dual.push_back(dual_at_atoms(s.coeffs, s.frozen, s.frozen.laws[0], s.grid.steps(), phi, s.noise, 4, 5));
      CHECK(dual.back().pairing().standard_error == 0.0);
    }
    const auto gap = duality_gap(forward, dual, phi, 0.5);
    CHECK(std::abs(gap.gap) <= 5.0 * dt);
  }
}

TEST_CASE("duality gap on frozen OU is within three standard errors") {
  std::vector<LawTrajectory> forward;
  std::vector<DualEvaluation> dual;
  const auto phi = tf::by_name(1, "bump");
  for (std::uint32_t p = 0; p < 30; ++p) {
    auto s = make_setup("mean_reversion_to_conditional_mean", {{"alpha", 0.5}}, 100, p, 42);
    const NoiseBundle fwd_noise(s.grid, 1, 1, 100, s.noise.path_id(), 99);
    forward.push_back(law_trajectory(run_frozen(s.coeffs, s.frozen.laws, fwd_noise, s.x0, 1.0), s.grid));
    dual.push_back(dual_at_atoms(s.coeffs, s.frozen, forward.back().laws[0], s.grid.steps(), phi, fwd_noise, 50, 7));
  }
  const auto gap = duality_gap(forward, dual, phi, 0.5);
  CHECK(gap.standard_error > 0.0);
  CHECK(std::abs(gap.gap) <= 3.0 * gap.standard_error);
}

TEST_CASE("duality gap is linear in phi at fixed samples") {
  auto s = make_setup("constant", {{"b", 0.0}, {"sigma", 1.0}, {"alpha", 0.5}}, 20, 0, 42);
  const auto a = tf::by_name(1, "sin");
  const auto b = tf::by_name(1, "x2");
  TestFunction combo = a;
  combo.name = "combo";
  combo.value = [&](std::span<const double> x) { return a.value(x) + 2.0 * b.value(x); };
  std::vector<LawTrajectory> forward{s.frozen};
  auto gap_of = [&](const TestFunction& f) {
    std::vector<DualEvaluation> dual{dual_at_atoms(s.coeffs, s.frozen, s.frozen.laws[0], s.grid.steps(), f, s.noise, 16, 3)};
    return duality_gap(forward, dual, f, 0.5).gap;
  };
  CHECK(gap_of(combo) == doctest::Approx(gap_of(a) + 2.0 * gap_of(b)).epsilon(1e-10));
}

TEST_CASE("duality gap rejects mismatched W paths") {
  auto s0 = make_setup("constant", {}, 5, 0, 42);
  auto s1 = make_setup("constant", {}, 5, 1, 42);
  const auto phi = tf::constant(1);
  std::vector<LawTrajectory> forward{s0.frozen};
  std::vector<DualEvaluation> dual{dual_at_atoms(s1.coeffs, s1.frozen, s1.frozen.laws[0], 2, phi, s1.noise, 2, 0)};
  CHECK_THROWS_AS(duality_gap(forward, dual, phi, 0.1), ConditioningMismatch);
}

TEST_CASE("uniqueness witness examples") {
  const auto bank = tf::bank(1);
  const std::vector<double> times{0.25, 0.5};
  SUBCASE("same estimator twice") {
    std::vector<LawTrajectory> a;
    for (std::uint32_t p = 0; p < 3; ++p) a.push_back(make_setup("mean_reversion_to_conditional_mean", {}, 20, p, 42).frozen);
    const auto r = uniqueness_witness(a, a, bank, times);
    CHECK(r.pass);
    for (const auto& c : r.cells) CHECK(c.mean_abs_gap == 0.0);
  }
  SUBCASE("shift model, different B seeds") {
    std::vector<LawTrajectory> a, b;
    const json shift{{"b", 0.0}, {"sigma", 1.0}, {"alpha", 0.0}};
    for (std::uint32_t p = 0; p < 3; ++p) {
      a.push_back(make_setup("constant", shift, 20, p, 42).frozen);
      b.push_back(make_setup("constant", shift, 20, p, 43).frozen);
    }
    const auto r = uniqueness_witness(a, b, bank, times);
    CHECK(r.pass);
    for (const auto& c : r.cells) CHECK(c.mean_abs_gap == 0.0);
  }
  SUBCASE("OU, N = 500 vs N = 2000") {
    std::vector<LawTrajectory> a, b;
    for (std::uint32_t p = 0; p < 10; ++p) {
      a.push_back(make_setup("mean_reversion_to_conditional_mean", {{"alpha", 0.5}}, 500, p, 42).frozen);
      b.push_back(make_setup("mean_reversion_to_conditional_mean", {{"alpha", 0.5}}, 2000, p, 43).frozen);
    }
    CHECK(uniqueness_witness(a, b, bank, times).pass);
  }
  SUBCASE("mismatched paths") {
    std::vector<LawTrajectory> a{make_setup("constant", {}, 5, 0, 42).frozen};
    std::vector<LawTrajectory> b{make_setup("constant", {}, 5, 1, 42).frozen};
    CHECK_THROWS_AS(uniqueness_witness(a, b, bank, times), ConditioningMismatch);
  }
}
