#include <doctest.h>

#include <cmath>
#include <vector>

#include <json.hpp>

#include "mfsim/errors.hpp"
#include "mfsim/fpe.hpp"
#include "mfsim/initial_law.hpp"
#include "mfsim/mckv.hpp"
#include "mfsim/models.hpp"
#include "mfsim/noise.hpp"
#include "mfsim/simulate.hpp"
#include "mfsim/test_functions.hpp"

using namespace mfsim;
namespace tf = mfsim::test_functions;

namespace {

struct Run {
  NoiseBundle noise;
  LawTrajectory law;
};

Run simulate(const CoefficientSet& c, double dt, std::size_t n, std::uint32_t path = 0) {
  const TimeGrid grid(1.0, dt);
  NoiseBundle noise(grid, 1, 1, n, PathId{21, path}, 22);
  const auto x0 = InitialLaw::gaussian({0.2}, 1.0).sample(n, 23, path);
  auto law = law_trajectory(run_particle_system(c, noise, x0, 1.0), grid);
  return {std::move(noise), std::move(law)};
}

}  // namespace

TEST_CASE("residual of phi = 1 is exactly zero") {
  for (const char* model : {"constant", "mean_reversion_to_conditional_mean"}) {
    const auto c = models::make_model(model, 1, 1, {{"alpha", 0.5}});
    const auto r = simulate(c, 0.01, 100);
    const auto res = weak_residual(r.law, c, tf::constant(1), r.noise);
    for (double v : res.values) CHECK(v == 0.0);
  }
}

TEST_CASE("deterministic drift, phi = x: residual vanishes up to rounding") {
  const auto c = models::make_model("constant", 1, 1, {{"b", 0.7}, {"sigma", 0.0}, {"alpha", 0.0}});
  const auto r = simulate(c, 0.01, 50);
  const auto res = weak_residual(r.law, c, tf::by_name(1, "x"), r.noise);
  CHECK(res.sup < 1e-12);
}

TEST_CASE("residual is linear in phi") {
  const auto c = models::make_model("mean_reversion_to_conditional_mean", 1, 1, {{"alpha", 0.5}});
  const auto r = simulate(c, 0.02, 60);
  const auto s = tf::by_name(1, "sin");
  const auto b = tf::by_name(1, "bump");
  TestFunction combo = s;
  combo.name = "combo";
  combo.value = [&](std::span<const double> x) { return 2.0 * s.value(x) - b.value(x); };
  combo.gradient = [&](std::span<const double> x, std::span<double> g) {
    double gs[1], gb[1];
    s.gradient(x, gs);
    b.gradient(x, gb);
    g[0] = 2.0 * gs[0] - gb[0];
  };
  combo.hessian = [&](std::span<const double> x, SmallMatrix& h) {
    SmallMatrix hs, hb;
    s.hessian(x, hs);
    b.hessian(x, hb);
    h = 2.0 * hs - hb;
  };
  const auto rs = weak_residual(r.law, c, s, r.noise);
  const auto rb = weak_residual(r.law, c, b, r.noise);
  const auto rc = weak_residual(r.law, c, combo, r.noise);
  for (std::size_t k = 0; k < rc.values.size(); ++k)
    CHECK(rc.values[k] == doctest::Approx(2.0 * rs.values[k] - rb.values[k]).epsilon(1e-10).scale(1.0));
}

TEST_CASE("residual is invariant under merging coincident atoms") {
  const auto c = models::make_model("constant", 1, 1, {{"b", 0.0}, {"sigma", 1.0}, {"alpha", 0.0}});
  const TimeGrid grid(0.5, 0.05);
  const NoiseBundle noise(grid, 1, 1, 6, PathId{1, 0}, 2);
  // Three coincident particles at each of two sites.
  const std::vector<double> x0{0.0, 0.0, 0.0, 1.0, 1.0, 1.0};
  const auto law = law_trajectory(run_particle_system(c, noise, x0, 1.0), grid);
  LawTrajectory merged = law;
  for (auto& mu : merged.laws) mu = mu.canonical();
  REQUIRE(merged.laws.back().size() == 2);
  const auto phi = tf::by_name(1, "sin");
  const auto a = weak_residual(law, c, phi, noise);
  const auto b = weak_residual(merged, c, phi, noise);
  for (std::size_t k = 0; k < a.values.size(); ++k) CHECK(std::abs(a.values[k] - b.values[k]) < 1e-13);
}

TEST_CASE("residual shrinks under time-step refinement on the shift model") {
  const auto c = models::make_model("constant", 1, 1, {{"b", 0.0}, {"sigma", 1.0}, {"alpha", 0.0}});
  const auto phi = tf::by_name(1, "sin");
  double coarse = 0.0, fine = 0.0;
  for (std::uint32_t p = 0; p < 20; ++p) {
    const TimeGrid g(1.0, 1.0 / 256);
    const NoiseBundle n(g, 1, 1, 50, PathId{31, p}, 32);
    const auto x0 = InitialLaw::gaussian({0.0}, 1.0).sample(50, 33, p);
    const auto nc = n.coarsen(8);
    coarse += weak_residual(law_trajectory(run_particle_system(c, nc, x0, 1.0), nc.grid()), c, phi, nc).sup;
    fine += weak_residual(law_trajectory(run_particle_system(c, n, x0, 1.0), g), c, phi, n).sup;
  }
  // Eight-fold refinement: at least the sqrt(8) of the leading martingale term, with slack.
  CHECK(coarse / fine > 2.0);
}

TEST_CASE("residual rejects mismatched grids") {
  const auto c = models::make_model("constant", 1, 1, {});
  const auto r = simulate(c, 0.1, 5);
  const NoiseBundle other(TimeGrid(1.0, 0.05), 1, 1, 5, PathId{21, 0}, 22);
  CHECK_THROWS_AS(weak_residual(r.law, c, tf::constant(1), other), IncompatibleTrajectory);
}
