#include <doctest.h>

#include <cmath>
#include <vector>

#include <json.hpp>

#include "mfsim/errors.hpp"
#include "mfsim/initial_law.hpp"
#include "mfsim/mckv.hpp"
#include "mfsim/models.hpp"
#include "mfsim/noise.hpp"
#include "mfsim/simulate.hpp"
#include "mfsim/test_functions.hpp"

using namespace mfsim;
using nlohmann::json;

namespace {

const json kOu = {{"beta", 1.0}, {"sigma", 1.0}, {"alpha", 0.5}};

bool same_trajectory(const LawTrajectory& a, const LawTrajectory& b) {
  for (std::size_t k = 0; k < a.laws.size(); ++k) {
    const auto pa = a.laws[k].points();
    const auto pb = b.laws[k].points();
    if (!std::equal(pa.begin(), pa.end(), pb.begin(), pb.end())) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("phi_map with measure-free coefficients ignores its input") {
  const auto c = models::make_model("constant", 1, 1, {{"b", 0.2}, {"sigma", 1.0}, {"alpha", 0.5}});
  const TimeGrid grid(1.0, 0.1);
  const NoiseBundle noise(grid, 1, 1, 20, PathId{1, 0}, 2);
  const auto x0 = InitialLaw::gaussian({0.0}, 1.0).sample(20, 3, 0);
  const auto mu0 = EmpiricalMeasure::uniform(1, x0, 1.0);
  const auto from_initial = phi_map(c, constant_trajectory(mu0, grid, noise.path_id()), noise, x0, 1.0);
  const auto other = constant_trajectory(EmpiricalMeasure::uniform(1, {5.0}, 1.0), grid, noise.path_id());
  const auto from_other = phi_map(c, other, noise, x0, 1.0);
  CHECK(same_trajectory(from_initial, from_other));
  // Idempotence of the constant map.
  CHECK(same_trajectory(phi_map(c, from_initial, noise, x0, 1.0), from_initial));
}

TEST_CASE("phi_map on the shift model translates the initial cloud by sigma0 W") {
  const double s0 = 0.8;
  const auto c = models::make_model("constant", 1, 1, {{"b", 0.0}, {"sigma", s0}, {"alpha", 0.0}});
  const TimeGrid grid(1.0, 0.05);
  const NoiseBundle noise(grid, 1, 1, 10, PathId{6, 0}, 7);
  const auto x0 = InitialLaw::gaussian({0.0}, 1.0).sample(10, 8, 0);
  const auto out = phi_map(c, constant_trajectory(EmpiricalMeasure::uniform(1, {0.0}, 1.0), grid, noise.path_id()),
                           noise, x0, 1.0);
  for (std::size_t k = 0; k <= grid.steps(); ++k) {
    const double w = noise.w_at(k)[0];
    for (std::size_t i = 0; i < x0.size(); ++i) CHECK(out.laws[k].point(i)[0] == doctest::Approx(x0[i] + s0 * w).epsilon(1e-13));
  }
}

TEST_CASE("phi_map rejects trajectories from another grid or path") {
  const auto c = models::make_model("constant", 1, 1, {});
  const TimeGrid grid(1.0, 0.1);
  const NoiseBundle noise(grid, 1, 1, 3, PathId{1, 0}, 2);
  const std::vector<double> x0{0.0, 1.0, 2.0};
  const auto mu0 = EmpiricalMeasure::uniform(1, x0, 1.0);
  CHECK_THROWS_AS(phi_map(c, constant_trajectory(mu0, TimeGrid(1.0, 0.05), noise.path_id()), noise, x0, 1.0),
                  IncompatibleTrajectory);
  CHECK_THROWS_AS(phi_map(c, constant_trajectory(mu0, grid, PathId{1, 1}), noise, x0, 1.0), IncompatibleTrajectory);
}

TEST_CASE("picard: measure-free coefficients report [gap, 0]") {
  const auto c = models::make_model("constant", 1, 1, {{"sigma", 1.0}});
  const TimeGrid grid(1.0, 0.1);
  const NoiseBundle noise(grid, 1, 1, 50, PathId{1, 0}, 2);
  const auto x0 = InitialLaw::gaussian({0.0}, 1.0).sample(50, 3, 0);
  const auto res = picard_solve(c, noise, x0, 1.0, PicardOptions{});
  REQUIRE(res.metrics.size() == 2);
  CHECK(res.metrics[0] > 0.0);
  CHECK(res.metrics[1] == 0.0);
  CHECK(res.converged);
  CHECK(res.iterations == 1);
}

TEST_CASE("picard on mean-field OU: converges, contracts, conditional mean m0 + sigma0 W") {
  const auto c = models::make_model("mean_reversion_to_conditional_mean", 1, 1, kOu);
  const TimeGrid grid(1.0, 0.02);
  const std::size_t n = 1000;
  const NoiseBundle noise(grid, 1, 1, n, PathId{11, 0}, 12);
  const auto x0 = InitialLaw::gaussian({0.5}, 1.0).sample(n, 13, 0);
  PicardOptions opt;
  opt.max_iter = 10;
  const auto res = picard_solve(c, noise, x0, 2.0, opt);
  CHECK(res.converged);
  for (std::size_t j = 2; j < res.metrics.size(); ++j) CHECK(res.metrics[j] <= 0.9 * res.metrics[j - 1]);
  for (std::size_t k : {std::size_t{10}, std::size_t{25}, std::size_t{50}}) {
    const double w = noise.w_at(k)[0];
    const auto& law = res.law.laws[k];
    CHECK(law.mass() == doctest::Approx(2.0).epsilon(1e-14));
    // The mean of the discrete system is m0_hat + sigma0 W exactly; the sampling error of m0_hat is 1/sqrt(N).
    CHECK(std::abs(law.mean()[0] - (0.5 + w)) < 3.0 / std::sqrt(double(n)));
  }
  // Fixed-point consistency.
  const auto again = phi_map(c, res.law, noise, x0, 2.0);
  CHECK(trajectory_distance(again, res.law, opt.metric) < 2.0 * opt.tol);
}

TEST_CASE("picard: non-convergence is flagged, not thrown") {
  const auto c = models::make_model("mean_reversion_to_conditional_mean", 1, 1, kOu);
  const TimeGrid grid(1.0, 0.05);
  const NoiseBundle noise(grid, 1, 1, 100, PathId{1, 0}, 2);
  const auto x0 = InitialLaw::gaussian({0.0}, 1.0).sample(100, 3, 0);
  PicardOptions opt;
  opt.max_iter = 1;
  opt.tol = 1e-12;
  const auto res = picard_solve(c, noise, x0, 1.0, opt);
  CHECK_FALSE(res.converged);
  CHECK(res.iterations == 1);
}

TEST_CASE("picard laws for two B seeds agree within Monte-Carlo error") {
  const auto c = models::make_model("mean_reversion_to_conditional_mean", 1, 1, kOu);
  const TimeGrid grid(1.0, 0.05);
  const std::size_t n = 2000;
  const auto x0 = InitialLaw::gaussian({0.0}, 1.0).sample(n, 3, 0);
  const auto a = picard_solve(c, NoiseBundle(grid, 1, 1, n, PathId{1, 0}, 2), x0, 1.0, PicardOptions{});
  const auto b = picard_solve(c, NoiseBundle(grid, 1, 1, n, PathId{1, 0}, 5), x0, 1.0, PicardOptions{});
  const auto phi = test_functions::by_name(1, "sin");
  const auto ea = integrate_with_error(a.law.laws.back(), phi);
  const auto eb = integrate_with_error(b.law.laws.back(), phi);
  CHECK(std::abs(ea.value - eb.value) < 4.0 * std::hypot(ea.standard_error, eb.standard_error));
}
