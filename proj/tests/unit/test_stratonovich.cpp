#include <doctest.h>

#include <cmath>
#include <vector>

#include "mfsim/errors.hpp"
#include "mfsim/initial_law.hpp"
#include "mfsim/noise.hpp"
#include "mfsim/simulate.hpp"
#include "mfsim/stratonovich.hpp"

using namespace mfsim;
namespace fam = mfsim::stratonovich_families;

namespace {

StratonovichSigma kernel_only(double amp, double width) {
  StratonovichSigma s;
  s.kernel = fam::gaussian_kernel(1, 1, amp, width);
  return s;
}

}  // namespace

TEST_CASE("constant sigma: zero drift, a = sigma sigma^T / 2") {
  SmallMatrix s(2, 1);
  s(0, 0) = 1.5;
  s(1, 0) = -0.5;
  StratonovichSigma sig;
  sig.dim_x = 2;
  sig.local = fam::constant(s);
  const auto mu = EmpiricalMeasure::uniform(2, {0, 0}, 1.0);
  const double x[2] = {0.4, 2.0};
  const auto ito = ito_from_stratonovich(sig, 0.0, x, mu);
  CHECK(ito.drift == std::vector<double>{0.0, 0.0});
  CHECK((ito.diffusion - 0.5 * multiply_transposed(s, s)).norm() == 0.0);
}

TEST_CASE("sigma(x) = x: b = x / 2, a = x^2 / 2") {
  StratonovichSigma sig;
  sig.local = fam::affine(0.0, 1.0);
  const auto mu = EmpiricalMeasure::uniform(1, {0}, 1.0);
  for (double x : {-2.0, 0.0, 0.3, 5.0}) {
    const auto ito = ito_from_stratonovich(sig, 0.0, std::span<const double>(&x, 1), mu);
    CHECK(ito.drift[0] == doctest::Approx(0.5 * x));
    CHECK(ito.diffusion(0, 0) == doctest::Approx(0.5 * x * x));
  }
}

TEST_CASE("single-atom Lions term matches a finite-difference perturbation of the atom") {
  const double amp = 0.8, width = 0.5, z = 0.3;
  const auto sig = kernel_only(amp, width);
  const auto mu = EmpiricalMeasure::dirac(std::span<const double>(&z, 1));
  for (double x : {-0.4, 0.1, 0.3, 1.2}) {
    const auto ito = ito_from_stratonovich(sig, 0.0, std::span<const double>(&x, 1), mu);
    // G = sigma(z, delta_z) * d/dz sigma(x, delta_z).
    const double h = 1e-6;
    const double zp = z + h, zm = z - h;
    SmallMatrix sp, sm, sz;
    evaluate_sigma(sig, std::span<const double>(&x, 1), EmpiricalMeasure::dirac(std::span<const double>(&zp, 1)), sp);
    evaluate_sigma(sig, std::span<const double>(&x, 1), EmpiricalMeasure::dirac(std::span<const double>(&zm, 1)), sm);
    evaluate_sigma(sig, std::span<const double>(&z, 1), mu, sz);
    const double fd = sz(0, 0) * (sp(0, 0) - sm(0, 0)) / (2.0 * h);
    CHECK(ito.lions[0] == doctest::Approx(fd).epsilon(1e-7));
    // Closed form: K(0) * (-K'(x - z)) with K(u) = amp exp(-u^2 / (2 width^2)).
    const double u = x - z;
    const double kprime = -amp * u / (width * width) * std::exp(-u * u / (2 * width * width));
    CHECK(ito.lions[0] == doctest::Approx(-amp * kprime).epsilon(1e-12));
  }
}

TEST_CASE("Lions term is bilinear in the kernel") {
  const double z = -0.2, x = 0.5;
  const auto mu = EmpiricalMeasure::dirac(std::span<const double>(&z, 1));
  const auto g1 = ito_from_stratonovich(kernel_only(1.0, 0.7), 0.0, std::span<const double>(&x, 1), mu).lions[0];
  const auto g2 = ito_from_stratonovich(kernel_only(2.0, 0.7), 0.0, std::span<const double>(&x, 1), mu).lions[0];
  CHECK(g2 == doctest::Approx(4.0 * g1).epsilon(1e-14));
  REQUIRE(g1 != 0.0);
}

TEST_CASE("Lions term does not depend on how atoms are represented") {
  const auto sig = kernel_only(1.0, 0.5);
  const EmpiricalMeasure split(1, {-0.5, -0.5, 0.7, -0.5}, {0.1, 0.1, 0.7, 0.1});
  const EmpiricalMeasure merged(1, {-0.5, 0.7}, {0.3, 0.7});
  for (double x : {-1.0, 0.0, 0.4}) {
    const auto a = ito_from_stratonovich(sig, 0.0, std::span<const double>(&x, 1), split);
    const auto b = ito_from_stratonovich(sig, 0.0, std::span<const double>(&x, 1), merged);
    CHECK(std::abs(a.lions[0] - b.lions[0]) <= 1e-12);
    CHECK(std::abs(a.drift[0] - b.drift[0]) <= 1e-12);
  }
}

TEST_CASE("missing kernel derivative is reported") {
  auto sig = kernel_only(1.0, 0.5);
  sig.kernel->d_dy = nullptr;
  const auto mu = EmpiricalMeasure::uniform(1, {0.0}, 1.0);
  const double x = 0.0;
  CHECK_THROWS_AS(ito_from_stratonovich(sig, 0.0, std::span<const double>(&x, 1), mu), IncompleteDerivative);
}

TEST_CASE("converted set: drift and diffusion match the pointwise conversion") {
  StratonovichSigma sig;
  sig.local = fam::sine(1, 1, 1.0);
  sig.kernel = fam::gaussian_kernel(1, 1, 0.5, 0.5);
  const auto set = stratonovich_to_ito(sig);
  const EmpiricalMeasure mu(1, {-0.5, 0.7}, {0.3, 0.7});
  const double x = 0.25;
  const auto ito = ito_from_stratonovich(sig, 0.0, std::span<const double>(&x, 1), mu);
  CHECK(set.b(0.0, std::span<const double>(&x, 1), mu)[0] == doctest::Approx(ito.drift[0]).epsilon(1e-14));
  CHECK(set.a(0.0, std::span<const double>(&x, 1), mu)(0, 0) == doctest::Approx(ito.diffusion(0, 0)).epsilon(1e-14));
  CHECK(set.measure_dependent());
  const auto without = stratonovich_to_ito(sig, false);
  CHECK(without.b(0.0, std::span<const double>(&x, 1), mu)[0] ==
        doctest::Approx(ito.drift[0] - 0.5 * ito.lions[0]).epsilon(1e-14));
}

TEST_CASE("constant sigma: Heun and corrected Euler coincide pathwise") {
  SmallMatrix s(1, 1);
  s(0, 0) = 1.3;
  StratonovichSigma sig;
  sig.local = fam::constant(s);
  const TimeGrid grid(1.0, 0.05);
  const NoiseBundle noise(grid, 1, 1, 16, PathId{5, 0}, 6);
  const auto x0 = InitialLaw::gaussian({0.0}, 1.0).sample(16, 7, 0);
  const auto heun = run_stratonovich_system(sig, noise, x0, 1.0);
  const auto ito = run_particle_system(stratonovich_to_ito(sig), noise, x0, 1.0);
  for (std::size_t k = 0; k <= grid.steps(); ++k) {
    const auto a = heun.slice(k);
    const auto b = ito.slice(k);
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }
}
