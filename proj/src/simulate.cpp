#include "mfsim/simulate.hpp"

#include <algorithm>

#include "mfsim/errors.hpp"
#include "mfsim/parallel.hpp"

namespace mfsim {
namespace {

std::size_t particle_count(std::span<const double> initial, std::size_t d) {
  if (d == 0 || initial.empty() || initial.size() % d != 0) {
    throw InvalidArgument("initial cloud must hold N >= 1 points of dimension d");
  }
  return initial.size() / d;
}

void check_noise(const CoefficientSet& coeffs, const NoiseBundle& noise, std::size_t n) {
  if (noise.dim_w() != coeffs.dim_w()) throw InvalidArgument("noise dim_w does not match the coefficients");
  if (noise.dim_b() != coeffs.dim_x()) throw InvalidArgument("noise dim_b does not match the state dimension");
  if (noise.particles() < n) throw InvalidArgument("noise bundle holds fewer idiosyncratic paths than particles");
}

// Advances every particle from slice k to slice k + 1 under one snapshot.
void advance(const CoefficientSnapshot& snap, const CoefficientSet& coeffs, const NoiseBundle& noise,
             ParticleEnsemble& ens, std::size_t k) {
  const std::size_t d = coeffs.dim_x();
  const std::size_t d1 = coeffs.dim_w();
  const double t = noise.grid().time(k);
  const double dt = noise.grid().dt();
  const auto from = ens.slice(k);
  auto to = ens.slice(k + 1);
  const auto alpha = fixed_alpha(snap, d, d1, t, from.subspan(0, d));
  const SmallMatrix* alpha_ptr = alpha ? &*alpha : nullptr;
  const auto dw = noise.dw(k);
  parallel_for(ens.particles(), [&](std::size_t i) {
    euler_update(snap, d, d1, t, dt, from.subspan(i * d, d), dw, noise.db(i, k), alpha_ptr, to.subspan(i * d, d));
  });
}

}  // namespace

ParticleEnsemble::ParticleEnsemble(std::size_t n, std::size_t steps, std::size_t dim, double mass, PathId path)
    : n_(n), steps_(steps), dim_(dim), mass_(mass), path_(path), states_(n * (steps + 1) * dim, 0.0) {
  if (n == 0) throw InvalidArgument("ensemble needs at least one particle");
  if (!(mass > 0.0)) throw InvalidArgument("ensemble mass must be positive");
}

EmpiricalMeasure empirical_law(const ParticleEnsemble& ensemble, std::size_t k) {
  if (k > ensemble.steps()) {
    throw InvalidArgument("time index " + std::to_string(k) + " outside grid of " +
                          std::to_string(ensemble.steps()) + " steps");
  }
  const auto s = ensemble.slice(k);
  return EmpiricalMeasure::uniform(ensemble.dim(), std::vector<double>(s.begin(), s.end()), ensemble.mass());
}

std::optional<SmallMatrix> fixed_alpha(const CoefficientSnapshot& snap, std::size_t dim_x, std::size_t dim_w,
                                       double t, std::span<const double> x) {
  if (!snap.state_independent_diffusion()) return std::nullopt;
  SmallMatrix a(dim_x, dim_x);
  SmallMatrix s(dim_x, dim_w);
  snap.diffusion(x, a);
  snap.sigma(x, s);
  return alpha_from(a, s, t, x);
}

void euler_update(const CoefficientSnapshot& snap, std::size_t dim_x, std::size_t dim_w, double t, double dt,
                  std::span<const double> x, std::span<const double> dw, std::span<const double> db,
                  const SmallMatrix* alpha, std::span<double> out) {
  std::array<double, kMaxDim> b{};
  const std::span<double> drift(b.data(), dim_x);
  snap.drift(x, drift);
  SmallMatrix s(dim_x, dim_w);
  snap.sigma(x, s);
  for (std::size_t c = 0; c < dim_x; ++c) out[c] = x[c] + drift[c] * dt;
  s.apply_add(dw, out);
  if (alpha) {
    alpha->apply_add(db, out);
  } else if (!snap.degenerate_alpha()) {
    SmallMatrix a(dim_x, dim_x);
    snap.diffusion(x, a);
    alpha_from(a, s, t, x).apply_add(db, out);
  }
}

std::vector<double> euler_step(const CoefficientSet& coeffs, std::span<const double> state, const EmpiricalMeasure& mu,
                               std::span<const double> dw, std::span<const double> db, double t, double dt) {
  const std::size_t d = coeffs.dim_x();
  const std::size_t n = particle_count(state, d);
  if (!(dt > 0.0)) throw InvalidArgument("euler_step: dt must be positive");
  if (dw.size() != coeffs.dim_w() || db.size() != n * d) throw InvalidArgument("euler_step: noise shape mismatch");
  const auto snap = coeffs.snapshot(t, mu);
  const auto alpha = fixed_alpha(*snap, d, coeffs.dim_w(), t, state.subspan(0, d));
  std::vector<double> out(state.size());
  parallel_for(n, [&](std::size_t i) {
    euler_update(*snap, d, coeffs.dim_w(), t, dt, state.subspan(i * d, d), dw, db.subspan(i * d, d),
                 alpha ? &*alpha : nullptr, std::span<double>(out).subspan(i * d, d));
  });
  return out;
}

ParticleEnsemble run_particle_system(const CoefficientSet& coeffs, const NoiseBundle& noise,
                                     std::span<const double> initial, double mass) {
  const std::size_t d = coeffs.dim_x();
  const std::size_t n = particle_count(initial, d);
  check_noise(coeffs, noise, n);
  const std::size_t steps = noise.grid().steps();
  ParticleEnsemble ens(n, steps, d, mass, noise.path_id());
  std::copy(initial.begin(), initial.end(), ens.slice(0).begin());
  for (std::size_t k = 0; k < steps; ++k) {
    const auto mu = empirical_law(ens, k);
    const auto snap = coeffs.snapshot(noise.grid().time(k), mu);
    advance(*snap, coeffs, noise, ens, k);
  }
  return ens;
}

ParticleEnsemble run_frozen(const CoefficientSet& coeffs, std::span<const EmpiricalMeasure> laws,
                            const NoiseBundle& noise, std::span<const double> initial, double mass) {
  const std::size_t d = coeffs.dim_x();
  const std::size_t n = particle_count(initial, d);
  check_noise(coeffs, noise, n);
  const std::size_t steps = noise.grid().steps();
  if (laws.size() != steps + 1) {
    throw IncompatibleTrajectory("frozen law has " + std::to_string(laws.size()) + " time points, grid needs " +
                                 std::to_string(steps + 1));
  }
  ParticleEnsemble ens(n, steps, d, mass, noise.path_id());
  std::copy(initial.begin(), initial.end(), ens.slice(0).begin());
  for (std::size_t k = 0; k < steps; ++k) {
    const auto snap = coeffs.snapshot(noise.grid().time(k), laws[k]);
    advance(*snap, coeffs, noise, ens, k);
  }
  return ens;
}

ParticleEnsemble run_stratonovich_system(const StratonovichSigma& sigma, const NoiseBundle& noise,
                                         std::span<const double> initial, double mass) {
  const std::size_t d = sigma.dim_x;
  const std::size_t d1 = sigma.dim_w;
  const std::size_t n = particle_count(initial, d);
  if (noise.dim_w() != d1) throw InvalidArgument("noise dim_w does not match sigma");
  const std::size_t steps = noise.grid().steps();
  ParticleEnsemble ens(n, steps, d, mass, noise.path_id());
  std::copy(initial.begin(), initial.end(), ens.slice(0).begin());
  std::vector<double> predictor(n * d);
  std::vector<SmallMatrix> s_start(n);
  for (std::size_t k = 0; k < steps; ++k) {
    const auto dw = noise.dw(k);
    const auto from = ens.slice(k);
    auto to = ens.slice(k + 1);
    const auto mu = empirical_law(ens, k);
    parallel_for(n, [&](std::size_t i) {
      evaluate_sigma(sigma, from.subspan(i * d, d), mu, s_start[i]);
      auto p = std::span<double>(predictor).subspan(i * d, d);
      std::copy_n(from.begin() + static_cast<std::ptrdiff_t>(i * d), d, p.begin());
      s_start[i].apply_add(dw, p);
    });
    const auto mu_predicted = EmpiricalMeasure::uniform(d, predictor, mass);
    parallel_for(n, [&](std::size_t i) {
      SmallMatrix s_end;
      evaluate_sigma(sigma, std::span<const double>(predictor).subspan(i * d, d), mu_predicted, s_end);
      const SmallMatrix s_mid = 0.5 * (s_start[i] + s_end);
      auto out = to.subspan(i * d, d);
      std::copy_n(from.begin() + static_cast<std::ptrdiff_t>(i * d), d, out.begin());
      s_mid.apply_add(dw, out);
    });
  }
  return ens;
}

}  // namespace mfsim
