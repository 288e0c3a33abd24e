#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mfsim/coeffs.hpp"
#include "mfsim/measures.hpp"
#include "mfsim/noise.hpp"
#include "mfsim/stratonovich.hpp"

namespace mfsim {

/// Positions of N particles at every grid time, conditioned on one W path.
/// Stored time-major: slice(k) is the N x d block at t_k.
class ParticleEnsemble {
 public:
  ParticleEnsemble(std::size_t n, std::size_t steps, std::size_t dim, double mass, PathId path);

  std::size_t particles() const noexcept { return n_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t dim() const noexcept { return dim_; }
  double mass() const noexcept { return mass_; }
  PathId path_id() const noexcept { return path_; }

  std::span<const double> slice(std::size_t k) const noexcept {
    return std::span<const double>(states_).subspan(k * n_ * dim_, n_ * dim_);
  }
  std::span<double> slice(std::size_t k) noexcept { return std::span<double>(states_).subspan(k * n_ * dim_, n_ * dim_); }
  std::span<const double> position(std::size_t i, std::size_t k) const noexcept {
    return slice(k).subspan(i * dim_, dim_);
  }

 private:
  std::size_t n_;
  std::size_t steps_;
  std::size_t dim_;
  double mass_;
  PathId path_;
  std::vector<double> states_;
};

/// L^N_{t_k} scaled to mass r: N atoms of weight r / N. Throws
/// InvalidArgument if k is outside the grid.
EmpiricalMeasure empirical_law(const ParticleEnsemble& ensemble, std::size_t k);

/// alpha for a snapshot whose diffusion does not depend on x, else nullopt.
std::optional<SmallMatrix> fixed_alpha(const CoefficientSnapshot& snap, std::size_t dim_x, std::size_t dim_w,
                                       double t, std::span<const double> x);

/// out = x + b dt + sigma dW + alpha dB for one particle. `alpha` may be
/// null, in which case it is computed at x (or skipped when the snapshot
/// declares degenerate_alpha()).
void euler_update(const CoefficientSnapshot& snap, std::size_t dim_x, std::size_t dim_w, double t, double dt,
                  std::span<const double> x, std::span<const double> dw, std::span<const double> db,
                  const SmallMatrix* alpha, std::span<double> out);

/// One Euler-Maruyama step of N particles (state and dB are N x d) with the
/// same dW for every particle.
std::vector<double> euler_step(const CoefficientSet& coeffs, std::span<const double> state, const EmpiricalMeasure& mu,
                               std::span<const double> dw, std::span<const double> db, double t, double dt);

/// Interacting particle system: the measure argument at step k is the
/// start-of-step empirical measure L^N_{t_k} with mass r.
ParticleEnsemble run_particle_system(const CoefficientSet& coeffs, const NoiseBundle& noise,
                                     std::span<const double> initial, double mass);

/// Frozen-coefficient SDE: the measure argument at step k is laws[k].
ParticleEnsemble run_frozen(const CoefficientSet& coeffs, std::span<const EmpiricalMeasure> laws,
                            const NoiseBundle& noise, std::span<const double> initial, double mass);

/// Particle system for dX = sigma(X, L^N) o dW with the Heun scheme: a
/// predictor X~ = X + sigma(X, L^N) dW, then
/// X' = X + (sigma(X, L^N) + sigma(X~, L~^N)) dW / 2.
ParticleEnsemble run_stratonovich_system(const StratonovichSigma& sigma, const NoiseBundle& noise,
                                         std::span<const double> initial, double mass);

}  // namespace mfsim
