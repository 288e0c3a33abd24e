#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mfsim/coeffs.hpp"
#include "mfsim/measures.hpp"
#include "mfsim/noise.hpp"
#include "mfsim/simulate.hpp"

namespace mfsim {

/// Conditional-law trajectory mu_{t_k}, k = 0..M, on one common-noise path.
struct LawTrajectory {
  TimeGrid grid;
  std::vector<EmpiricalMeasure> laws;
  PathId path;

  double mass() const { return laws.front().mass(); }
};

LawTrajectory law_trajectory(const ParticleEnsemble& ensemble, const TimeGrid& grid);

/// The constant-in-time trajectory mu_{t_k} = mu_0 (Picard initial guess).
LawTrajectory constant_trajectory(const EmpiricalMeasure& mu0, const TimeGrid& grid, PathId path);

/// Phi(mu): simulate the frozen SDE with measure argument read from `input`
/// and return the empirical conditional law. The idiosyncratic increments
/// come from `noise`, so repeated calls use common random numbers. Throws
/// IncompatibleTrajectory if `input` lives on another grid or W path.
LawTrajectory phi_map(const CoefficientSet& coeffs, const LawTrajectory& input, const NoiseBundle& noise,
                      std::span<const double> initial, double mass);

/// dt * sum_{k=1..M} rho(mu_{t_k}, nu_{t_k}).
double trajectory_distance(const LawTrajectory& mu, const LawTrajectory& nu, const BlOptions& options);

struct PicardOptions {
  double tol = 1e-3;
  std::size_t max_iter = 20;
  BlOptions metric{BlMode::kExact, 16, 16, 0x5EED};
};

struct PicardResult {
  LawTrajectory law;
  /// metrics[j] = d(mu^(j+1), mu^(j)).
  std::vector<double> metrics;
  bool converged = false;
  std::size_t iterations = 0;
};

/// mu^(j+1) = Phi(mu^(j)) from the constant trajectory at the initial
/// cloud; stops once metrics[j] < tol or after max_iter applications of Phi
/// (returning the last iterate flagged as not converged). Coefficients that
/// ignore the measure stop after one application and report [gap, 0].
PicardResult picard_solve(const CoefficientSet& coeffs, const NoiseBundle& noise, std::span<const double> initial,
                          double mass, const PicardOptions& options);

}  // namespace mfsim
