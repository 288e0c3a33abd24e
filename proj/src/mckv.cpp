#include "mfsim/mckv.hpp"

#include "mfsim/errors.hpp"

namespace mfsim {
namespace {

void check_compatible(const LawTrajectory& law, const NoiseBundle& noise) {
  if (!(law.grid == noise.grid())) throw IncompatibleTrajectory("law trajectory and noise use different grids");
  if (!(law.path == noise.path_id())) throw IncompatibleTrajectory("law trajectory is conditioned on another W path");
  if (law.laws.size() != law.grid.steps() + 1) throw IncompatibleTrajectory("law trajectory length does not match its grid");
}

}  // namespace

LawTrajectory law_trajectory(const ParticleEnsemble& ensemble, const TimeGrid& grid) {
  if (grid.steps() != ensemble.steps()) throw IncompatibleTrajectory("ensemble and grid differ in step count");
  LawTrajectory out{grid, {}, ensemble.path_id()};
  out.laws.reserve(grid.steps() + 1);
  for (std::size_t k = 0; k <= grid.steps(); ++k) out.laws.push_back(empirical_law(ensemble, k));
  return out;
}

LawTrajectory constant_trajectory(const EmpiricalMeasure& mu0, const TimeGrid& grid, PathId path) {
  return LawTrajectory{grid, std::vector<EmpiricalMeasure>(grid.steps() + 1, mu0), path};
}

LawTrajectory phi_map(const CoefficientSet& coeffs, const LawTrajectory& input, const NoiseBundle& noise,
                      std::span<const double> initial, double mass) {
  check_compatible(input, noise);
  return law_trajectory(run_frozen(coeffs, input.laws, noise, initial, mass), noise.grid());
}

double trajectory_distance(const LawTrajectory& mu, const LawTrajectory& nu, const BlOptions& options) {
  if (!(mu.grid == nu.grid) || mu.laws.size() != nu.laws.size()) {
    throw IncompatibleTrajectory("trajectories live on different grids");
  }
  double acc = 0.0;
  for (std::size_t k = 1; k < mu.laws.size(); ++k) acc += bl_distance(mu.laws[k], nu.laws[k], options);
  return acc * mu.grid.dt();
}

PicardResult picard_solve(const CoefficientSet& coeffs, const NoiseBundle& noise, std::span<const double> initial,
                          double mass, const PicardOptions& options) {
  if (!(options.tol > 0.0)) throw InvalidArgument("picard_solve: tol must be positive");
  if (options.max_iter < 1) throw InvalidArgument("picard_solve: max_iter must be at least 1");
  const auto mu0 = EmpiricalMeasure::uniform(coeffs.dim_x(), std::vector<double>(initial.begin(), initial.end()), mass);
  LawTrajectory current = constant_trajectory(mu0, noise.grid(), noise.path_id());
  PicardResult result{current, {}, false, 0};
  for (std::size_t j = 0; j < options.max_iter; ++j) {
    LawTrajectory next = phi_map(coeffs, current, noise, initial, mass);
    const double gap = trajectory_distance(next, current, options.metric);
    result.metrics.push_back(gap);
    result.iterations = j + 1;
    current = std::move(next);
    if (gap < options.tol) {
      result.converged = true;
      break;
    }
    if (!coeffs.measure_dependent()) {
      // Phi is constant: the next iterate equals this one.
      result.metrics.push_back(0.0);
      result.converged = true;
      break;
    }
  }
  result.law = std::move(current);
  return result;
}

}  // namespace mfsim
