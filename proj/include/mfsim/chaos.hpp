#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mfsim/coeffs.hpp"
#include "mfsim/initial_law.hpp"
#include "mfsim/measures.hpp"
#include "mfsim/noise.hpp"
#include "mfsim/simulate.hpp"

namespace mfsim {

struct RateFit {
  std::vector<double> ns;
  std::vector<double> errors;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};

/// Least squares of log e against log N. Needs at least 3 distinct N and
/// positive errors (InvalidArgument otherwise).
RateFit fit_rate(std::span<const double> ns, std::span<const double> errors);

/// <mu_t, phi> of the limit law on one W path, when known in closed form.
using ReferenceFunctional = std::function<double(const NoiseBundle& noise, std::size_t t_index)>;

struct RateExperiment {
  std::vector<std::size_t> ns;
  std::size_t paths = 10;
  double t = 1.0;
  std::uint64_t seed = 1;
  /// Particles in the reference run when no closed form is supplied; must be
  /// at least 8 * max(ns).
  std::size_t reference_particles = 0;
};

struct RateResult {
  RateFit fit;
  /// error_se[i]: standard error of errors[i] over the W paths.
  std::vector<double> error_se;
  /// abs_errors[i][p]: |<L^N_t, phi> - <mu_t, phi>| on path p.
  std::vector<std::vector<double>> abs_errors;
};

/// e(N) = average over W paths of |<L^N_t, phi> - <mu_t, phi>|. Each
/// (N, path) cell uses the shared W path and its own B and X_0 streams.
/// The reference is `closed_form` when given, else a reference particle run
/// on the same W path (ReferenceQuality if reference_particles < 8 max N).
RateResult convergence_rate(const CoefficientSet& coeffs, const InitialLaw& initial, double mass,
                            const TimeGrid& grid, const TestFunction& phi, const RateExperiment& experiment,
                            const ReferenceFunctional* closed_form);

/// Pair average [S1 S2 - sum_i phi1(X_i) phi2(X_i)] / (N (N - 1)) over
/// ordered pairs i != j of the probability-normalized cloud at t_index.
double pair_average(const ParticleEnsemble& ensemble, std::size_t t_index, const TestFunction& phi1,
                    const TestFunction& phi2);

struct ChaosGap {
  double gap = 0.0;             // mean over paths of |pair average - m1 m2|
  double standard_error = 0.0;
  std::vector<double> per_path;  // signed pair average - m1 m2
};

/// Conditional chaos gap. reference1[p], reference2[p] are the
/// probability-normalized integrals of phi1, phi2 against the limit law on
/// the W path of ensembles[p]. Throws InvalidArgument if N < 2.
ChaosGap conditional_chaos_gap(std::span<const ParticleEnsemble> ensembles, std::size_t t_index,
                               const TestFunction& phi1, const TestFunction& phi2,
                               std::span<const double> reference1, std::span<const double> reference2);

/// Integrand Y_s = value(t_j, W_{t_j}, B_{t_j}) (d = d1 = 1), bounded by `bound`.
struct IntegrandSpec {
  std::string name;
  std::function<double(double, double, double)> value;
  double bound = 1.0;
};

enum class MartingaleCase { kB, kW };

struct MartingaleTest {
  double statistic = 0.0;       // z (B case) or normalized discrepancy (W case)
  double estimate = 0.0;        // E[int Y dB | W] estimate, or the raw W-case discrepancy
  double standard_error = 0.0;
};

/// B case: the idiosyncratic paths of `noise` are the resamples at fixed W;
/// estimate = mean of sum_j Y_j dB_j, z = estimate / standard error.
/// W case: the paths are split in two independent halves; the first gives
/// mean of sum_j Y_j dW_j, the second sum_j (mean Y_j) dW_j; the statistic
/// is their difference over the combined standard error. A zero error with a
/// zero estimate gives statistic 0. |Y| > bound throws AssumptionViolation.
MartingaleTest conditional_martingale_test(const IntegrandSpec& y, const NoiseBundle& noise, MartingaleCase which);

}  // namespace mfsim
