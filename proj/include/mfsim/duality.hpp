#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mfsim/coeffs.hpp"
#include "mfsim/measures.hpp"
#include "mfsim/mckv.hpp"
#include "mfsim/noise.hpp"

namespace mfsim {

/// f_s(x) = E[phi(X_t^{s,x}) | W] for the SDE with coefficients frozen
/// along `frozen`, estimated from n_inner independent idiosyncratic paths
/// with the common path of `noise` held fixed. Inner paths come from the
/// (inner_seed, inner, path, sample) streams. s_index <= t_index are grid
/// indices. Throws InsufficientSamples if n_inner < 2.
Estimate feynman_kac_f(const CoefficientSet& coeffs, const LawTrajectory& frozen, std::span<const double> x,
                       std::size_t s_index, std::size_t t_index, const TestFunction& phi, const NoiseBundle& noise,
                       std::size_t n_inner, std::uint64_t inner_seed);

/// f_0 evaluated at every atom of mu0 (the pairing <mu0, f0> then needs no
/// interpolation).
struct DualEvaluation {
  std::string phi;
  double t = 0.0;
  EmpiricalMeasure mu0;
  std::vector<Estimate> f0;
  PathId path;

  /// <mu0, f0> and its inner Monte-Carlo standard error.
  Estimate pairing() const;
};

DualEvaluation dual_at_atoms(const CoefficientSet& coeffs, const LawTrajectory& frozen, const EmpiricalMeasure& mu0,
                             std::size_t t_index, const TestFunction& phi, const NoiseBundle& noise,
                             std::size_t n_inner, std::uint64_t inner_seed);

struct DualityGap {
  double gap = 0.0;             // mean over paths of <mu_t, phi> - <mu0, f0>
  double standard_error = 0.0;  // of the mean
  std::vector<double> per_path;
  std::vector<double> inner_standard_error;  // per path, from the dual side
};

/// Outer average over W paths of <mu_t, phi> - <mu0, f0>. `forward[p]` and
/// `dual[p]` must be conditioned on the same W path (else
/// ConditioningMismatch). With two or more paths the standard error is the
/// sample standard deviation of the per-path gaps over sqrt(M); the inner
/// dual variance is part of that spread because inner samples are drawn
/// independently per path. With one path only the inner error is available.
DualityGap duality_gap(std::span<const LawTrajectory> forward, std::span<const DualEvaluation> dual,
                       const TestFunction& phi, double t);

struct WitnessCell {
  std::string phi;
  double t = 0.0;
  double mean_abs_gap = 0.0;         // E|<mu1_t - mu2_t, phi>|
  double mean_gap = 0.0;             // E<mu1_t - mu2_t, phi>
  double mean_gap_error = 0.0;       // standard error of mean_gap
  double combined_error = 0.0;       // RMS over paths of the per-path sd of the difference
  bool pass = false;
};

struct WitnessReport {
  std::vector<WitnessCell> cells;
  bool pass = true;
};

/// Compares two estimators of the same linear equation path by path. A cell
/// passes when E|D| <= 3 * combined_error, where the per-path sd of
/// D = <mu1_t - mu2_t, phi> combines the two within-ensemble errors
/// plus a summation-rounding allowance of 1e-12 (|<mu1_t, phi>| + |<mu2_t, phi>|)
/// (or when every D is exactly zero).
WitnessReport uniqueness_witness(std::span<const LawTrajectory> first, std::span<const LawTrajectory> second,
                                 std::span<const TestFunction> bank, std::span<const double> times);

}  // namespace mfsim
