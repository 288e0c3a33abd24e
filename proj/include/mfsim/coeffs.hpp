#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfsim/linalg.hpp"
#include "mfsim/measures.hpp"

namespace mfsim {

/// Coefficients with (t, mu) fixed. Produced once per time step and then
/// evaluated for every particle, so models can precompute measure
/// functionals (moments, kernel sums) in the snapshot. A snapshot may keep a
/// reference to the measure it was built from; that measure must outlive it.
class CoefficientSnapshot {
 public:
  virtual ~CoefficientSnapshot() = default;

  virtual void drift(std::span<const double> x, std::span<double> out) const = 0;
  virtual void sigma(std::span<const double> x, SmallMatrix& out) const = 0;
  virtual void diffusion(std::span<const double> x, SmallMatrix& out) const = 0;

  /// True when a and sigma do not depend on x (alpha can be computed once).
  virtual bool state_independent_diffusion() const { return false; }

  /// True when 2a = sigma sigma^T holds by construction, so alpha = 0 and the
  /// idiosyncratic noise drops out without an eigendecomposition.
  virtual bool degenerate_alpha() const { return false; }
};

class CoefficientModel {
 public:
  virtual ~CoefficientModel() = default;
  virtual std::unique_ptr<const CoefficientSnapshot> snapshot(double t, const EmpiricalMeasure& mu) const = 0;
  /// False when a, b and sigma ignore the measure argument.
  virtual bool measure_dependent() const { return true; }
};

/// The coefficient triple (a, b, sigma) on R^d with d1-dimensional common
/// noise, plus the Lipschitz constant K and the bound K_m it is declared to
/// satisfy. Evaluators must be pure and reentrant.
class CoefficientSet {
 public:
  CoefficientSet(std::string name, std::size_t dim_x, std::size_t dim_w, std::shared_ptr<const CoefficientModel> model,
                 double lipschitz, double bound);

  const std::string& name() const noexcept { return name_; }
  std::size_t dim_x() const noexcept { return dim_x_; }
  std::size_t dim_w() const noexcept { return dim_w_; }
  double lipschitz() const noexcept { return lipschitz_; }
  double bound() const noexcept { return bound_; }
  bool measure_dependent() const { return model_->measure_dependent(); }

  /// Spatial smoothness order m the model is known to satisfy (metadata only).
  int smoothness() const noexcept { return smoothness_; }
  void set_smoothness(int m) noexcept { smoothness_ = m; }

  std::unique_ptr<const CoefficientSnapshot> snapshot(double t, const EmpiricalMeasure& mu) const {
    return model_->snapshot(t, mu);
  }

  SmallMatrix a(double t, std::span<const double> x, const EmpiricalMeasure& mu) const;
  std::vector<double> b(double t, std::span<const double> x, const EmpiricalMeasure& mu) const;
  SmallMatrix sigma(double t, std::span<const double> x, const EmpiricalMeasure& mu) const;

 private:
  std::string name_;
  std::size_t dim_x_;
  std::size_t dim_w_;
  std::shared_ptr<const CoefficientModel> model_;
  double lipschitz_;
  double bound_;
  int smoothness_ = 0;
};

/// Coefficients given as plain callables of (t, x, mu). The simplest way to
/// define a one-off model; no per-step precomputation.
struct FunctionalCoefficients {
  std::function<void(double, std::span<const double>, const EmpiricalMeasure&, std::span<double>)> drift;
  std::function<void(double, std::span<const double>, const EmpiricalMeasure&, SmallMatrix&)> sigma;
  std::function<void(double, std::span<const double>, const EmpiricalMeasure&, SmallMatrix&)> diffusion;
  bool measure_dependent = true;
  bool state_independent_diffusion = false;
};

CoefficientSet make_coefficients(std::string name, std::size_t dim_x, std::size_t dim_w,
                                 FunctionalCoefficients fns, double lipschitz, double bound);

/// Default PSD tolerance 1e-10 * (1 + ||2a - sigma sigma^T||).
double default_psd_tolerance(const SmallMatrix& parabolic_part);

/// 2a - sigma sigma^T.
SmallMatrix parabolic_part(const SmallMatrix& a, const SmallMatrix& sigma);

/// Symmetric PSD square root of 2a - sigma sigma^T. Eigenvalues in
/// [-psd_tolerance, 0) are clipped to zero; anything below raises
/// ParabolicityViolation carrying (t, x, eigenvalue). A negative
/// psd_tolerance selects the default.
SmallMatrix alpha_from(const SmallMatrix& a, const SmallMatrix& sigma, double t, std::span<const double> x,
                       double psd_tolerance = -1.0);

SmallMatrix alpha(const CoefficientSet& coeffs, double t, std::span<const double> x, const EmpiricalMeasure& mu,
                  double psd_tolerance = -1.0);

struct AuditOptions {
  std::size_t probes = 256;
  std::uint64_t seed = 1;
  double radius = 3.0;      // x probes drawn from [-radius, radius]^d
  double horizon = 1.0;     // t probes drawn from [0, horizon]
  double mass = 1.0;        // mass of the probe measures
  std::size_t probe_atoms = 8;
  double perturbation = 0.05;
  std::size_t grid_resolution = 64;
};

struct AssumptionReport {
  std::size_t probes = 0;
  double max_a_norm = 0.0;
  double max_sigma_norm = 0.0;
  double max_b_norm = 0.0;
  double declared_bound = 0.0;
  double max_asymmetry = 0.0;
  double min_parabolic_eigenvalue = 0.0;
  double worst_parabolic_time = 0.0;
  std::vector<double> worst_parabolic_point;
  double lipschitz_x_quotient = 0.0;
  double lipschitz_mu_quotient = 0.0;
  double declared_lipschitz = 0.0;
  std::vector<std::string> violations;

  bool clean() const noexcept { return violations.empty(); }
};

/// Randomized audit of boundedness, symmetry of a, parabolicity and
/// Lipschitz continuity in x and in mu (mu perturbed by translating its
/// atoms; the distance is bl_distance). Report-only: never throws on a
/// violated assumption.
AssumptionReport check_assumptions(const CoefficientSet& coeffs, const AuditOptions& options);

}  // namespace mfsim
