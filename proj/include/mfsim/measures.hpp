#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mfsim/linalg.hpp"

namespace mfsim {

/// Finite positive measure on R^d stored as a weighted point cloud.
///
/// Points are stored row-major (atom i occupies points()[i*d, (i+1)*d)).
/// Construction validates the invariants: at least one atom, matching
/// lengths, non-negative finite weights, positive total mass. The first
/// moment is computed once at construction; everything else is derived on
/// demand. Instances are immutable and safe to share across threads.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure(std::size_t dim, std::vector<double> points, std::vector<double> weights);

  /// N atoms with equal weight mass/N.
  static EmpiricalMeasure uniform(std::size_t dim, std::vector<double> points, double mass);
  static EmpiricalMeasure dirac(std::span<const double> location, double mass = 1.0);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return weights_.size(); }
  double mass() const noexcept { return mass_; }

  std::span<const double> points() const noexcept { return points_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const double> point(std::size_t i) const noexcept {
    return std::span<const double>(points_).subspan(i * dim_, dim_);
  }
  double weight(std::size_t i) const noexcept { return weights_[i]; }

  /// <mu, x> / mass, i.e. the barycenter.
  std::span<const double> mean() const noexcept { return mean_; }

  /// Copy with coincident atoms merged (weights summed), atoms sorted
  /// lexicographically, and zero-weight atoms dropped (unless all are zero).
  EmpiricalMeasure canonical() const;

  /// Same atoms with every weight multiplied by `factor`.
  EmpiricalMeasure scaled(double factor) const;

 private:
  std::size_t dim_;
  std::vector<double> points_;
  std::vector<double> weights_;
  double mass_ = 0.0;
  std::vector<double> mean_;
};

/// C^2 test function with analytic derivatives and Lip/sup metadata.
struct TestFunction {
  std::string name;
  std::size_t dim = 1;
  std::function<double(std::span<const double>)> value;
  /// Writes the gradient (dim entries).
  std::function<void(std::span<const double>, std::span<double>)> gradient;
  /// Writes the Hessian as a dim x dim matrix.
  std::function<void(std::span<const double>, SmallMatrix&)> hessian;
  double lipschitz_bound = 0.0;  // +inf if unbounded
  double sup_bound = 0.0;        // +inf if unbounded
};

/// Sum_i w_i phi(x_i). Throws EvaluationError naming the atom if phi is not finite there.
double integrate(const EmpiricalMeasure& mu, const TestFunction& phi);

/// Value together with a Monte-Carlo standard error, treating the atoms as
/// an i.i.d. sample weighted by their weights (se = mass * sd / sqrt(n)).
struct Estimate {
  double value = 0.0;
  double standard_error = 0.0;
};
Estimate integrate_with_error(const EmpiricalMeasure& mu, const TestFunction& phi);

enum class BlMode {
  kExact,   // d = 1 only: exact on the discretized Lip_1 class
  kSliced,  // any d: max over random 1D projections (lower bound)
};

struct BlOptions {
  BlMode mode = BlMode::kExact;
  /// Grid nodes per unit length; grid spacing is 1 / grid_resolution.
  std::size_t grid_resolution = 32;
  std::size_t projections = 32;
  std::uint64_t projection_seed = 0x5EED;
};

/// Bounded-Lipschitz (Kantorovich-Rubinstein) distance
/// sup { int phi d(mu - nu) : |phi| <= 1, Lip(phi) <= 1 }.
///
/// In d = 1 the supremum is taken over continuous piecewise-linear phi on
/// the uniform grid of spacing h = 1/grid_resolution spanning the joint
/// support padded by one unit and aligned to integers. With 1/h integral the
/// chain LP has integral vertices in units of h, so a dynamic program over
/// node values k*h, |k| <= grid_resolution, is exact on that class. The
/// result is a lower bound on rho that is monotone under grid refinement
/// by integer factors and within O(h * mass) of rho.
double bl_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                   std::size_t grid_resolution);
double bl_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const BlOptions& options);

/// Exact Wasserstein-1 in d = 1 for equal masses: int |F_mu - F_nu| dx.
double w1_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

}  // namespace mfsim
