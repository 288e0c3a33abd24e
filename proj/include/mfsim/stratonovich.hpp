#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mfsim/coeffs.hpp"
#include "mfsim/linalg.hpp"
#include "mfsim/measures.hpp"

namespace mfsim {

/// d x d x d1 array with T(i, j, k) = d/dx_j sigma^{ik} (or d/dy_j K^{ik}).
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t d, std::size_t d1) : d_(d), d1_(d1) {}

  std::size_t dim_x() const noexcept { return d_; }
  std::size_t dim_w() const noexcept { return d1_; }

  double& operator()(std::size_t i, std::size_t j, std::size_t k) noexcept {
    return data_[(i * kMaxDim + j) * kMaxDim + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return data_[(i * kMaxDim + j) * kMaxDim + k];
  }
  void fill(double v) noexcept { data_.fill(v); }

 private:
  std::size_t d_ = 0;
  std::size_t d1_ = 0;
  std::array<double, kMaxDim * kMaxDim * kMaxDim> data_{};
};

/// Measure-free part sigma_loc(x) with its spatial gradient.
struct LocalSigma {
  std::function<void(std::span<const double>, SmallMatrix&)> value;
  std::function<void(std::span<const double>, Tensor3&)> gradient;
};

/// Convolution part sigma_K(x, mu) = int K(x, y) mu(dy). Its Lions
/// derivative is d_y K(x, y); d_x K enters the ordinary spatial gradient.
struct KernelSigma {
  std::function<void(std::span<const double>, std::span<const double>, SmallMatrix&)> kernel;
  std::function<void(std::span<const double>, std::span<const double>, Tensor3&)> d_dx;
  std::function<void(std::span<const double>, std::span<const double>, Tensor3&)> d_dy;
};

/// sigma(x, mu) = sigma_loc(x) + int K(x, y) mu(dy); either part may be absent.
struct StratonovichSigma {
  std::size_t dim_x = 1;
  std::size_t dim_w = 1;
  std::optional<LocalSigma> local;
  std::optional<KernelSigma> kernel;
  /// Lipschitz / bound metadata forwarded to the converted coefficients.
  double lipschitz = 1.0;
  double bound = 1.0;
};

/// sigma(x, mu).
void evaluate_sigma(const StratonovichSigma& sig, std::span<const double> x, const EmpiricalMeasure& mu,
                    SmallMatrix& out);

struct ItoCoefficients {
  std::vector<double> drift;   // b
  SmallMatrix diffusion;       // a = sigma sigma^T / 2
  std::vector<double> lions;   // G
};

/// Ito drift b^i = (sigma^{jk} d_j sigma^{ik} + G^i) / 2 and diffusion
/// a = sigma sigma^T / 2 of the Stratonovich equation dX = sigma(X, mu) o dW,
/// with G^i(x, mu) = sum_y w_y sigma^{jk}(y, mu) d_{y_j} K^{ik}(x, y).
/// include_lions_term = false drops G (ablation only).
ItoCoefficients ito_from_stratonovich(const StratonovichSigma& sig, double t, std::span<const double> x,
                                      const EmpiricalMeasure& mu, bool include_lions_term = true);

/// The corrected Ito triple as a CoefficientSet (alpha = 0). Snapshots
/// precompute sigma at the atoms, so one particle costs O(#atoms).
CoefficientSet stratonovich_to_ito(const StratonovichSigma& sig, bool include_lions_term = true);

namespace stratonovich_families {

/// sigma = s (constant d x d1 matrix).
LocalSigma constant(const SmallMatrix& s);
/// d = d1 = 1: sigma(x) = s0 + s1 x.
LocalSigma affine(double s0, double s1);
/// sigma^{ik}(x) = amplitude * sin(x_i) if i == k, else 0.
LocalSigma sine(std::size_t d, std::size_t d1, double amplitude = 1.0);
/// K^{ik}(x, y) = amplitude * exp(-|x - y|^2 / (2 width^2)) if i == k, else 0.
KernelSigma gaussian_kernel(std::size_t d, std::size_t d1, double amplitude, double width);

}  // namespace stratonovich_families

}  // namespace mfsim
