#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfsim/coeffs.hpp"
#include "mfsim/initial_law.hpp"
#include "mfsim/noise.hpp"
#include "mfsim/stratonovich.hpp"

namespace mfsim::models {

/// Names accepted by make_model.
const std::vector<std::string>& names();

/// Built-in coefficient families. Parameters (all optional, defaults in
/// brackets):
///   constant:   b [0], sigma [1], alpha [0]; b * 1, sigma * E, a = (alpha^2 I + sigma sigma^T) / 2
///   linear_local (d = d1 = 1): b0 [0], b1 [0], s0 [1], s1 [0], alpha [0], a (overrides a)
///   mean_reversion_to_conditional_mean: beta [1], sigma [1], alpha [1], radius [3];
///       b = beta (<mu, id> / r - x)
///   convolution_kernel_gaussian: kernel_amplitude [1], kernel_width [0.5], local ["none"|"sine"|"constant"],
///       local_amplitude [1], lions [true]; Ito form of dX = sigma(X, mu) o dW
/// E is the d x d1 matrix with ones on the diagonal. Unknown names throw
/// ConfigError("unknown_model").
CoefficientSet make_model(const std::string& name, std::size_t dim_x, std::size_t dim_w,
                          const nlohmann::json& params);

/// Stratonovich sigma of a model (constant, linear_local,
/// convolution_kernel_gaussian). Throws ConfigError("unsupported_model")
/// for models outside the kernel-plus-local family.
StratonovichSigma make_stratonovich(const std::string& name, std::size_t dim_x, std::size_t dim_w,
                                    const nlohmann::json& params);

struct Gaussian1D {
  double mean = 0.0;
  double variance = 0.0;
};

/// Conditional law of X_{t_k} given W for d = d1 = 1 models with Gaussian
/// (or point) initial law: constant (exact, also for the Euler scheme) and
/// mean_reversion_to_conditional_mean. `discrete` selects the Euler
/// recursion v_{k+1} = (1 - beta dt)^2 v_k + alpha^2 dt instead of the ODE
/// solution. nullopt when no closed form is known.
std::optional<Gaussian1D> conditional_law(const std::string& name, const nlohmann::json& params,
                                          const InitialLaw& initial, const NoiseBundle& noise, std::size_t k,
                                          bool discrete);

/// E phi(Y) for Y ~ N(m, v), phi in {one, x, x2, sin, bump} (1D names);
/// nullopt otherwise.
std::optional<double> gaussian_expectation(const std::string& phi, double m, double v);

}  // namespace mfsim::models
