#pragma once

#include <string>
#include <vector>

#include "mfsim/coeffs.hpp"
#include "mfsim/measures.hpp"
#include "mfsim/mckv.hpp"
#include "mfsim/noise.hpp"

namespace mfsim {

struct WeakResidual {
  std::string phi;
  std::vector<double> values;  // R(t_k), k = 0..M; values[0] == 0
  double sup = 0.0;            // max_k |R(t_k)|
};

/// Pathwise residual of the weak formulation on the W path of `noise`:
///
///   R(t_k) = <mu_k, phi> - <mu_0, phi>
///            - sum_{j<k} (<mu_j, a : D^2 phi> + <mu_j, b . D phi>) dt
///            - sum_{j<k} <mu_j, sigma^T D phi> . dW_j
///
/// with coefficients evaluated at (t_j, x, mu_j). If `frozen` is given the
/// coefficients read their measure argument from it instead (the linear
/// equation with frozen coefficients).
WeakResidual weak_residual(const LawTrajectory& law, const CoefficientSet& coeffs, const TestFunction& phi,
                           const NoiseBundle& noise, const LawTrajectory* frozen = nullptr);

}  // namespace mfsim
