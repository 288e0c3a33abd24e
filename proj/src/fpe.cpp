#include "mfsim/fpe.hpp"

#include <algorithm>
#include <cmath>

#include "mfsim/errors.hpp"

namespace mfsim {

WeakResidual weak_residual(const LawTrajectory& law, const CoefficientSet& coeffs, const TestFunction& phi,
                           const NoiseBundle& noise, const LawTrajectory* frozen) {
  const TimeGrid& grid = noise.grid();
  if (!(law.grid == grid) || law.laws.size() != grid.steps() + 1) {
    throw IncompatibleTrajectory("weak_residual: law and noise use different grids");
  }
  if (frozen && (!(frozen->grid == grid) || frozen->laws.size() != grid.steps() + 1)) {
    throw IncompatibleTrajectory("weak_residual: frozen law uses a different grid");
  }
  if (noise.dim_w() != coeffs.dim_w() || phi.dim != coeffs.dim_x()) {
    throw InvalidArgument("weak_residual: dimension mismatch");
  }
  const std::size_t d = coeffs.dim_x();
  const std::size_t d1 = coeffs.dim_w();
  const double dt = grid.dt();

  WeakResidual out;
  out.phi = phi.name;
  out.values.assign(grid.steps() + 1, 0.0);
  const double base = integrate(law.laws[0], phi);
  double accumulated = 0.0;  // sum of the dt and dW brackets up to step k

  std::vector<double> g(d), b(d), sg(d1);
  SmallMatrix hess(d, d), a(d, d), s(d, d1);
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const EmpiricalMeasure& mu = law.laws[k];
    const auto snap = coeffs.snapshot(grid.time(k), frozen ? frozen->laws[k] : mu);
    double second = 0.0;
    double first = 0.0;
    std::vector<double> noise_bracket(d1, 0.0);
    for (std::size_t m = 0; m < mu.size(); ++m) {
      const auto x = mu.point(m);
      const double w = mu.weight(m);
      phi.gradient(x, g);
      phi.hessian(x, hess);
      snap->diffusion(x, a);
      snap->drift(x, b);
      snap->sigma(x, s);
      double ah = 0.0;
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) ah += a(i, j) * hess(i, j);
      double bg = 0.0;
      for (std::size_t i = 0; i < d; ++i) bg += b[i] * g[i];
      second += w * ah;
      first += w * bg;
      for (std::size_t c = 0; c < d1; ++c) {
        double v = 0.0;
        for (std::size_t i = 0; i < d; ++i) v += s(i, c) * g[i];
        noise_bracket[c] += w * v;
      }
    }
    const auto dw = noise.dw(k);
    double stochastic = 0.0;
    for (std::size_t c = 0; c < d1; ++c) stochastic += noise_bracket[c] * dw[c];
    accumulated += (second + first) * dt + stochastic;
    out.values[k + 1] = integrate(law.laws[k + 1], phi) - base - accumulated;
    if (!std::isfinite(out.values[k + 1])) {
      throw EvaluationError("weak residual is not finite at step " + std::to_string(k + 1), {});
    }
  }
  for (double v : out.values) out.sup = std::max(out.sup, std::abs(v));
  return out;
}

}  // namespace mfsim
