#include "mfsim/stratonovich.hpp"

#include <algorithm>
#include <cmath>

#include "mfsim/errors.hpp"

namespace mfsim {
namespace {

void require_derivatives(const StratonovichSigma& sig) {
  if (sig.dim_x == 0 || sig.dim_x > kMaxDim || sig.dim_w == 0 || sig.dim_w > kMaxDim) {
    throw UnsupportedDimension("stratonovich sigma dimensions must lie in [1, " + std::to_string(kMaxDim) + "]");
  }
  if (sig.local && (!sig.local->value || !sig.local->gradient)) {
    throw IncompleteDerivative("local sigma needs both a value and a spatial gradient");
  }
  if (sig.kernel) {
    if (!sig.kernel->kernel) throw IncompleteDerivative("kernel sigma has no kernel evaluator");
    if (!sig.kernel->d_dy) throw IncompleteDerivative("kernel sigma has no y-derivative (Lions derivative)");
    if (!sig.kernel->d_dx) throw IncompleteDerivative("kernel sigma has no x-derivative");
  }
}

// sigma at every atom of mu, row-major blocks.
std::vector<SmallMatrix> sigma_at_atoms(const StratonovichSigma& sig, const EmpiricalMeasure& mu) {
  std::vector<SmallMatrix> out(mu.size());
  for (std::size_t m = 0; m < mu.size(); ++m) evaluate_sigma(sig, mu.point(m), mu, out[m]);
  return out;
}

// Drift, diffusion and sigma at x given sigma already evaluated at the atoms.
void corrected(const StratonovichSigma& sig, std::span<const double> x, const EmpiricalMeasure& mu,
               const std::vector<SmallMatrix>& sigma_atoms, bool include_lions, SmallMatrix& s,
               std::span<double> drift, std::span<double> lions) {
  const std::size_t d = sig.dim_x;
  const std::size_t d1 = sig.dim_w;
  s = SmallMatrix(d, d1);
  Tensor3 grad(d, d1);
  if (sig.local) {
    sig.local->value(x, s);
    sig.local->gradient(x, grad);
  }
  for (double& g : lions) g = 0.0;
  if (sig.kernel) {
    SmallMatrix k(d, d1);
    Tensor3 dx(d, d1);
    Tensor3 dy(d, d1);
    for (std::size_t m = 0; m < mu.size(); ++m) {
      const auto y = mu.point(m);
      const double w = mu.weight(m);
      sig.kernel->kernel(x, y, k);
      sig.kernel->d_dx(x, y, dx);
      sig.kernel->d_dy(x, y, dy);
      const SmallMatrix& sy = sigma_atoms[m];
      for (std::size_t i = 0; i < d; ++i) {
        double gi = 0.0;
        for (std::size_t kk = 0; kk < d1; ++kk) {
          s(i, kk) += w * k(i, kk);
          for (std::size_t j = 0; j < d; ++j) {
            grad(i, j, kk) += w * dx(i, j, kk);
            gi += sy(j, kk) * dy(i, j, kk);
          }
        }
        lions[i] += w * gi;
      }
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t kk = 0; kk < d1; ++kk) acc += s(j, kk) * grad(i, j, kk);
    drift[i] = 0.5 * acc + (include_lions ? 0.5 * lions[i] : 0.0);
  }
}

class StratonovichSnapshot final : public CoefficientSnapshot {
 public:
  StratonovichSnapshot(const StratonovichSigma& sig, const EmpiricalMeasure& mu, bool include_lions)
      : sig_(sig), mu_(mu), include_lions_(include_lions) {
    if (sig_.kernel) sigma_atoms_ = sigma_at_atoms(sig_, mu_);
  }

  void drift(std::span<const double> x, std::span<double> out) const override {
    SmallMatrix s;
    std::array<double, kMaxDim> g{};
    corrected(sig_, x, mu_, sigma_atoms_, include_lions_, s, out, std::span<double>(g.data(), sig_.dim_x));
  }
  void sigma(std::span<const double> x, SmallMatrix& out) const override { evaluate_sigma(sig_, x, mu_, out); }
  bool degenerate_alpha() const override { return true; }
  void diffusion(std::span<const double> x, SmallMatrix& out) const override {
    SmallMatrix s;
    evaluate_sigma(sig_, x, mu_, s);
    out = 0.5 * multiply_transposed(s, s);
  }

 private:
  const StratonovichSigma& sig_;
  const EmpiricalMeasure& mu_;
  bool include_lions_;
  std::vector<SmallMatrix> sigma_atoms_;
};

class StratonovichModel final : public CoefficientModel {
 public:
  StratonovichModel(StratonovichSigma sig, bool include_lions) : sig_(std::move(sig)), include_lions_(include_lions) {}

  std::unique_ptr<const CoefficientSnapshot> snapshot(double, const EmpiricalMeasure& mu) const override {
    return std::make_unique<StratonovichSnapshot>(sig_, mu, include_lions_);
  }
  bool measure_dependent() const override { return sig_.kernel.has_value(); }

 private:
  StratonovichSigma sig_;
  bool include_lions_;
};

}  // namespace

void evaluate_sigma(const StratonovichSigma& sig, std::span<const double> x, const EmpiricalMeasure& mu,
                    SmallMatrix& out) {
  out = SmallMatrix(sig.dim_x, sig.dim_w);
  if (sig.local) sig.local->value(x, out);
  if (sig.kernel) {
    SmallMatrix k(sig.dim_x, sig.dim_w);
    for (std::size_t m = 0; m < mu.size(); ++m) {
      sig.kernel->kernel(x, mu.point(m), k);
      const double w = mu.weight(m);
      for (std::size_t i = 0; i < sig.dim_x; ++i)
        for (std::size_t kk = 0; kk < sig.dim_w; ++kk) out(i, kk) += w * k(i, kk);
    }
  }
}

ItoCoefficients ito_from_stratonovich(const StratonovichSigma& sig, double, std::span<const double> x,
                                      const EmpiricalMeasure& mu, bool include_lions_term) {
  require_derivatives(sig);
  if (x.size() != sig.dim_x || mu.dim() != sig.dim_x) throw InvalidArgument("ito_from_stratonovich: dimension mismatch");
  std::vector<SmallMatrix> atoms;
  if (sig.kernel) atoms = sigma_at_atoms(sig, mu);
  ItoCoefficients out;
  out.drift.assign(sig.dim_x, 0.0);
  out.lions.assign(sig.dim_x, 0.0);
  SmallMatrix s;
  corrected(sig, x, mu, atoms, include_lions_term, s, out.drift, out.lions);
  out.diffusion = 0.5 * multiply_transposed(s, s);
  return out;
}

CoefficientSet stratonovich_to_ito(const StratonovichSigma& sig, bool include_lions_term) {
  require_derivatives(sig);
  return CoefficientSet(include_lions_term ? "stratonovich_ito" : "stratonovich_ito_without_lions", sig.dim_x,
                        sig.dim_w, std::make_shared<StratonovichModel>(sig, include_lions_term), sig.lipschitz,
                        sig.bound);
}

namespace stratonovich_families {

LocalSigma constant(const SmallMatrix& s) {
  LocalSigma out;
  out.value = [s](std::span<const double>, SmallMatrix& m) { m = s; };
  out.gradient = [s](std::span<const double>, Tensor3& g) { g = Tensor3(s.rows(), s.cols()); };
  return out;
}

LocalSigma affine(double s0, double s1) {
  LocalSigma out;
  out.value = [s0, s1](std::span<const double> x, SmallMatrix& m) {
    m = SmallMatrix(1, 1);
    m(0, 0) = s0 + s1 * x[0];
  };
  out.gradient = [s1](std::span<const double>, Tensor3& g) {
    g = Tensor3(1, 1);
    g(0, 0, 0) = s1;
  };
  return out;
}

LocalSigma sine(std::size_t d, std::size_t d1, double amplitude) {
  LocalSigma out;
  out.value = [d, d1, amplitude](std::span<const double> x, SmallMatrix& m) {
    m = SmallMatrix(d, d1);
    for (std::size_t i = 0; i < std::min(d, d1); ++i) m(i, i) = amplitude * std::sin(x[i]);
  };
  out.gradient = [d, d1, amplitude](std::span<const double> x, Tensor3& g) {
    g = Tensor3(d, d1);
    for (std::size_t i = 0; i < std::min(d, d1); ++i) g(i, i, i) = amplitude * std::cos(x[i]);
  };
  return out;
}

KernelSigma gaussian_kernel(std::size_t d, std::size_t d1, double amplitude, double width) {
  if (!(width > 0.0)) throw InvalidArgument("gaussian kernel width must be positive");
  const double inv = 1.0 / (width * width);
  auto profile = [amplitude, inv](std::span<const double> x, std::span<const double> y) {
    double r2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) r2 += (x[j] - y[j]) * (x[j] - y[j]);
    return amplitude * std::exp(-0.5 * r2 * inv);
  };
  const std::size_t diag = std::min(d, d1);
  KernelSigma out;
  out.kernel = [=](std::span<const double> x, std::span<const double> y, SmallMatrix& m) {
    m = SmallMatrix(d, d1);
    const double v = profile(x, y);
    for (std::size_t i = 0; i < diag; ++i) m(i, i) = v;
  };
  out.d_dx = [=](std::span<const double> x, std::span<const double> y, Tensor3& g) {
    g = Tensor3(d, d1);
    const double v = profile(x, y);
    for (std::size_t i = 0; i < diag; ++i)
      for (std::size_t j = 0; j < d; ++j) g(i, j, i) = -(x[j] - y[j]) * inv * v;
  };
  out.d_dy = [=](std::span<const double> x, std::span<const double> y, Tensor3& g) {
    g = Tensor3(d, d1);
    const double v = profile(x, y);
    for (std::size_t i = 0; i < diag; ++i)
      for (std::size_t j = 0; j < d; ++j) g(i, j, i) = (x[j] - y[j]) * inv * v;
  };
  return out;
}

}  // namespace stratonovich_families
}  // namespace mfsim
