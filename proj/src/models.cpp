#include "mfsim/models.hpp"

#include <algorithm>
#include <cmath>

#include "mfsim/errors.hpp"

namespace mfsim::models {
namespace {

double param(const nlohmann::json& p, const char* key, double fallback) {
  if (!p.is_object() || !p.contains(key)) return fallback;
  if (!p.at(key).is_number()) throw ConfigError("invalid_config", std::string("model parameter '") + key + "' must be a number");
  return p.at(key).get<double>();
}

SmallMatrix diagonal(std::size_t rows, std::size_t cols, double v) {
  SmallMatrix m(rows, cols);
  for (std::size_t i = 0; i < std::min(rows, cols); ++i) m(i, i) = v;
  return m;
}

void check_dims(std::size_t d, std::size_t d1) {
  if (d == 0 || d > kMaxDim || d1 == 0 || d1 > kMaxDim) {
    throw ConfigError("invalid_config", "dimensions d and d1 must lie in [1, " + std::to_string(kMaxDim) + "]");
  }
}

CoefficientSet constant_model(std::size_t d, std::size_t d1, const nlohmann::json& p) {
  const double b = param(p, "b", 0.0);
  const double s = param(p, "sigma", 1.0);
  const double al = param(p, "alpha", 0.0);
  const SmallMatrix sigma = diagonal(d, d1, s);
  const SmallMatrix a = 0.5 * (diagonal(d, d, al * al) + multiply_transposed(sigma, sigma));
  FunctionalCoefficients f;
  f.drift = [b](double, std::span<const double>, const EmpiricalMeasure&, std::span<double> out) {
    for (double& v : out) v = b;
  };
  f.sigma = [sigma](double, std::span<const double>, const EmpiricalMeasure&, SmallMatrix& out) { out = sigma; };
  f.diffusion = [a](double, std::span<const double>, const EmpiricalMeasure&, SmallMatrix& out) { out = a; };
  f.measure_dependent = false;
  f.state_independent_diffusion = true;
  const double bound = std::max({std::abs(b) * std::sqrt(static_cast<double>(d)), sigma.norm(), a.norm()});
  auto c = make_coefficients("constant", d, d1, std::move(f), 0.0, bound);
  c.set_smoothness(1000);
  return c;
}

CoefficientSet linear_local_model(std::size_t d, std::size_t d1, const nlohmann::json& p) {
  if (d != 1 || d1 != 1) throw ConfigError("invalid_config", "linear_local requires d = d1 = 1");
  const double b0 = param(p, "b0", 0.0);
  const double b1 = param(p, "b1", 0.0);
  const double s0 = param(p, "s0", 1.0);
  const double s1 = param(p, "s1", 0.0);
  const double al = param(p, "alpha", 0.0);
  const bool explicit_a = p.is_object() && p.contains("a");
  const double a_fixed = param(p, "a", 0.0);
  const double radius = param(p, "radius", 4.0);
  FunctionalCoefficients f;
  f.drift = [b0, b1](double, std::span<const double> x, const EmpiricalMeasure&, std::span<double> out) {
    out[0] = b0 + b1 * x[0];
  };
  f.sigma = [s0, s1](double, std::span<const double> x, const EmpiricalMeasure&, SmallMatrix& out) {
    out = SmallMatrix(1, 1);
    out(0, 0) = s0 + s1 * x[0];
  };
  f.diffusion = [=](double, std::span<const double> x, const EmpiricalMeasure&, SmallMatrix& out) {
    out = SmallMatrix(1, 1);
    const double s = s0 + s1 * x[0];
    out(0, 0) = explicit_a ? a_fixed : 0.5 * (al * al + s * s);
  };
  f.measure_dependent = false;
  f.state_independent_diffusion = s1 == 0.0;
  const double smax = std::abs(s0) + std::abs(s1) * radius;
  const double bound = std::max({std::abs(b0) + std::abs(b1) * radius, smax,
                                 explicit_a ? std::abs(a_fixed) : 0.5 * (al * al + smax * smax)});
  const double lip = std::abs(b1) + std::abs(s1) + (explicit_a ? 0.0 : std::abs(s1) * smax);
  auto c = make_coefficients("linear_local", 1, 1, std::move(f), lip, bound);
  c.set_smoothness(1000);
  return c;
}

class MeanReversionSnapshot final : public CoefficientSnapshot {
 public:
  MeanReversionSnapshot(double beta, const SmallMatrix& sigma, const SmallMatrix& a, const EmpiricalMeasure& mu)
      : beta_(beta), sigma_(sigma), a_(a), mean_(mu.mean().begin(), mu.mean().end()) {}

  void drift(std::span<const double> x, std::span<double> out) const override {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = beta_ * (mean_[k] - x[k]);
  }
  void sigma(std::span<const double>, SmallMatrix& out) const override { out = sigma_; }
  void diffusion(std::span<const double>, SmallMatrix& out) const override { out = a_; }
  bool state_independent_diffusion() const override { return true; }

 private:
  double beta_;
  SmallMatrix sigma_;
  SmallMatrix a_;
  std::vector<double> mean_;
};

class MeanReversionModel final : public CoefficientModel {
 public:
  MeanReversionModel(double beta, SmallMatrix sigma, SmallMatrix a) : beta_(beta), sigma_(sigma), a_(a) {}
  std::unique_ptr<const CoefficientSnapshot> snapshot(double, const EmpiricalMeasure& mu) const override {
    return std::make_unique<MeanReversionSnapshot>(beta_, sigma_, a_, mu);
  }

 private:
  double beta_;
  SmallMatrix sigma_;
  SmallMatrix a_;
};

CoefficientSet mean_reversion_model(std::size_t d, std::size_t d1, const nlohmann::json& p) {
  const double beta = param(p, "beta", 1.0);
  const double s = param(p, "sigma", 1.0);
  const double al = param(p, "alpha", 1.0);
  const double radius = param(p, "radius", 3.0);
  if (!(beta >= 0.0)) throw ConfigError("invalid_config", "beta must be non-negative");
  const SmallMatrix sigma = diagonal(d, d1, s);
  const SmallMatrix a = 0.5 * (diagonal(d, d, al * al) + multiply_transposed(sigma, sigma));
  // |b| <= beta (|m| + |x|) with |m| <= radius + 1 and |x| <= radius on the audited domain.
  const double bound = std::max({beta * (2.0 * radius + 1.0) * std::sqrt(static_cast<double>(d)), sigma.norm(), a.norm()});
  CoefficientSet c("mean_reversion_to_conditional_mean", d, d1, std::make_shared<MeanReversionModel>(beta, sigma, a),
                   beta, bound);
  c.set_smoothness(1000);
  return c;
}

bool flag(const nlohmann::json& p, const char* key, bool fallback) {
  if (!p.is_object() || !p.contains(key)) return fallback;
  if (!p.at(key).is_boolean()) throw ConfigError("invalid_config", std::string("model parameter '") + key + "' must be a boolean");
  return p.at(key).get<bool>();
}

}  // namespace

const std::vector<std::string>& names() {
  static const std::vector<std::string> all{"constant", "linear_local", "mean_reversion_to_conditional_mean",
                                            "convolution_kernel_gaussian"};
  return all;
}

StratonovichSigma make_stratonovich(const std::string& name, std::size_t d, std::size_t d1, const nlohmann::json& p) {
  check_dims(d, d1);
  StratonovichSigma sig;
  sig.dim_x = d;
  sig.dim_w = d1;
  if (name == "constant") {
    sig.local = stratonovich_families::constant(diagonal(d, d1, param(p, "sigma", 1.0)));
    sig.lipschitz = 0.0;
    sig.bound = std::abs(param(p, "sigma", 1.0)) * std::sqrt(static_cast<double>(std::min(d, d1)));
  } else if (name == "linear_local") {
    if (d != 1 || d1 != 1) throw ConfigError("invalid_config", "linear_local requires d = d1 = 1");
    const double s1 = param(p, "s1", 0.0);
    sig.local = stratonovich_families::affine(param(p, "s0", 1.0), s1);
    sig.lipschitz = std::abs(s1);
    sig.bound = std::abs(param(p, "s0", 1.0)) + std::abs(s1) * param(p, "radius", 4.0);
  } else if (name == "convolution_kernel_gaussian") {
    const double amp = param(p, "kernel_amplitude", 1.0);
    const double width = param(p, "kernel_width", 0.5);
    const double local_amp = param(p, "local_amplitude", 1.0);
    std::string local = "none";
    if (p.is_object() && p.contains("local")) {
      if (!p.at("local").is_string()) throw ConfigError("invalid_config", "model parameter 'local' must be a string");
      local = p.at("local").get<std::string>();
    }
    if (local == "sine") {
      sig.local = stratonovich_families::sine(d, d1, local_amp);
    } else if (local == "constant") {
      sig.local = stratonovich_families::constant(diagonal(d, d1, local_amp));
    } else if (local != "none") {
      throw ConfigError("invalid_config", "local part must be none, sine or constant");
    }
    if (amp != 0.0) sig.kernel = stratonovich_families::gaussian_kernel(d, d1, amp, width);
    if (!sig.local && !sig.kernel) sig.local = stratonovich_families::constant(SmallMatrix(d, d1));
    sig.lipschitz = (local == "sine" ? std::abs(local_amp) : 0.0) + 2.0 * std::abs(amp) / width;
    sig.bound = (local == "none" ? 0.0 : std::abs(local_amp)) + std::abs(amp) * param(p, "mass", 1.0);
  } else if (name == "mean_reversion_to_conditional_mean") {
    throw ConfigError("unsupported_model", "sigma of '" + name + "' is outside the kernel-plus-local family");
  } else {
    throw ConfigError("unknown_model", "unknown model '" + name + "'");
  }
  return sig;
}

CoefficientSet make_model(const std::string& name, std::size_t d, std::size_t d1, const nlohmann::json& p) {
  check_dims(d, d1);
  if (name == "constant") return constant_model(d, d1, p);
  if (name == "linear_local") return linear_local_model(d, d1, p);
  if (name == "mean_reversion_to_conditional_mean") return mean_reversion_model(d, d1, p);
  if (name == "convolution_kernel_gaussian") {
    return stratonovich_to_ito(make_stratonovich(name, d, d1, p), flag(p, "lions", true));
  }
  throw ConfigError("unknown_model", "unknown model '" + name + "'");
}

std::optional<Gaussian1D> conditional_law(const std::string& name, const nlohmann::json& p, const InitialLaw& initial,
                                          const NoiseBundle& noise, std::size_t k, bool discrete) {
  if (initial.dim() != 1 || noise.dim_w() != 1) return std::nullopt;
  if (initial.kind() != InitialLaw::Kind::kGaussian && initial.kind() != InitialLaw::Kind::kPoint) return std::nullopt;
  const double m0 = initial.mean()[0];
  const double v0 = initial.variance()[0];
  const double w = noise.w_at(k)[0];
  const double t = noise.grid().time(k);
  if (name == "constant") {
    const double b = param(p, "b", 0.0);
    const double s = param(p, "sigma", 1.0);
    const double al = param(p, "alpha", 0.0);
    return Gaussian1D{m0 + b * t + s * w, v0 + al * al * t};
  }
  if (name == "mean_reversion_to_conditional_mean") {
    const double beta = param(p, "beta", 1.0);
    const double s = param(p, "sigma", 1.0);
    const double al = param(p, "alpha", 1.0);
    double v = v0;
    if (discrete) {
      const double dt = noise.grid().dt();
      const double f = (1.0 - beta * dt) * (1.0 - beta * dt);
      for (std::size_t j = 0; j < k; ++j) v = f * v + al * al * dt;
    } else if (beta > 0.0) {
      const double e = std::exp(-2.0 * beta * t);
      v = v0 * e + al * al * (1.0 - e) / (2.0 * beta);
    } else {
      v = v0 + al * al * t;
    }
    return Gaussian1D{m0 + s * w, v};
  }
  return std::nullopt;
}

std::optional<double> gaussian_expectation(const std::string& phi, double m, double v) {
  if (phi == "one") return 1.0;
  if (phi == "x" || phi == "x0") return m;
  if (phi == "x2" || phi == "x0x0") return m * m + v;
  if (phi == "sin" || phi == "sin0") return std::sin(m) * std::exp(-0.5 * v);
  if (phi == "bump") return std::exp(-m * m / (1.0 + 2.0 * v)) / std::sqrt(1.0 + 2.0 * v);
  return std::nullopt;
}

}  // namespace mfsim::models
