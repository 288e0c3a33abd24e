#include "mfsim/coeffs.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mfsim/errors.hpp"
#include "mfsim/rng.hpp"

namespace mfsim {

ParabolicityViolation::ParabolicityViolation(double t, std::vector<double> x, double eigenvalue)
    : Error("parabolicity_violation",
            [&] {
              std::ostringstream os;
              os.precision(12);
              os << "2a - sigma sigma^T has eigenvalue " << eigenvalue << " at t = " << t << ", x = (";
              for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
              os << ')';
              return os.str();
            }()),
      t_(t),
      x_(std::move(x)),
      eigenvalue_(eigenvalue) {}

namespace {

class FunctionalSnapshot final : public CoefficientSnapshot {
 public:
  FunctionalSnapshot(const FunctionalCoefficients& fns, double t, const EmpiricalMeasure& mu)
      : fns_(fns), t_(t), mu_(mu) {}

  void drift(std::span<const double> x, std::span<double> out) const override { fns_.drift(t_, x, mu_, out); }
  void sigma(std::span<const double> x, SmallMatrix& out) const override { fns_.sigma(t_, x, mu_, out); }
  void diffusion(std::span<const double> x, SmallMatrix& out) const override { fns_.diffusion(t_, x, mu_, out); }
  bool state_independent_diffusion() const override { return fns_.state_independent_diffusion; }

 private:
  const FunctionalCoefficients& fns_;
  double t_;
  const EmpiricalMeasure& mu_;
};

class FunctionalModel final : public CoefficientModel {
 public:
  explicit FunctionalModel(FunctionalCoefficients fns) : fns_(std::move(fns)) {}

  std::unique_ptr<const CoefficientSnapshot> snapshot(double t, const EmpiricalMeasure& mu) const override {
    return std::make_unique<FunctionalSnapshot>(fns_, t, mu);
  }
  bool measure_dependent() const override { return fns_.measure_dependent; }

 private:
  FunctionalCoefficients fns_;
};

}  // namespace

CoefficientSet::CoefficientSet(std::string name, std::size_t dim_x, std::size_t dim_w,
                               std::shared_ptr<const CoefficientModel> model, double lipschitz, double bound)
    : name_(std::move(name)),
      dim_x_(dim_x),
      dim_w_(dim_w),
      model_(std::move(model)),
      lipschitz_(lipschitz),
      bound_(bound) {
  if (dim_x_ == 0 || dim_x_ > kMaxDim || dim_w_ == 0 || dim_w_ > kMaxDim) {
    throw UnsupportedDimension("coefficient dimensions must lie in [1, " + std::to_string(kMaxDim) + "]");
  }
  if (!model_) throw InvalidArgument("coefficient model is null");
}

SmallMatrix CoefficientSet::a(double t, std::span<const double> x, const EmpiricalMeasure& mu) const {
  SmallMatrix out(dim_x_, dim_x_);
  snapshot(t, mu)->diffusion(x, out);
  return out;
}

std::vector<double> CoefficientSet::b(double t, std::span<const double> x, const EmpiricalMeasure& mu) const {
  std::vector<double> out(dim_x_);
  snapshot(t, mu)->drift(x, out);
  return out;
}

SmallMatrix CoefficientSet::sigma(double t, std::span<const double> x, const EmpiricalMeasure& mu) const {
  SmallMatrix out(dim_x_, dim_w_);
  snapshot(t, mu)->sigma(x, out);
  return out;
}

CoefficientSet make_coefficients(std::string name, std::size_t dim_x, std::size_t dim_w, FunctionalCoefficients fns,
                                 double lipschitz, double bound) {
  if (!fns.drift || !fns.sigma || !fns.diffusion) {
    throw InvalidArgument("functional coefficients need drift, sigma and diffusion");
  }
  return CoefficientSet(std::move(name), dim_x, dim_w, std::make_shared<FunctionalModel>(std::move(fns)), lipschitz,
                        bound);
}

SmallMatrix parabolic_part(const SmallMatrix& a, const SmallMatrix& sigma) {
  return 2.0 * a - multiply_transposed(sigma, sigma);
}

double default_psd_tolerance(const SmallMatrix& m) { return 1e-10 * (1.0 + m.norm()); }

SmallMatrix alpha_from(const SmallMatrix& a, const SmallMatrix& sigma, double t, std::span<const double> x,
                       double psd_tolerance) {
  SmallMatrix m = parabolic_part(a, sigma);
  // Symmetrize away round-off before the eigen solve.
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j) m(i, j) = m(j, i) = 0.5 * (m(i, j) + m(j, i));
  const double tol = psd_tolerance < 0.0 ? default_psd_tolerance(m) : psd_tolerance;
  const SymmetricEigen eig = jacobi_eigen(m);
  const double lowest = eig.values[0];
  if (lowest < -tol) throw ParabolicityViolation(t, std::vector<double>(x.begin(), x.end()), lowest);
  return sqrt_from_eigen(eig, m.rows());
}

SmallMatrix alpha(const CoefficientSet& coeffs, double t, std::span<const double> x, const EmpiricalMeasure& mu,
                  double psd_tolerance) {
  const auto snap = coeffs.snapshot(t, mu);
  SmallMatrix a(coeffs.dim_x(), coeffs.dim_x());
  SmallMatrix s(coeffs.dim_x(), coeffs.dim_w());
  snap->diffusion(x, a);
  snap->sigma(x, s);
  return alpha_from(a, s, t, x, psd_tolerance);
}

AssumptionReport check_assumptions(const CoefficientSet& coeffs, const AuditOptions& options) {
  if (options.probes == 0) throw InvalidArgument("check_assumptions needs at least one probe");
  const std::size_t d = coeffs.dim_x();
  const std::size_t d1 = coeffs.dim_w();
  AssumptionReport report;
  report.probes = options.probes;
  report.declared_bound = coeffs.bound();
  report.declared_lipschitz = coeffs.lipschitz();
  report.min_parabolic_eigenvalue = std::numeric_limits<double>::infinity();

  BlOptions bl;
  bl.mode = BlMode::kSliced;
  bl.grid_resolution = options.grid_resolution;

  const std::size_t n_atoms = std::max<std::size_t>(options.probe_atoms, 1);
  // Per probe: t, x (d), centre (d), atom offsets (n*d), x-perturbation direction (d),
  // mu-perturbation direction (d).
  const std::size_t draws = 1 + 4 * d + n_atoms * d;
  std::vector<double> u(draws), z(2 * d);
  std::vector<double> x(d), xp(d), b0(d), b1(d);
  SmallMatrix a0(d, d), a1(d, d), s0(d, d1), s1(d, d1);

  for (std::size_t p = 0; p < options.probes; ++p) {
    const CounterStream stream(options.seed, StreamRole::kProbe, 1, p);
    stream.uniforms(0, u);
    stream.normals(0, z);
    std::size_t c = 0;
    const double t = options.horizon * u[c++];
    for (std::size_t k = 0; k < d; ++k) x[k] = options.radius * (2.0 * u[c++] - 1.0);
    std::vector<double> centre(d);
    for (std::size_t k = 0; k < d; ++k) centre[k] = options.radius * (2.0 * u[c++] - 1.0);
    // Probe measure: atoms within a box of side 1 so translations are
    // resolved exactly by 1-Lipschitz test functions.
    std::vector<double> pts(n_atoms * d);
    for (std::size_t i = 0; i < n_atoms; ++i)
      for (std::size_t k = 0; k < d; ++k) pts[i * d + k] = centre[k] + (u[c++] - 0.5);
    const auto mu = EmpiricalMeasure::uniform(d, pts, options.mass);

    auto snap = coeffs.snapshot(t, mu);
    snap->drift(x, b0);
    snap->diffusion(x, a0);
    snap->sigma(x, s0);

    double bnorm = 0.0;
    for (double v : b0) bnorm += v * v;
    bnorm = std::sqrt(bnorm);
    report.max_a_norm = std::max(report.max_a_norm, a0.norm());
    report.max_sigma_norm = std::max(report.max_sigma_norm, s0.norm());
    report.max_b_norm = std::max(report.max_b_norm, bnorm);
    report.max_asymmetry = std::max(report.max_asymmetry, a0.max_asymmetry());

    const SmallMatrix m = parabolic_part(a0, s0);
    const double lowest = jacobi_eigen(m).values[0];
    if (lowest < report.min_parabolic_eigenvalue) {
      report.min_parabolic_eigenvalue = lowest;
      report.worst_parabolic_time = t;
      report.worst_parabolic_point = x;
    }

    // Lipschitz in x.
    double hnorm = 0.0;
    for (std::size_t k = 0; k < d; ++k) hnorm += z[k] * z[k];
    hnorm = std::sqrt(hnorm);
    for (std::size_t k = 0; k < d; ++k) xp[k] = x[k] + options.perturbation * z[k] / hnorm;
    snap->drift(xp, b1);
    snap->diffusion(xp, a1);
    snap->sigma(xp, s1);
    double db = 0.0;
    for (std::size_t k = 0; k < d; ++k) db += (b1[k] - b0[k]) * (b1[k] - b0[k]);
    const double change_x = (a1 - a0).norm() + (s1 - s0).norm() + std::sqrt(db);
    report.lipschitz_x_quotient = std::max(report.lipschitz_x_quotient, change_x / options.perturbation);

    // Lipschitz in mu: translate every atom by the same small vector.
    double mnorm = 0.0;
    for (std::size_t k = 0; k < d; ++k) mnorm += z[d + k] * z[d + k];
    mnorm = std::sqrt(mnorm);
    std::vector<double> shifted(pts);
    for (std::size_t i = 0; i < n_atoms; ++i)
      for (std::size_t k = 0; k < d; ++k) shifted[i * d + k] += options.perturbation * z[d + k] / mnorm;
    const auto mu_shifted = EmpiricalMeasure::uniform(d, shifted, options.mass);
    const double rho = bl_distance(mu, mu_shifted, bl);
    if (rho > 0.0) {
      auto snap_shifted = coeffs.snapshot(t, mu_shifted);
      snap_shifted->drift(x, b1);
      snap_shifted->diffusion(x, a1);
      snap_shifted->sigma(x, s1);
      db = 0.0;
      for (std::size_t k = 0; k < d; ++k) db += (b1[k] - b0[k]) * (b1[k] - b0[k]);
      const double change_mu = (a1 - a0).norm() + (s1 - s0).norm() + std::sqrt(db);
      report.lipschitz_mu_quotient = std::max(report.lipschitz_mu_quotient, change_mu / rho);
    }
  }

  auto flag = [&](const std::string& what, double measured, double limit) {
    std::ostringstream os;
    os.precision(6);
    os << what << ": measured " << measured << " exceeds " << limit;
    report.violations.push_back(os.str());
  };
  const double km = coeffs.bound();
  if (report.max_a_norm > km) flag("bound |a|", report.max_a_norm, km);
  if (report.max_sigma_norm > km) flag("bound |sigma|", report.max_sigma_norm, km);
  if (report.max_b_norm > km) flag("bound |b|", report.max_b_norm, km);
  if (report.max_asymmetry > 1e-12) flag("symmetry of a", report.max_asymmetry, 1e-12);
  const double floor = -1e-10 * (1.0 + report.max_a_norm + report.max_sigma_norm * report.max_sigma_norm);
  if (report.min_parabolic_eigenvalue < floor) {
    std::ostringstream os;
    os.precision(6);
    os << "parabolicity: eigenvalue " << report.min_parabolic_eigenvalue << " at t = " << report.worst_parabolic_time
       << ", x = (";
    for (std::size_t k = 0; k < report.worst_parabolic_point.size(); ++k)
      os << (k ? ", " : "") << report.worst_parabolic_point[k];
    os << ')';
    report.violations.push_back(os.str());
  }
  const double klim = 1.1 * coeffs.lipschitz();
  if (report.lipschitz_x_quotient > klim) flag("Lipschitz in x", report.lipschitz_x_quotient, klim);
  if (report.lipschitz_mu_quotient > klim) flag("Lipschitz in mu", report.lipschitz_mu_quotient, klim);
  return report;
}

}  // namespace mfsim
