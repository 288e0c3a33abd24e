#include "mfsim/test_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfsim/errors.hpp"
#include "mfsim/rng.hpp"

namespace mfsim::test_functions {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_index(std::size_t dim, std::size_t i) {
  if (i >= dim) throw InvalidArgument("test function coordinate index out of range");
}

}  // namespace

TestFunction constant(std::size_t dim, double c) {
  TestFunction f;
  f.name = c == 1.0 ? "one" : "const";
  f.dim = dim;
  f.value = [c](std::span<const double>) { return c; };
  f.gradient = [](std::span<const double>, std::span<double> g) { std::fill(g.begin(), g.end(), 0.0); };
  f.hessian = [dim](std::span<const double>, SmallMatrix& h) { h = SmallMatrix(dim, dim); };
  f.lipschitz_bound = 0.0;
  f.sup_bound = std::abs(c);
  return f;
}

TestFunction coordinate(std::size_t dim, std::size_t i) {
  check_index(dim, i);
  TestFunction f;
  f.name = "x" + std::to_string(i);
  f.dim = dim;
  f.value = [i](std::span<const double> x) { return x[i]; };
  f.gradient = [i](std::span<const double>, std::span<double> g) {
    std::fill(g.begin(), g.end(), 0.0);
    g[i] = 1.0;
  };
  f.hessian = [dim](std::span<const double>, SmallMatrix& h) { h = SmallMatrix(dim, dim); };
  f.lipschitz_bound = 1.0;
  f.sup_bound = kInf;
  return f;
}

TestFunction product(std::size_t dim, std::size_t i, std::size_t j) {
  check_index(dim, i);
  check_index(dim, j);
  TestFunction f;
  f.name = "x" + std::to_string(i) + "x" + std::to_string(j);
  f.dim = dim;
  f.value = [i, j](std::span<const double> x) { return x[i] * x[j]; };
  f.gradient = [i, j](std::span<const double> x, std::span<double> g) {
    std::fill(g.begin(), g.end(), 0.0);
    g[i] += x[j];
    g[j] += x[i];
  };
  f.hessian = [dim, i, j](std::span<const double>, SmallMatrix& h) {
    h = SmallMatrix(dim, dim);
    h(i, j) += 1.0;
    h(j, i) += 1.0;
  };
  f.lipschitz_bound = kInf;
  f.sup_bound = kInf;
  return f;
}

TestFunction sine(std::size_t dim, std::size_t i) {
  check_index(dim, i);
  TestFunction f;
  f.name = "sin" + std::to_string(i);
  f.dim = dim;
  f.value = [i](std::span<const double> x) { return std::sin(x[i]); };
  f.gradient = [i](std::span<const double> x, std::span<double> g) {
    std::fill(g.begin(), g.end(), 0.0);
    g[i] = std::cos(x[i]);
  };
  f.hessian = [dim, i](std::span<const double> x, SmallMatrix& h) {
    h = SmallMatrix(dim, dim);
    h(i, i) = -std::sin(x[i]);
  };
  f.lipschitz_bound = 1.0;
  f.sup_bound = 1.0;
  return f;
}

TestFunction gaussian_bump(std::size_t dim) {
  TestFunction f;
  f.name = "bump";
  f.dim = dim;
  f.value = [](std::span<const double> x) {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    return std::exp(-r2);
  };
  f.gradient = [](std::span<const double> x, std::span<double> g) {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    const double e = std::exp(-r2);
    for (std::size_t k = 0; k < x.size(); ++k) g[k] = -2.0 * x[k] * e;
  };
  f.hessian = [dim](std::span<const double> x, SmallMatrix& h) {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    const double e = std::exp(-r2);
    h = SmallMatrix(dim, dim);
    for (std::size_t a = 0; a < dim; ++a)
      for (std::size_t b = 0; b < dim; ++b)
        h(a, b) = (4.0 * x[a] * x[b] - (a == b ? 2.0 : 0.0)) * e;
  };
  f.lipschitz_bound = std::sqrt(2.0) * std::exp(-0.5);
  f.sup_bound = 1.0;
  return f;
}

std::vector<TestFunction> bank(std::size_t dim) {
  std::vector<TestFunction> out;
  out.push_back(constant(dim));
  for (std::size_t i = 0; i < dim; ++i) out.push_back(coordinate(dim, i));
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = i; j < dim; ++j) out.push_back(product(dim, i, j));
  for (std::size_t i = 0; i < dim; ++i) out.push_back(sine(dim, i));
  out.push_back(gaussian_bump(dim));
  return out;
}

TestFunction by_name(std::size_t dim, const std::string& name) {
  if (name == "one") return constant(dim);
  if (name == "bump") return gaussian_bump(dim);
  if (dim == 1) {
    if (name == "x") return coordinate(1, 0);
    if (name == "x2") return product(1, 0, 0);
    if (name == "sin") return sine(1, 0);
  }
  for (auto& f : bank(dim)) {
    if (f.name == name) return f;
  }
  throw InvalidArgument("unknown test function '" + name + "'");
}

DerivativeAudit audit_derivatives(const TestFunction& phi, std::size_t probes, std::uint64_t seed, double radius) {
  const std::size_t d = phi.dim;
  const double h = 1e-5;
  DerivativeAudit audit;
  std::vector<double> x(d), xp(d), xm(d), g(d), gp(d), gm(d), u(d);
  SmallMatrix hess;
  for (std::size_t p = 0; p < probes; ++p) {
    CounterStream(seed, StreamRole::kProbe, 0, p).uniforms(0, u);
    for (std::size_t k = 0; k < d; ++k) x[k] = radius * (2.0 * u[k] - 1.0);
    phi.gradient(x, g);
    phi.hessian(x, hess);
    for (std::size_t k = 0; k < d; ++k) {
      xp = x;
      xm = x;
      xp[k] += h;
      xm[k] -= h;
      const double fd = (phi.value(xp) - phi.value(xm)) / (2.0 * h);
      audit.gradient_error = std::max(audit.gradient_error, std::abs(fd - g[k]));
      phi.gradient(xp, gp);
      phi.gradient(xm, gm);
      for (std::size_t j = 0; j < d; ++j) {
        const double fdh = (gp[j] - gm[j]) / (2.0 * h);
        audit.hessian_error = std::max(audit.hessian_error, std::abs(fdh - hess(j, k)));
      }
    }
  }
  return audit;
}

}  // namespace mfsim::test_functions
