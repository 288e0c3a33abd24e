#include "mfsim/linalg.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

#include "mfsim/errors.hpp"

namespace mfsim {

void SmallMatrix::throw_oversize() {
  throw UnsupportedDimension("matrix dimensions exceed kMaxDim = " + std::to_string(kMaxDim));
}

SmallMatrix SmallMatrix::identity(std::size_t n) {
  SmallMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void SmallMatrix::fill(double value) noexcept {
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) = value;
}

SmallMatrix SmallMatrix::transpose() const {
  SmallMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

void SmallMatrix::apply(std::span<const double> v, std::span<double> out) const noexcept {
  for (std::size_t i = 0; i < rows_; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) acc += (*this)(i, j) * v[j];
    out[i] = acc;
  }
}

void SmallMatrix::apply_add(std::span<const double> v, std::span<double> out) const noexcept {
  for (std::size_t i = 0; i < rows_; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) acc += (*this)(i, j) * v[j];
    out[i] += acc;
  }
}

double SmallMatrix::norm() const noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) acc += (*this)(i, j) * (*this)(i, j);
  return std::sqrt(acc);
}

double SmallMatrix::max_asymmetry() const noexcept {
  double worst = 0.0;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = i + 1; j < cols_; ++j)
      worst = std::max(worst, std::abs((*this)(i, j) - (*this)(j, i)));
  return worst;
}

SmallMatrix operator*(const SmallMatrix& a, const SmallMatrix& b) {
  assert(a.cols() == b.rows());
  SmallMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  return c;
}

SmallMatrix operator+(const SmallMatrix& a, const SmallMatrix& b) {
  SmallMatrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) + b(i, j);
  return c;
}

SmallMatrix operator-(const SmallMatrix& a, const SmallMatrix& b) {
  SmallMatrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) - b(i, j);
  return c;
}

SmallMatrix operator*(double s, const SmallMatrix& a) {
  SmallMatrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = s * a(i, j);
  return c;
}

SmallMatrix multiply_transposed(const SmallMatrix& a, const SmallMatrix& b) {
  assert(a.cols() == b.cols());
  SmallMatrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(j, k);
      c(i, j) = acc;
    }
  return c;
}

SymmetricEigen jacobi_eigen(const SmallMatrix& m, int max_sweeps) {
  const std::size_t n = m.rows();
  SmallMatrix a = m;
  SymmetricEigen out;
  out.vectors = SmallMatrix::identity(n);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      scale += a(i, i) * a(i, i);
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    }
    if (off <= 1e-30 * (scale + off) || off == 0.0) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = out.vectors(k, p);
          const double vkq = out.vectors(k, q);
          out.vectors(k, p) = c * vkp - s * vkq;
          out.vectors(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  // Sort ascending, permuting eigenvector columns alongside.
  std::array<std::size_t, kMaxDim> order{};
  std::iota(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), std::size_t{0});
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n),
            [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
  SmallMatrix sorted(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = a(order[c], order[c]);
    for (std::size_t r = 0; r < n; ++r) sorted(r, c) = out.vectors(r, order[c]);
  }
  out.vectors = sorted;
  return out;
}

SmallMatrix sqrt_from_eigen(const SymmetricEigen& eig, std::size_t n) {
  SmallMatrix root(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = std::sqrt(std::max(eig.values[k], 0.0));
    if (s == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        root(i, j) += s * eig.vectors(i, k) * eig.vectors(j, k);
  }
  return root;
}

}  // namespace mfsim
