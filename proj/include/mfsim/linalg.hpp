#pragma once

#include <array>
#include <cstddef>
#include <span>

namespace mfsim {

/// Largest state / noise dimension handled by the fixed-size kernels.
inline constexpr std::size_t kMaxDim = 4;

/// Dense row-major matrix with inline storage of at most kMaxDim x kMaxDim
/// entries. Used for a, sigma and alpha so the per-particle hot loops never
/// touch the heap.
class SmallMatrix {
 public:
  SmallMatrix() = default;
  SmallMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    if (rows > kMaxDim || cols > kMaxDim) throw_oversize();
  }

  static SmallMatrix identity(std::size_t n);
  static SmallMatrix zero(std::size_t rows, std::size_t cols) { return SmallMatrix(rows, cols); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * kMaxDim + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * kMaxDim + j]; }

  void fill(double value) noexcept;
  SmallMatrix transpose() const;

  /// out = this * v (v has cols() entries, out has rows() entries).
  void apply(std::span<const double> v, std::span<double> out) const noexcept;
  /// out += this * v.
  void apply_add(std::span<const double> v, std::span<double> out) const noexcept;

  /// Frobenius norm.
  double norm() const noexcept;
  double max_asymmetry() const noexcept;

  friend SmallMatrix operator*(const SmallMatrix& a, const SmallMatrix& b);
  friend SmallMatrix operator+(const SmallMatrix& a, const SmallMatrix& b);
  friend SmallMatrix operator-(const SmallMatrix& a, const SmallMatrix& b);
  friend SmallMatrix operator*(double s, const SmallMatrix& a);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  [[noreturn]] static void throw_oversize();

  std::array<double, kMaxDim * kMaxDim> data_{};
};

/// a * b^T, e.g. sigma sigma^T for a d x d1 sigma.
SmallMatrix multiply_transposed(const SmallMatrix& a, const SmallMatrix& b);

struct SymmetricEigen {
  std::array<double, kMaxDim> values{};
  SmallMatrix vectors;  // columns are eigenvectors
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Eigenvalues are
/// returned in ascending order.
SymmetricEigen jacobi_eigen(const SmallMatrix& m, int max_sweeps = 64);

/// V diag(sqrt(max(lambda, 0))) V^T from a decomposition.
SmallMatrix sqrt_from_eigen(const SymmetricEigen& eig, std::size_t n);

}  // namespace mfsim
