#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mpe/state.hpp"

namespace mpe {

/// Row-major dense matrix.
template <typename T>
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, T fill = T{}) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const T> data() const { return data_; }
  std::span<T> data() { return data_; }

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using CMatrix = DenseMatrix<Complex>;
using RMatrix = DenseMatrix<double>;

CMatrix adjoint(const CMatrix& m);
CMatrix multiply(const CMatrix& a, const CMatrix& b);
std::vector<Complex> multiply(const CMatrix& m, std::span<const Complex> v);

/// max |(U^dagger U - I)_ij|.
double unitarity_residual(const CMatrix& u);

/// Unitary whose first column is the unit vector `v`, built from a complex
/// Householder reflection.
CMatrix unitary_completion(std::span<const Complex> v);

}  // namespace mpe
