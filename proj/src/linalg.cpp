#include "mpe/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace mpe {

CMatrix adjoint(const CMatrix& m) {
  CMatrix out(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(c, r) = std::conj(m(r, c));
  return out;
}

CMatrix multiply(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matrix shape mismatch");
  CMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const Complex aik = a(i, k);
      if (aik == Complex{}) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

std::vector<Complex> multiply(const CMatrix& m, std::span<const Complex> v) {
  if (m.cols() != v.size()) throw std::invalid_argument("matrix-vector shape mismatch");
  std::vector<Complex> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    Complex s{};
    for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j) * v[j];
    out[i] = s;
  }
  return out;
}

double unitarity_residual(const CMatrix& u) {
  if (u.rows() != u.cols()) return INFINITY;
  const std::size_t n = u.rows();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      Complex s{};
      for (std::size_t k = 0; k < n; ++k) s += std::conj(u(k, i)) * u(k, j);
      if (i == j) s -= 1.0;
      worst = std::max(worst, std::abs(s));
    }
  return worst;
}

CMatrix unitary_completion(std::span<const Complex> v) {
  const std::size_t n = v.size();
  if (n == 0) throw std::invalid_argument("empty vector");
  double norm2 = 0.0;
  for (const auto& x : v) norm2 += std::norm(x);
  if (std::abs(std::sqrt(norm2) - 1.0) > 1e-10) throw std::invalid_argument("vector is not normalized");

  // H = I - 2 w w^dagger / |w|^2 with w = v - alpha e0 maps v to alpha e0,
  // where alpha = -e^{i arg v0} avoids cancellation. Then H (alpha e0) = v, so
  // Q = H diag(alpha, 1, ..., 1) is unitary with first column v.
  const double mag0 = std::abs(v[0]);
  const Complex phase = mag0 > 0.0 ? v[0] / mag0 : Complex{1.0, 0.0};
  const Complex alpha = -phase;
  std::vector<Complex> w(v.begin(), v.end());
  w[0] -= alpha;
  double wn2 = 0.0;
  for (const auto& x : w) wn2 += std::norm(x);

  CMatrix q = CMatrix::identity(n);
  if (wn2 > 0.0) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) q(i, j) -= 2.0 * w[i] * std::conj(w[j]) / wn2;
  }
  for (std::size_t i = 0; i < n; ++i) q(i, 0) *= alpha;
  return q;
}

}  // namespace mpe
