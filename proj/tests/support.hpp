#pragma once

// Independent reference computations for the test suites. Nothing here calls
// the library routine it is used to check.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "distillery/distillery.hpp"

namespace oracle {

using distillery::Complex;
using distillery::Matrix;
using distillery::Vector;

#define EXPECT_THROW_CODE(stmt, expected_code)                                   \
  do {                                                                           \
    try {                                                                        \
      (void)(stmt);                                                              \
      ADD_FAILURE() << "expected distillery::Error " #expected_code;             \
    } catch (const distillery::Error& e) {                                       \
      EXPECT_EQ(e.code(), distillery::ErrorCode::expected_code) << e.what();     \
    }                                                                            \
  } while (false)

inline double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

inline Vector ket(std::initializer_list<Complex> amps) {
  Vector v(static_cast<Eigen::Index>(amps.size()));
  Eigen::Index i = 0;
  for (auto a : amps) v(i++) = a;
  return v;
}

/// Bell vectors written out in the computational basis |00>,|01>,|10>,|11>.
inline Vector bell_vec(int label) {
  const double s = 1.0 / std::sqrt(2.0);
  switch (label) {
    case 0: return ket({s, 0, 0, s});
    case 1: return ket({0, s, s, 0});
    case 2: return ket({s, 0, 0, -s});
    default: return ket({0, s, -s, 0});
  }
}

inline Matrix proj(const Vector& v) { return v * v.adjoint(); }

/// F Phi+ + (1-F)/3 (I - Phi+).
inline Matrix werner_matrix(double f) {
  const Matrix p = proj(bell_vec(0));
  return f * p + (1.0 - f) / 3.0 * (Matrix::Identity(4, 4) - p);
}

inline Matrix bell_mixture(const std::array<double, 4>& p) {
  Matrix m = Matrix::Zero(4, 4);
  for (int k = 0; k < 4; ++k) m += p[static_cast<std::size_t>(k)] * proj(bell_vec(k));
  return m;
}

/// Partial transpose on Bob as sum_{j,l} (I (x) |l><j|) M (I (x) |l><j|).
inline Matrix partial_transpose(const Matrix& m, std::size_t da, std::size_t db) {
  const auto a = static_cast<Eigen::Index>(da), b = static_cast<Eigen::Index>(db);
  Matrix out = Matrix::Zero(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < b; ++j)
    for (Eigen::Index l = 0; l < b; ++l) {
      Matrix e = Matrix::Zero(b, b);
      e(l, j) = 1.0;
      Matrix op = Matrix::Zero(a * b, a * b);
      for (Eigen::Index i = 0; i < a; ++i) op.block(i * b, i * b, b, b) = e;
      out += op * m * op;
    }
  return out;
}

/// Naive Kronecker product.
inline Matrix kron(const Matrix& x, const Matrix& y) {
  Matrix out(x.rows() * y.rows(), x.cols() * y.cols());
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = x(i / y.rows(), j / y.cols()) * y(i % y.rows(), j % y.cols());
  return out;
}

/// Trace over the second factor of a (d1 d2)-dimensional matrix.
inline Matrix trace_second(const Matrix& m, Eigen::Index d1, Eigen::Index d2) {
  Matrix out = Matrix::Zero(d1, d1);
  for (Eigen::Index i = 0; i < d1; ++i)
    for (Eigen::Index j = 0; j < d1; ++j)
      for (Eigen::Index k = 0; k < d2; ++k) out(i, j) += m(i * d2 + k, j * d2 + k);
  return out;
}

/// Trace over the first factor.
inline Matrix trace_first(const Matrix& m, Eigen::Index d1, Eigen::Index d2) {
  Matrix out = Matrix::Zero(d2, d2);
  for (Eigen::Index i = 0; i < d2; ++i)
    for (Eigen::Index j = 0; j < d2; ++j)
      for (Eigen::Index k = 0; k < d1; ++k) out(i, j) += m(k * d2 + i, k * d2 + j);
  return out;
}

/// Reorders a 4-factor matrix (A1 B1 A2 B2) into the grouped order (A1 A2 B1 B2).
inline Matrix interleaved_to_grouped(const Matrix& m, Eigen::Index a1, Eigen::Index b1, Eigen::Index a2,
                                     Eigen::Index b2) {
  Matrix out(m.rows(), m.cols());
  auto idx_interleaved = [&](Eigen::Index x1, Eigen::Index y1, Eigen::Index x2, Eigen::Index y2) {
    return ((x1 * b1 + y1) * a2 + x2) * b2 + y2;
  };
  auto idx_grouped = [&](Eigen::Index x1, Eigen::Index y1, Eigen::Index x2, Eigen::Index y2) {
    return ((x1 * a2 + x2) * b1 + y1) * b2 + y2;
  };
  for (Eigen::Index x1 = 0; x1 < a1; ++x1)
    for (Eigen::Index y1 = 0; y1 < b1; ++y1)
      for (Eigen::Index x2 = 0; x2 < a2; ++x2)
        for (Eigen::Index y2 = 0; y2 < b2; ++y2)
          for (Eigen::Index u1 = 0; u1 < a1; ++u1)
            for (Eigen::Index v1 = 0; v1 < b1; ++v1)
              for (Eigen::Index u2 = 0; u2 < a2; ++u2)
                for (Eigen::Index v2 = 0; v2 < b2; ++v2)
                  out(idx_grouped(x1, y1, x2, y2), idx_grouped(u1, v1, u2, v2)) =
                      m(idx_interleaved(x1, y1, x2, y2), idx_interleaved(u1, v1, u2, v2));
  return out;
}

/// Eigenvalues through the general (non-Hermitian) solver, real parts sorted.
inline std::vector<double> spectrum(const Matrix& m) {
  Eigen::ComplexEigenSolver<Matrix> es(m);
  std::vector<double> ev;
  for (Eigen::Index i = 0; i < m.rows(); ++i) ev.push_back(es.eigenvalues()(i).real());
  std::sort(ev.begin(), ev.end());
  return ev;
}

inline double trace_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

inline double entropy_of(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 1e-15) h -= v * std::log2(v);
  return h;
}

/// Twelve-term twirl written out independently: phase S, Hadamard H,
/// eta = {I, S H, Z H S}, Paulis, correction C = X (x) Z on both sides.
inline Matrix twirl12(const Matrix& rho) {
  const Complex i(0, 1);
  Matrix id = Matrix::Identity(2, 2);
  Matrix x(2, 2), y(2, 2), z(2, 2), h(2, 2), s(2, 2);
  x << 0, 1, 1, 0;
  y << 0, -i, i, 0;
  z << 1, 0, 0, -1;
  h << 1, 1, 1, -1;
  h /= std::sqrt(2.0);
  s << 1, 0, 0, i;
  const std::vector<Matrix> eta{id, s * h, z * h * s};
  const std::vector<Matrix> sig{id, x, y, z};
  const Matrix c = kron(x, z);
  Matrix out = Matrix::Zero(4, 4);
  for (const auto& e : eta)
    for (const auto& p : sig) {
      const Matrix u = c * kron(e * p, e * p) * c;
      out += u * rho * u.adjoint();
    }
  return out / 12.0;
}

/// Haar unitary: QR of a Gaussian matrix with the phases of R's diagonal removed.
inline Matrix random_unitary(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> n(0, 1);
  Matrix g(d, d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) g(a, b) = Complex(n(rng), n(rng));
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR();
  for (Eigen::Index j = 0; j < d; ++j) q.col(j) *= r(j, j) / std::abs(r(j, j));
  return q;
}

/// Brute-force maximum of <psi|rho|psi> over (U (x) V)|Phi+>.
inline double fef_brute_force(const Matrix& rho, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double best = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const Vector psi = kron(random_unitary(rng, 2), random_unitary(rng, 2)) * bell_vec(0);
    best = std::max(best, psi.dot(rho * psi).real());
  }
  return best;
}

}  // namespace oracle
