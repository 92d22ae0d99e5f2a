#pragma once

// Random unitaries and states for Monte Carlo searches and property tests.

#include <random>

#include "distillery/qstate.hpp"
#include "distillery/random.hpp"

namespace distillery {

inline Matrix ginibre(Rng& rng, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = Complex(normal(rng), normal(rng));
  return g;
}

/// Haar-distributed unitary: QR of a Ginibre matrix with R's diagonal phases
/// divided out.
inline Matrix haar_unitary(Rng& rng, std::size_t d) {
  const Matrix g = ginibre(rng, d, d);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(g.rows(), g.cols());
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const Complex diag = r(j, j);
    const double mag = std::abs(diag);
    if (mag > 0.0) q.col(j) *= diag / mag;
  }
  return q;
}

inline PureState random_pure(Rng& rng, std::size_t dim_a, std::size_t dim_b) {
  return PureState::normalized(dim_a, dim_b, ginibre(rng, dim_a * dim_b, 1).col(0));
}

/// Random mixed state G G^dagger / tr(G G^dagger) of the given rank
/// (full rank when rank == 0).
inline DensityOperator random_density(Rng& rng, const Layout& layout, std::size_t rank = 0) {
  const std::size_t d = layout.dim();
  const Matrix g = ginibre(rng, d, rank == 0 ? d : rank);
  Matrix m = g * g.adjoint();
  m /= m.trace().real();
  m = 0.5 * (m + m.adjoint());
  return DensityOperator(layout, std::move(m));
}

inline DensityOperator random_density(Rng& rng, std::size_t dim_a, std::size_t dim_b, std::size_t rank = 0) {
  return random_density(rng, Layout(dim_a, dim_b), rank);
}

/// Convex mixture of `terms` random pure product states.
inline DensityOperator random_separable(Rng& rng, std::size_t dim_a, std::size_t dim_b, std::size_t terms) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto d = static_cast<Eigen::Index>(dim_a * dim_b);
  Matrix m = Matrix::Zero(d, d);
  double total = 0.0;
  for (std::size_t t = 0; t < terms; ++t) {
    const Vector a = random_pure(rng, dim_a, 1).amplitudes();
    const Vector b = random_pure(rng, 1, dim_b).amplitudes();
    const Vector ab = detail::kron(a, b);
    const double w = unit(rng);
    m += w * ab * ab.adjoint();
    total += w;
  }
  m /= total;
  return DensityOperator(dim_a, dim_b, 0.5 * (m + m.adjoint()));
}

}  // namespace distillery
