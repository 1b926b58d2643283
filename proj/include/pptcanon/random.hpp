#pragma once

// Seeded random matrices. All draws go through an explicit engine so results
// are reproducible for a given seed.

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "pptcanon/multilinear.hpp"

namespace pptcanon {

using Rng = std::mt19937_64;

// Standard complex Gaussian, E|z|^2 = 1.
inline Complex complex_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  const double re = dist(rng);
  const double im = dist(rng);
  return Complex(re, im) / std::sqrt(2.0);
}

inline ComplexMatrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  ComplexMatrix g(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) g(i, j) = complex_normal(rng);
  }
  return g;
}

inline ComplexVector random_unit_vector(Eigen::Index n, Rng& rng) {
  ComplexVector v = gaussian_matrix(n, 1, rng);
  return v / v.norm();
}

// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
// diag(R) moved into Q.
inline ComplexMatrix haar_unitary(Eigen::Index n, Rng& rng) {
  const ComplexMatrix g = gaussian_matrix(n, n, rng);
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double mag = std::abs(r(j, j));
    if (mag > 0.0) q.col(j) *= r(j, j) / mag;
  }
  return q;
}

inline ComplexMatrix random_hermitian(Eigen::Index n, Rng& rng) {
  const ComplexMatrix g = gaussian_matrix(n, n, rng);
  return (g + g.adjoint()) / 2.0;
}

}  // namespace pptcanon
