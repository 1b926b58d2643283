#pragma once

// Tolerance-driven dense linear algebra: Hermitian spectra, rank and kernel,
// PSD square roots and joint diagonalization of commuting normal families.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pptcanon/errors.hpp"
#include "pptcanon/multilinear.hpp"
#include "pptcanon/random.hpp"

namespace pptcanon {

// All thresholds are relative to the norm of the operand they are applied to.
struct Tolerances {
  double psd_tol = 1e-9;
  double rank_rel_tol = 1e-9;
  double residual_tol = 1e-8;
  double cond_max = 1e12;
  double simdiag_tol = 1e-9;
  int simdiag_retries = 5;

  bool valid() const {
    return psd_tol > 0 && rank_rel_tol > 0 && residual_tol > 0 && cond_max > 0 && simdiag_tol > 0 &&
           simdiag_retries > 0;
  }
};

struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;  // ascending
  ComplexMatrix eigenvectors;   // unitary, columns match eigenvalues
};

inline void require_square(const ComplexMatrix& m, const char* what) {
  if (m.rows() != m.cols()) throw DimensionError(std::string(what) + ": matrix is not square");
}

inline SpectralDecomposition hermitian_eig(const ComplexMatrix& h) {
  require_square(h, "hermitian_eig");
  if (h.rows() == 0) return {Eigen::VectorXd(0), ComplexMatrix(0, 0)};
  const ComplexMatrix sym = (h + h.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
  if (solver.info() != Eigen::Success) throw Error("hermitian_eig: eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

struct PsdReport {
  bool psd = true;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  ComplexVector witness;  // eigenvector of min_eigenvalue
};

// PSD iff lambda_min >= -tol * max(|lambda_max|, 1).
inline PsdReport is_psd(const ComplexMatrix& h, double tol) {
  const auto eig = hermitian_eig(h);
  PsdReport report;
  if (eig.eigenvalues.size() == 0) return report;
  report.min_eigenvalue = eig.eigenvalues(0);
  report.max_eigenvalue = eig.eigenvalues(eig.eigenvalues.size() - 1);
  report.witness = eig.eigenvectors.col(0);
  report.psd = report.min_eigenvalue >= -tol * std::max(std::abs(report.max_eigenvalue), 1.0);
  return report;
}

inline Eigen::VectorXd singular_values(const ComplexMatrix& m) {
  if (m.size() == 0) return Eigen::VectorXd(0);
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues();
}

// Number of singular values above rank_rel_tol * sigma_max.
inline std::size_t rank(const ComplexMatrix& m, double rank_rel_tol) {
  const auto sv = singular_values(m);
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cut = rank_rel_tol * sv(0);
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) ++r;
  }
  return r;
}

// Orthonormal columns spanning the kernel of m (dim - rank columns).
inline ComplexMatrix kernel_basis(const ComplexMatrix& m, double rank_rel_tol) {
  const Eigen::Index cols = m.cols();
  if (m.size() == 0) return ComplexMatrix::Identity(cols, cols);
  Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  Eigen::Index r = 0;
  if (sv(0) > 0.0) {
    const double cut = rank_rel_tol * sv(0);
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > cut) ++r;
    }
  }
  return svd.matrixV().rightCols(cols - r);
}

struct SqrtPair {
  ComplexMatrix sqrt;
  ComplexMatrix inv_sqrt;
};

// F^{1/2} and F^{-1/2} for Hermitian positive definite F.
inline SqrtPair psd_sqrt_invsqrt(const ComplexMatrix& f, const Tolerances& tol = {}) {
  require_square(f, "psd_sqrt_invsqrt");
  const auto eig = hermitian_eig(f);
  const auto n = eig.eigenvalues.size();
  if (n == 0) return {ComplexMatrix(0, 0), ComplexMatrix(0, 0)};
  const double lmin = eig.eigenvalues(0);
  const double lmax = eig.eigenvalues(n - 1);
  if (!(lmin > 0.0) || lmin <= tol.rank_rel_tol * lmax) {
    throw ConditioningError("psd_sqrt_invsqrt: matrix is not positive definite (lambda_min=" +
                                std::to_string(lmin) + ", lambda_max=" + std::to_string(lmax) + ")",
                            lmin, lmax);
  }
  if (lmax / lmin > tol.cond_max) {
    throw ConditioningError("psd_sqrt_invsqrt: condition number " + std::to_string(lmax / lmin) +
                                " exceeds limit",
                            lmin, lmax);
  }
  const Eigen::VectorXd root = eig.eigenvalues.cwiseSqrt();
  const ComplexMatrix& u = eig.eigenvectors;
  SqrtPair out;
  out.sqrt = u * root.cast<Complex>().asDiagonal() * u.adjoint();
  out.inv_sqrt = u * root.cwiseInverse().cast<Complex>().asDiagonal() * u.adjoint();
  // exact Hermiticity
  out.sqrt = (out.sqrt + out.sqrt.adjoint()).eval() / 2.0;
  out.inv_sqrt = (out.inv_sqrt + out.inv_sqrt.adjoint()).eval() / 2.0;
  return out;
}

// max over ordered pairs (A, B), A == B included, of ||AB - BA|| and
// ||AB^dag - B^dag A||, each divided by max(||A|| ||B||, 1).
inline double commutation_residual(std::span<const ComplexMatrix> family) {
  if (family.empty()) return 0.0;
  const auto n = family.front().rows();
  for (const auto& m : family) {
    if (m.rows() != n || m.cols() != n) throw DimensionError("commutation_residual: members differ in size");
  }
  double worst = 0.0;
  for (const auto& a : family) {
    for (const auto& b : family) {
      const double scale = std::max(a.norm() * b.norm(), 1.0);
      const ComplexMatrix bd = b.adjoint();
      worst = std::max(worst, (a * b - b * a).norm() / scale);
      worst = std::max(worst, (a * bd - bd * a).norm() / scale);
    }
  }
  return worst;
}

struct JointEigenbasis {
  ComplexMatrix basis;                     // columns u_n
  ComplexMatrix eigenvalue_table;          // row = family member, column = n
  double off_diagonal_residual = 0.0;      // max_D max_{n != n'} |(U^dag D U)_{n n'}| / ||D||
  double min_joint_gap = std::numeric_limits<double>::infinity();
  int attempts = 0;
};

// Smallest Euclidean distance between two columns of the eigenvalue table;
// infinity when there is a single column.
inline double min_joint_gap(const ComplexMatrix& table) {
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < table.cols(); ++a) {
    for (Eigen::Index b = a + 1; b < table.cols(); ++b) {
      gap = std::min(gap, (table.col(a) - table.col(b)).norm());
    }
  }
  return gap;
}

namespace detail {

// Splits span(q) along the eigenspaces of each Hermitian operator in turn,
// starting at ops[first]; eigenvalues closer than thresholds[i] are merged
// into one cluster, which is refined by the remaining operators.
inline void refine_subspace(const ComplexMatrix& q, const std::vector<ComplexMatrix>& ops,
                            const std::vector<double>& thresholds, std::size_t first,
                            std::vector<ComplexVector>& columns) {
  if (q.cols() == 1 || first == ops.size()) {
    for (Eigen::Index c = 0; c < q.cols(); ++c) columns.emplace_back(q.col(c));
    return;
  }
  const ComplexMatrix restricted = q.adjoint() * ops[first] * q;
  const auto eig = hermitian_eig(restricted);
  const auto& ev = eig.eigenvalues;
  Eigen::Index start = 0;
  for (Eigen::Index i = 1; i <= ev.size(); ++i) {
    if (i == ev.size() || ev(i) - ev(i - 1) > thresholds[first]) {
      const ComplexMatrix sub = q * eig.eigenvectors.middleCols(start, i - start);
      refine_subspace(sub, ops, thresholds, first + 1, columns);
      start = i;
    }
  }
}

inline double off_diagonal_residual(std::span<const ComplexMatrix> family, const ComplexMatrix& u) {
  double worst = 0.0;
  for (const auto& d : family) {
    ComplexMatrix rotated = u.adjoint() * d * u;
    rotated.diagonal().setZero();
    const double scale = d.norm();
    const double off = rotated.cwiseAbs().maxCoeff();
    worst = std::max(worst, scale > 0.0 ? off / scale : off);
  }
  return worst;
}

}  // namespace detail

// Joint eigenbasis of a family of matrices that commute with each other and
// with each other's adjoints. A random complex combination A = sum c D is
// diagonalized through its Hermitian part; degenerate eigenspaces are refined
// by the anti-Hermitian part of A, then by the Hermitian and anti-Hermitian
// parts of every member. The result is verified and, on failure, the
// combination is redrawn up to tol.simdiag_retries times in total.
inline JointEigenbasis simultaneous_diagonalize(std::span<const ComplexMatrix> family, const Tolerances& tol,
                                                Rng& rng) {
  if (family.empty()) throw DimensionError("simultaneous_diagonalize: empty family");
  const auto n = family.front().rows();
  for (const auto& m : family) {
    if (m.rows() != n || m.cols() != n) throw DimensionError("simultaneous_diagonalize: members differ in size");
  }

  std::vector<ComplexMatrix> member_parts;
  member_parts.reserve(2 * family.size());
  for (const auto& d : family) {
    member_parts.push_back((d + d.adjoint()) / 2.0);
    member_parts.push_back((d - d.adjoint()) / Complex(0.0, 2.0));
  }

  JointEigenbasis best;
  best.off_diagonal_residual = std::numeric_limits<double>::infinity();
  const int attempts = std::max(tol.simdiag_retries, 1);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    ComplexMatrix combo = ComplexMatrix::Zero(n, n);
    for (const auto& d : family) combo += complex_normal(rng) * d;

    std::vector<ComplexMatrix> ops;
    ops.reserve(member_parts.size() + 2);
    ops.push_back((combo + combo.adjoint()) / 2.0);
    ops.push_back((combo - combo.adjoint()) / Complex(0.0, 2.0));
    ops.insert(ops.end(), member_parts.begin(), member_parts.end());
    std::vector<double> thresholds;
    thresholds.reserve(ops.size());
    for (const auto& op : ops) thresholds.push_back(tol.simdiag_tol * op.norm());

    std::vector<ComplexVector> columns;
    columns.reserve(static_cast<std::size_t>(n));
    detail::refine_subspace(ComplexMatrix::Identity(n, n), ops, thresholds, 0, columns);
    ComplexMatrix u(n, n);
    for (Eigen::Index c = 0; c < n; ++c) u.col(c) = columns[static_cast<std::size_t>(c)];

    const double residual = detail::off_diagonal_residual(family, u);
    if (residual < best.off_diagonal_residual) {
      best.basis = u;
      best.off_diagonal_residual = residual;
      best.attempts = attempt;
    }
    if (residual <= tol.simdiag_tol) break;
  }
  if (!(best.off_diagonal_residual <= tol.simdiag_tol)) {
    throw SimdiagError("simultaneous_diagonalize: off-diagonal residual " +
                           std::to_string(best.off_diagonal_residual) + " above tolerance after " +
                           std::to_string(attempts) + " attempts",
                       best.off_diagonal_residual);
  }

  best.eigenvalue_table.resize(static_cast<Eigen::Index>(family.size()), n);
  for (std::size_t i = 0; i < family.size(); ++i) {
    best.eigenvalue_table.row(static_cast<Eigen::Index>(i)) =
        (best.basis.adjoint() * family[i] * best.basis).diagonal().transpose();
  }
  best.min_joint_gap = min_joint_gap(best.eigenvalue_table);
  return best;
}

}  // namespace pptcanon
