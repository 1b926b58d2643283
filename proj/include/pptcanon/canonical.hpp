#pragma once

// Canonical form rho = (I_S x sqrt F) T^dag T (I_S x sqrt F) with
// T = (D^1_{K_1-1} ... D^1_1 I) x ... x (D^m_{K_m-1} ... D^m_1 I), where the
// tensor product of the row blocks multiplies the N x N entries. Block
// (b, b') of rho is sqrt F S_b^dag S_b' sqrt F with
// S_b = prod_i D^i_{(K_i-1)-b_i} and D^i_0 = I.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pptcanon/errors.hpp"
#include "pptcanon/multilinear.hpp"
#include "pptcanon/numerics.hpp"
#include "pptcanon/random.hpp"

namespace pptcanon {

// Re-assembled blocks disagree with the state.
class CanonicalViolation : public Error {
 public:
  CanonicalViolation(const std::string& what, FrontMultiIndex row, FrontMultiIndex col, double residual)
      : Error(what), row_(std::move(row)), col_(std::move(col)), residual_(residual) {}

  const FrontMultiIndex& row() const noexcept { return row_; }
  const FrontMultiIndex& col() const noexcept { return col_; }
  double residual() const noexcept { return residual_; }

 private:
  FrontMultiIndex row_;
  FrontMultiIndex col_;
  double residual_;
};

struct CanonicalForm {
  // levels[i][j - 1] holds D^{i+1}_j for j = 1..K_i - 1.
  CanonicalForm(SystemShape s, std::vector<std::vector<ComplexMatrix>> levels, ComplexMatrix f_block)
      : shape(std::move(s)), d(std::move(levels)), f(std::move(f_block)) {
    const auto n = static_cast<Eigen::Index>(shape.tail_dim());
    if (d.size() != shape.num_front()) throw DimensionError("canonical form: wrong number of subsystems in D table");
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d[i].size() != shape.front_dim(i) - 1) {
        throw DimensionError("canonical form: subsystem " + std::to_string(i + 1) + " needs K_i - 1 D matrices");
      }
      for (const auto& m : d[i]) {
        if (m.rows() != n || m.cols() != n) throw DimensionError("canonical form: D matrix is not N x N");
      }
    }
    if (f.rows() != n || f.cols() != n) throw DimensionError("canonical form: F is not N x N");
  }

  SystemShape shape;
  std::vector<std::vector<ComplexMatrix>> d;
  ComplexMatrix f;

  // D^{i+1}_j with the convention D_0 = I; i is 0-based.
  ComplexMatrix level(std::size_t i, std::size_t j) const {
    const auto n = static_cast<Eigen::Index>(shape.tail_dim());
    if (j == 0) return ComplexMatrix::Identity(n, n);
    return d.at(i).at(j - 1);
  }

  // Every stored D, subsystem-major then level ascending.
  std::vector<ComplexMatrix> family() const {
    std::vector<ComplexMatrix> out;
    for (const auto& row : d) out.insert(out.end(), row.begin(), row.end());
    return out;
  }
};

inline ComplexMatrix selector(const CanonicalForm& cf, const FrontMultiIndex& b) {
  cf.shape.check_index(b);
  const auto n = static_cast<Eigen::Index>(cf.shape.tail_dim());
  ComplexMatrix s = ComplexMatrix::Identity(n, n);
  for (std::size_t i = 0; i < b.size(); ++i) {
    const std::size_t j = cf.shape.front_dim(i) - 1 - b[i];
    if (j != 0) s = s * cf.d[i][j - 1];
  }
  return s;
}

namespace detail {

inline std::vector<ComplexMatrix> all_selectors(const CanonicalForm& cf) {
  std::vector<ComplexMatrix> sel;
  sel.reserve(cf.shape.front_size());
  for (std::size_t s = 0; s < cf.shape.front_size(); ++s) sel.push_back(selector(cf, cf.shape.front_unflat(s)));
  return sel;
}

}  // namespace detail

// Not normalized; the top diagonal block is F itself.
inline DensityMatrix assemble_rho(const CanonicalForm& cf, const Tolerances& tol = {}) {
  const auto root = psd_sqrt_invsqrt(cf.f, tol).sqrt;
  const auto sel = detail::all_selectors(cf);
  const auto n = static_cast<Eigen::Index>(cf.shape.tail_dim());
  const auto count = static_cast<Eigen::Index>(sel.size());
  std::vector<ComplexMatrix> left(sel.size());
  std::vector<ComplexMatrix> right(sel.size());
  for (std::size_t s = 0; s < sel.size(); ++s) {
    left[s] = root * sel[s].adjoint();
    right[s] = sel[s] * root;
  }
  ComplexMatrix rho(count * n, count * n);
  for (Eigen::Index r = 0; r < count; ++r) {
    rho.block(r * n, r * n, n, n) = left[r] * right[r];
    rho.block(r * n, r * n, n, n) = (rho.block(r * n, r * n, n, n) + rho.block(r * n, r * n, n, n).adjoint()).eval() / 2.0;
    for (Eigen::Index c = r + 1; c < count; ++c) {
      rho.block(r * n, c * n, n, n) = left[r] * right[c];
      rho.block(c * n, r * n, n, n) = rho.block(r * n, c * n, n, n).adjoint();
    }
  }
  rho.block((count - 1) * n, (count - 1) * n, n, n) = cf.f;
  return DensityMatrix(cf.shape, std::move(rho));
}

// Trace-normalized state and the factor 1/trace that was applied.
inline std::pair<DensityMatrix, double> assemble_rho_normalized(const CanonicalForm& cf, const Tolerances& tol = {}) {
  auto rho = assemble_rho(cf, tol);
  const double scale = 1.0 / rho.trace();
  return {DensityMatrix(rho.shape, rho.matrix * scale), scale};
}

struct ValidationReport {
  double block_residual = 0.0;  // max ||E_bb' - sqrt F S_b^dag S_b' sqrt F|| / ||rho||
  FrontMultiIndex worst_row;
  FrontMultiIndex worst_col;
  double commutation_residual = 0.0;
  // NaN when the family could not be jointly diagonalized.
  double min_joint_gap = std::numeric_limits<double>::infinity();

  bool certified(const Tolerances& tol) const {
    return block_residual <= tol.residual_tol && commutation_residual <= tol.simdiag_tol;
  }
};

namespace detail {

inline void block_residuals(const CanonicalForm& cf, const DensityMatrix& rho, const ComplexMatrix& root,
                            ValidationReport& report) {
  const auto sel = all_selectors(cf);
  const double scale = rho.matrix.norm() > 0.0 ? rho.matrix.norm() : 1.0;
  report.block_residual = 0.0;
  report.worst_row = cf.shape.top_index();
  report.worst_col = cf.shape.top_index();
  for (std::size_t r = 0; r < sel.size(); ++r) {
    const ComplexMatrix left = root * sel[r].adjoint();
    for (std::size_t c = 0; c < sel.size(); ++c) {
      const auto b = cf.shape.front_unflat(r);
      const auto bp = cf.shape.front_unflat(c);
      const double res = (block(rho, b, bp) - left * sel[c] * root).norm() / scale;
      if (res > report.block_residual) {
        report.block_residual = res;
        report.worst_row = b;
        report.worst_col = bp;
      }
    }
  }
}

}  // namespace detail

// Diagnostic comparison of a canonical form against a state of the same shape.
inline ValidationReport validate(const CanonicalForm& cf, const DensityMatrix& rho, const Tolerances& tol = {}) {
  if (!(cf.shape == rho.shape)) throw DimensionError("validate: shapes differ");
  ValidationReport report;
  ComplexMatrix root;
  try {
    root = psd_sqrt_invsqrt(cf.f, tol).sqrt;
  } catch (const ConditioningError&) {
    // F outside the admissible class; fall back to the plain eigen-root so the
    // residual is still meaningful.
    const auto eig = hermitian_eig(cf.f);
    root = eig.eigenvectors * eig.eigenvalues.cwiseMax(0.0).cwiseSqrt().cast<Complex>().asDiagonal() *
           eig.eigenvectors.adjoint();
  }
  detail::block_residuals(cf, rho, root, report);

  const auto fam = cf.family();
  report.commutation_residual = commutation_residual(fam);
  try {
    Rng rng(0x5eed);
    report.min_joint_gap = simultaneous_diagonalize(fam, tol, rng).min_joint_gap;
  } catch (const SimdiagError&) {
    report.min_joint_gap = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

// Reads {D, F} off the blocks in the given basis. Requires
// rank(E_kk) = rank(rho) = N for the top multi-index k.
inline CanonicalForm extract(const DensityMatrix& rho, const Tolerances& tol = {}) {
  const auto& shape = rho.shape;
  const auto k = shape.top_index();
  const ComplexMatrix f = block(rho, k, k);
  const std::size_t n = shape.tail_dim();
  const std::size_t rank_top = rank(f, tol.rank_rel_tol);
  const std::size_t rank_rho = rank(rho.matrix, tol.rank_rel_tol);
  if (rank_top != n || rank_rho != n) {
    throw RankConditionError("extract: rank condition unmet (rank(rho)=" + std::to_string(rank_rho) +
                                 ", rank(top block)=" + std::to_string(rank_top) + ", N=" + std::to_string(n) + ")",
                             rank_rho, rank_top, n);
  }
  const auto roots = psd_sqrt_invsqrt(f, tol);

  std::vector<std::vector<ComplexMatrix>> levels(shape.num_front());
  for (std::size_t i = 0; i < shape.num_front(); ++i) {
    for (std::size_t j = 1; j < shape.front_dim(i); ++j) {
      auto b = k;
      b[i] = shape.front_dim(i) - 1 - j;
      levels[i].push_back(roots.inv_sqrt * block(rho, k, b) * roots.inv_sqrt);
    }
  }
  CanonicalForm cf(shape, std::move(levels), f);

  ValidationReport report;
  detail::block_residuals(cf, rho, roots.sqrt, report);
  if (report.block_residual > tol.residual_tol) {
    throw CanonicalViolation("extract: block residual " + std::to_string(report.block_residual) +
                                 " above tolerance; state is not in canonical form in this basis",
                             report.worst_row, report.worst_col, report.block_residual);
  }
  return cf;
}

struct SampleOptions {
  double eigenvalue_scale = 1.0;
  double f_condition = 10.0;  // spectrum of F drawn log-uniformly in [1, f_condition]
};

// D^i_j = U0 diag(z) U0^dag with one Haar U0 shared by the whole table, and
// F = V diag(f) V^dag for an independent Haar V.
inline CanonicalForm sample_canonical(const SystemShape& shape, Rng& rng, const SampleOptions& options = {}) {
  const auto n = static_cast<Eigen::Index>(shape.tail_dim());
  const ComplexMatrix u0 = haar_unitary(n, rng);
  std::vector<std::vector<ComplexMatrix>> levels(shape.num_front());
  for (std::size_t i = 0; i < shape.num_front(); ++i) {
    for (std::size_t j = 1; j < shape.front_dim(i); ++j) {
      ComplexVector z(n);
      for (Eigen::Index e = 0; e < n; ++e) z(e) = options.eigenvalue_scale * complex_normal(rng);
      levels[i].push_back(u0 * z.asDiagonal() * u0.adjoint());
    }
  }
  const ComplexMatrix v = haar_unitary(n, rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd spectrum(n);
  const double log_cond = std::log(std::max(options.f_condition, 1.0));
  for (Eigen::Index e = 0; e < n; ++e) spectrum(e) = std::exp(log_cond * unit(rng));
  ComplexMatrix f = v * spectrum.cast<Complex>().asDiagonal() * v.adjoint();
  f = (f + f.adjoint()).eval() / 2.0;
  return CanonicalForm(shape, std::move(levels), std::move(f));
}

}  // namespace pptcanon
