#pragma once

// Index algebra and subsystem-local operations on multipartite matrices.
//
// Basis ordering is row-major over (b_1, ..., b_m, n): subsystem 1 is the
// most significant digit and the tail factor C^N is always last.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pptcanon/errors.hpp"

namespace pptcanon {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

// Local basis labels (b_1, ..., b_m) on the front subsystems, 0-based.
using FrontMultiIndex = std::vector<std::size_t>;

class SystemShape {
 public:
  SystemShape(std::vector<std::size_t> front_dims, std::size_t tail_dim)
      : front_dims_(std::move(front_dims)), tail_dim_(tail_dim) {
    if (front_dims_.empty()) throw DimensionError("shape needs at least one front subsystem");
    for (auto k : front_dims_) {
      if (k < 2) throw DimensionError("front subsystem dimension must be >= 2");
    }
    if (tail_dim_ < 1) throw DimensionError("tail dimension must be >= 1");
  }

  // dims = (K_1, ..., K_m, N), tail last.
  static SystemShape from_dims(const std::vector<std::size_t>& dims) {
    if (dims.size() < 2) throw DimensionError("dims needs front dimensions followed by the tail dimension");
    return SystemShape(std::vector<std::size_t>(dims.begin(), dims.end() - 1), dims.back());
  }

  const std::vector<std::size_t>& front_dims() const noexcept { return front_dims_; }
  std::size_t front_dim(std::size_t i) const { return front_dims_.at(i); }
  std::size_t tail_dim() const noexcept { return tail_dim_; }
  std::size_t num_front() const noexcept { return front_dims_.size(); }

  // S = prod K_i
  std::size_t front_size() const noexcept {
    return std::accumulate(front_dims_.begin(), front_dims_.end(), std::size_t{1},
                           std::multiplies<>());
  }
  std::size_t total_size() const noexcept { return front_size() * tail_dim_; }

  std::vector<std::size_t> all_dims() const {
    auto d = front_dims_;
    d.push_back(tail_dim_);
    return d;
  }

  // k = (K_1 - 1, ..., K_m - 1)
  FrontMultiIndex top_index() const {
    FrontMultiIndex k(front_dims_.size());
    for (std::size_t i = 0; i < k.size(); ++i) k[i] = front_dims_[i] - 1;
    return k;
  }

  void check_index(const FrontMultiIndex& b) const {
    if (b.size() != front_dims_.size()) throw IndexError("front multi-index has wrong length");
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (b[i] >= front_dims_[i]) throw IndexError("front multi-index component out of range");
    }
  }

  // Flat position of b among the S front basis vectors.
  std::size_t front_flat(const FrontMultiIndex& b) const {
    check_index(b);
    std::size_t s = 0;
    for (std::size_t i = 0; i < b.size(); ++i) s = s * front_dims_[i] + b[i];
    return s;
  }

  FrontMultiIndex front_unflat(std::size_t s) const {
    if (s >= front_size()) throw IndexError("front flat index out of range");
    FrontMultiIndex b(front_dims_.size());
    for (std::size_t i = b.size(); i-- > 0;) {
      b[i] = s % front_dims_[i];
      s /= front_dims_[i];
    }
    return b;
  }

  friend bool operator==(const SystemShape&, const SystemShape&) = default;

  std::string to_string() const {
    std::string out = "(";
    for (std::size_t i = 0; i < front_dims_.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(front_dims_[i]);
    }
    return out + ";" + std::to_string(tail_dim_) + ")";
  }

 private:
  std::vector<std::size_t> front_dims_;
  std::size_t tail_dim_;
};

inline std::size_t composite_index(const SystemShape& shape, const FrontMultiIndex& b, std::size_t n) {
  if (n >= shape.tail_dim()) throw IndexError("tail index out of range");
  return shape.front_flat(b) * shape.tail_dim() + n;
}

inline bool all_finite(const ComplexMatrix& m) {
  return m.array().real().allFinite() && m.array().imag().allFinite();
}

// A state on K_1 x ... x K_m x N. Hermiticity and positivity are checked by
// the loaders (see validate_density in numerics.hpp); the constructor only
// enforces the size and finiteness.
struct DensityMatrix {
  DensityMatrix(SystemShape s, ComplexMatrix m, double trace_tol = 1e-9)
      : shape(std::move(s)), matrix(std::move(m)) {
    const auto side = static_cast<Eigen::Index>(shape.total_size());
    if (matrix.rows() != side || matrix.cols() != side) {
      throw DimensionError("density matrix side " + std::to_string(matrix.rows()) + "x" +
                           std::to_string(matrix.cols()) + " does not match shape " +
                           shape.to_string());
    }
    if (!all_finite(matrix)) throw DimensionError("density matrix has non-finite entries");
    normalized = std::abs(matrix.trace() - Complex(1.0)) <= trace_tol;
  }

  SystemShape shape;
  ComplexMatrix matrix;
  bool normalized = false;

  double trace() const { return matrix.trace().real(); }
};

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline ComplexMatrix kron_all(std::span<const ComplexMatrix> factors) {
  ComplexMatrix out = ComplexMatrix::Identity(1, 1);
  for (const auto& f : factors) out = kron(out, f);
  return out;
}

// Partial transpose of an arbitrary matrix on the factors `dims`, transposing
// every subsystem listed in `subsystems` (1-based, tail = dims.size()).
inline ComplexMatrix partial_transpose(const ComplexMatrix& m, const std::vector<std::size_t>& dims,
                                       const std::vector<std::size_t>& subsystems) {
  const std::size_t total =
      std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  if (static_cast<std::size_t>(m.rows()) != total || m.rows() != m.cols()) {
    throw DimensionError("partial_transpose: matrix does not match dims");
  }
  std::vector<bool> flip(dims.size(), false);
  for (auto l : subsystems) {
    if (l < 1 || l > dims.size()) throw IndexError("partial_transpose: subsystem out of range");
    flip[l - 1] = true;
  }
  // stride of each factor in the flat index
  std::vector<std::size_t> stride(dims.size(), 1);
  for (std::size_t i = dims.size() - 1; i-- > 0;) stride[i] = stride[i + 1] * dims[i + 1];

  ComplexMatrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < total; ++r) {
    for (std::size_t c = 0; c < total; ++c) {
      std::size_t nr = r;
      std::size_t nc = c;
      for (std::size_t f = 0; f < dims.size(); ++f) {
        if (!flip[f]) continue;
        const std::size_t dr = (r / stride[f]) % dims[f];
        const std::size_t dc = (c / stride[f]) % dims[f];
        nr = nr - dr * stride[f] + dc * stride[f];
        nc = nc - dc * stride[f] + dr * stride[f];
      }
      out(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nc)) =
          m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  return out;
}

// rho^{T_l}, l in 1..m+1 (m+1 is the tail).
inline ComplexMatrix partial_transpose(const DensityMatrix& rho, std::size_t l) {
  if (l < 1 || l > rho.shape.num_front() + 1) {
    throw IndexError("partial_transpose: subsystem " + std::to_string(l) + " out of range");
  }
  return partial_transpose(rho.matrix, rho.shape.all_dims(), {l});
}

// E_{b,b'} = <b| rho |b'>, an N x N block.
inline ComplexMatrix block(const DensityMatrix& rho, const FrontMultiIndex& b, const FrontMultiIndex& bp) {
  const auto n = static_cast<Eigen::Index>(rho.shape.tail_dim());
  const auto r = static_cast<Eigen::Index>(rho.shape.front_flat(b)) * n;
  const auto c = static_cast<Eigen::Index>(rho.shape.front_flat(bp)) * n;
  return rho.matrix.block(r, c, n, n);
}

// Amplitudes w_b = prod_i e_i[b_i] of the product vector e_1 x ... x e_m.
inline ComplexVector product_vector(std::span<const ComplexVector> locals) {
  ComplexVector w = ComplexVector::Ones(1);
  for (const auto& e : locals) {
    ComplexVector next(w.size() * e.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) next.segment(i * e.size(), e.size()) = w(i) * e;
    w = std::move(next);
  }
  return w;
}

// <e_1, ..., e_m| rho |e_1, ..., e_m>, an N x N matrix.
inline ComplexMatrix product_compression(const DensityMatrix& rho, std::span<const ComplexVector> locals) {
  const auto& shape = rho.shape;
  if (locals.size() != shape.num_front()) throw DimensionError("product_compression: need one vector per front subsystem");
  for (std::size_t i = 0; i < locals.size(); ++i) {
    if (static_cast<std::size_t>(locals[i].size()) != shape.front_dim(i)) {
      throw DimensionError("product_compression: local vector has wrong length");
    }
    if (locals[i].norm() == 0.0) throw DimensionError("product_compression: zero local vector");
  }
  const ComplexVector w = product_vector(locals);
  const auto n = static_cast<Eigen::Index>(shape.tail_dim());
  // W = w (x) I_N, result W^dag rho W
  ComplexMatrix weighted = ComplexMatrix::Zero(n, static_cast<Eigen::Index>(shape.total_size()));
  for (Eigen::Index s = 0; s < w.size(); ++s) {
    if (w(s) == Complex(0.0)) continue;
    weighted += std::conj(w(s)) * rho.matrix.middleRows(s * n, n);
  }
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  for (Eigen::Index s = 0; s < w.size(); ++s) {
    if (w(s) == Complex(0.0)) continue;
    out += w(s) * weighted.middleCols(s * n, n);
  }
  return out;
}

// Ratio of extreme singular values; infinity for singular matrices.
inline double condition_number(const ComplexMatrix& m) {
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 1.0;
  const double smin = sv(sv.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / smin;
}

// (L_1 x ... x L_m x I_N) rho (L_1 x ... x L_m x I_N)^dag
inline DensityMatrix apply_local(const DensityMatrix& rho, std::span<const ComplexMatrix> ops,
                                 double cond_max = 1e12) {
  const auto& shape = rho.shape;
  if (ops.size() != shape.num_front()) throw DimensionError("apply_local: need one operator per front subsystem");
  std::vector<ComplexMatrix> factors;
  factors.reserve(ops.size() + 1);
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(shape.front_dim(i));
    if (ops[i].rows() != k || ops[i].cols() != k) throw DimensionError("apply_local: operator has wrong size");
    const double cond = condition_number(ops[i]);
    if (!(cond <= cond_max)) {
      throw ConditioningError("apply_local: local operator " + std::to_string(i + 1) +
                                  " is singular or ill-conditioned",
                              0.0, cond);
    }
    factors.push_back(ops[i]);
  }
  factors.push_back(ComplexMatrix::Identity(static_cast<Eigen::Index>(shape.tail_dim()),
                                            static_cast<Eigen::Index>(shape.tail_dim())));
  const ComplexMatrix l = kron_all(factors);
  return DensityMatrix(shape, l * rho.matrix * l.adjoint());
}

// Partial trace over every front subsystem: sum_b E_{b,b}.
inline ComplexMatrix reduced_tail(const DensityMatrix& rho) {
  const auto n = static_cast<Eigen::Index>(rho.shape.tail_dim());
  const auto s = static_cast<Eigen::Index>(rho.shape.front_size());
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  for (Eigen::Index b = 0; b < s; ++b) out += rho.matrix.block(b * n, b * n, n, n);
  return out;
}

// (I_S x P)^dag rho (I_S x P) for an N x r isometry P; the result lives on
// K_1 x ... x K_m x r.
inline DensityMatrix compress_tail(const DensityMatrix& rho, const ComplexMatrix& isometry) {
  const auto& shape = rho.shape;
  if (isometry.rows() != static_cast<Eigen::Index>(shape.tail_dim())) {
    throw DimensionError("compress_tail: isometry row count must equal the tail dimension");
  }
  const auto s = static_cast<Eigen::Index>(shape.front_size());
  const ComplexMatrix p = kron(ComplexMatrix::Identity(s, s), isometry);
  return DensityMatrix(SystemShape(shape.front_dims(), static_cast<std::size_t>(isometry.cols())),
                       p.adjoint() * rho.matrix * p);
}

inline double relative_frobenius(const ComplexMatrix& a, const ComplexMatrix& reference) {
  const double scale = reference.norm();
  const double diff = (a - reference).norm();
  return scale > 0.0 ? diff / scale : diff;
}

}  // namespace pptcanon
