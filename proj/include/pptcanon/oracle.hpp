#pragma once

// Slow reference paths and fixtures. Nothing here shares code with the
// canonical-form or decomposition routines it is used to check.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "pptcanon/canonical.hpp"
#include "pptcanon/ensemble.hpp"
#include "pptcanon/errors.hpp"
#include "pptcanon/multilinear.hpp"
#include "pptcanon/random.hpp"

namespace pptcanon::oracle {

// sum_n p_n |w_n><w_n| with w_n = v_1 x ... x v_m x g built digit by digit.
inline ComplexMatrix brute_reconstruct(const ProductEnsemble& ensemble, const SystemShape& shape) {
  const auto dims = shape.all_dims();
  const std::size_t total = shape.total_size();
  ComplexMatrix out = ComplexMatrix::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
  std::vector<Complex> w(total);
  std::vector<std::size_t> digits(dims.size());
  for (const auto& term : ensemble.terms) {
    if (term.locals.size() != shape.num_front()) throw DimensionError("brute_reconstruct: wrong number of local vectors");
    for (std::size_t i = 0; i < term.locals.size(); ++i) {
      if (static_cast<std::size_t>(term.locals[i].size()) != dims[i]) {
        throw DimensionError("brute_reconstruct: local vector length mismatch");
      }
    }
    if (static_cast<std::size_t>(term.tail.size()) != shape.tail_dim()) {
      throw DimensionError("brute_reconstruct: tail vector length mismatch");
    }
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t rest = idx;
      for (std::size_t f = dims.size(); f-- > 0;) {
        digits[f] = rest % dims[f];
        rest /= dims[f];
      }
      Complex amp = term.tail(static_cast<Eigen::Index>(digits.back()));
      for (std::size_t i = 0; i < term.locals.size(); ++i) amp *= term.locals[i](static_cast<Eigen::Index>(digits[i]));
      w[idx] = amp;
    }
    for (std::size_t r = 0; r < total; ++r) {
      for (std::size_t c = 0; c < total; ++c) {
        out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += term.weight * w[r] * std::conj(w[c]);
      }
    }
  }
  return out;
}

struct SeparableSample {
  DensityMatrix rho;
  ProductEnsemble ensemble;
};

// Trace-one mixture of num_terms random product projectors with
// normalized exponential weights. With orthonormal_tail (num_terms <= N) the
// tail vectors are columns of one Haar unitary.
inline SeparableSample random_separable(const SystemShape& shape, std::size_t num_terms, Rng& rng,
                                        bool orthonormal_tail = false) {
  if (num_terms < 1) throw DimensionError("random_separable: need at least one term");
  if (orthonormal_tail && num_terms > shape.tail_dim()) {
    throw DimensionError("random_separable: more orthonormal tail vectors than the tail dimension");
  }
  std::exponential_distribution<double> expo(1.0);
  ProductEnsemble ensemble;
  ComplexMatrix tails;
  if (orthonormal_tail) tails = haar_unitary(static_cast<Eigen::Index>(shape.tail_dim()), rng);
  double total = 0.0;
  for (std::size_t t = 0; t < num_terms; ++t) {
    ProductTerm term;
    term.weight = expo(rng);
    total += term.weight;
    for (std::size_t i = 0; i < shape.num_front(); ++i) {
      term.locals.push_back(random_unit_vector(static_cast<Eigen::Index>(shape.front_dim(i)), rng));
    }
    term.tail = orthonormal_tail ? ComplexVector(tails.col(static_cast<Eigen::Index>(t)))
                                 : random_unit_vector(static_cast<Eigen::Index>(shape.tail_dim()), rng);
    ensemble.terms.push_back(std::move(term));
  }
  for (auto& term : ensemble.terms) term.weight /= total;
  ComplexMatrix m = brute_reconstruct(ensemble, shape);
  return {DensityMatrix(shape, std::move(m)), std::move(ensemble)};
}

// G G^dag / tr for an (S N) x target_rank complex Gaussian G.
inline DensityMatrix random_density(const SystemShape& shape, std::size_t target_rank, Rng& rng) {
  const std::size_t total = shape.total_size();
  if (target_rank < 1 || target_rank > total) throw DimensionError("random_density: target rank out of range");
  const ComplexMatrix g =
      gaussian_matrix(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(target_rank), rng);
  ComplexMatrix m = g * g.adjoint();
  m /= m.trace().real();
  m = (m + m.adjoint()).eval() / 2.0;
  return DensityMatrix(shape, std::move(m));
}

inline SystemShape two_qubits() { return SystemShape({2}, 2); }

inline ComplexMatrix projector(const ComplexVector& v) { return v * v.adjoint(); }

// |Phi+> = (|00> + |11>)/sqrt 2
inline DensityMatrix bell_projector() {
  ComplexVector v = ComplexVector::Zero(4);
  v(0) = v(3) = 1.0 / std::sqrt(2.0);
  return DensityMatrix(two_qubits(), projector(v));
}

// w |psi-><psi-| + (1 - w) |00><00|, psi- = (|01> - |10>)/sqrt 2
inline DensityMatrix singlet_mixture(double w = 0.5) {
  ComplexVector s = ComplexVector::Zero(4);
  s(1) = 1.0 / std::sqrt(2.0);
  s(2) = -1.0 / std::sqrt(2.0);
  ComplexVector z = ComplexVector::Zero(4);
  z(0) = 1.0;
  return DensityMatrix(two_qubits(), w * projector(s) + (1.0 - w) * projector(z));
}

// p |psi-><psi-| + (1 - p) I/4
inline DensityMatrix werner(double p) {
  ComplexVector s = ComplexVector::Zero(4);
  s(1) = 1.0 / std::sqrt(2.0);
  s(2) = -1.0 / std::sqrt(2.0);
  return DensityMatrix(two_qubits(), p * projector(s) + (1.0 - p) * ComplexMatrix::Identity(4, 4) / 4.0);
}

// (|00><00| + |11><11|)/2
inline DensityMatrix classical_mixture() {
  ComplexMatrix m = ComplexMatrix::Zero(4, 4);
  m(0, 0) = m(3, 3) = 0.5;
  return DensityMatrix(two_qubits(), m);
}

enum class FixtureKind { random_separable, random_density, bell_mixture, canonical_sample };

struct FixtureSpec {
  SystemShape shape = two_qubits();
  FixtureKind kind = FixtureKind::random_separable;
  std::size_t num_terms = 1;  // random_separable
  std::size_t rank = 1;       // random_density
  double mixing = 0.5;        // bell_mixture
  std::uint64_t seed = 0;
};

// bell_mixture ignores the shape and always returns the 2 x 2 singlet mixture.
inline DensityMatrix build_fixture(const FixtureSpec& spec) {
  Rng rng(spec.seed);
  switch (spec.kind) {
    case FixtureKind::random_separable:
      return random_separable(spec.shape, spec.num_terms, rng).rho;
    case FixtureKind::random_density:
      return random_density(spec.shape, spec.rank, rng);
    case FixtureKind::bell_mixture:
      if (spec.mixing < 0.0 || spec.mixing > 1.0) throw DimensionError("bell_mixture: mixing weight outside [0, 1]");
      return singlet_mixture(spec.mixing);
    case FixtureKind::canonical_sample:
      return assemble_rho_normalized(sample_canonical(spec.shape, rng)).first;
  }
  throw Error("build_fixture: unknown kind");
}

}  // namespace pptcanon::oracle
