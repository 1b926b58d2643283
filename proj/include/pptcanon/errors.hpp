#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pptcanon {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// A matrix that should be invertible / well conditioned is not.
class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, double lambda_min, double lambda_max)
      : Error(what), lambda_min_(lambda_min), lambda_max_(lambda_max) {}

  double lambda_min() const noexcept { return lambda_min_; }
  double lambda_max() const noexcept { return lambda_max_; }

 private:
  double lambda_min_;
  double lambda_max_;
};

// rank(top block) or rank(rho) differs from the tail dimension.
class RankConditionError : public Error {
 public:
  RankConditionError(const std::string& what, std::size_t rank_rho, std::size_t rank_top,
                     std::size_t tail_dim)
      : Error(what), rank_rho_(rank_rho), rank_top_(rank_top), tail_dim_(tail_dim) {}

  std::size_t rank_rho() const noexcept { return rank_rho_; }
  std::size_t rank_top() const noexcept { return rank_top_; }
  std::size_t tail_dim() const noexcept { return tail_dim_; }

 private:
  std::size_t rank_rho_;
  std::size_t rank_top_;
  std::size_t tail_dim_;
};

// Joint diagonalization did not reach the requested off-diagonal residual.
class SimdiagError : public Error {
 public:
  SimdiagError(const std::string& what, double best_residual)
      : Error(what), best_residual_(best_residual) {}

  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

// Invalid or inconsistent file content / certificate.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace pptcanon
