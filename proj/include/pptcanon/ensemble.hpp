#pragma once

#include <vector>

#include "pptcanon/multilinear.hpp"

namespace pptcanon {

// p * (v_1 v_1^dag) x ... x (v_m v_m^dag) x (g g^dag) with unit vectors.
struct ProductTerm {
  double weight = 0.0;
  std::vector<ComplexVector> locals;
  ComplexVector tail;
};

struct ProductEnsemble {
  std::vector<ProductTerm> terms;

  double weight_sum() const {
    double s = 0.0;
    for (const auto& t : terms) s += t.weight;
    return s;
  }
};

}  // namespace pptcanon
