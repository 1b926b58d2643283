#pragma once

#include "pptcanon/canonical.hpp"
#include "pptcanon/ensemble.hpp"
#include "pptcanon/errors.hpp"
#include "pptcanon/io.hpp"
#include "pptcanon/multilinear.hpp"
#include "pptcanon/numerics.hpp"
#include "pptcanon/oracle.hpp"
#include "pptcanon/random.hpp"
#include "pptcanon/separability.hpp"
