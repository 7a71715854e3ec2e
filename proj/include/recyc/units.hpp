#pragma once

#include <cmath>
#include <string>

#include "recyc/error.hpp"

namespace recyc {

template <typename Scalar>
Scalar db_to_linear(Scalar db) {
  using std::pow;
  return pow(Scalar(10), db / Scalar(10));
}

template <typename Scalar>
Scalar linear_to_db(Scalar ratio) {
  using std::log10;
  require(ratio > Scalar(0), ErrorKind::InvalidParameter,
          "linear_to_db: ratio must be positive, got " + std::to_string(double(ratio)));
  return Scalar(10) * log10(ratio);
}

}  // namespace recyc
