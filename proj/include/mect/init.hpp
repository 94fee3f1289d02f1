#pragma once

#include <cmath>

#include "mect/rng.hpp"
#include "mect/tensor.hpp"

namespace mect::init {

inline Tensor uniform(Shape shape, double bound, Rng& rng) {
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(v));
}

// Glorot uniform over a fan_in x fan_out matrix.
inline Tensor xavier(Shape shape, Rng& rng) {
  const double fan = static_cast<double>(shape.at(0) + shape.at(1));
  return uniform(std::move(shape), std::sqrt(6.0 / fan), rng);
}

}  // namespace mect::init
