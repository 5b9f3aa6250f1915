#include "deeptarget/nn/init.hpp"

#include <cmath>

#include "deeptarget/error.hpp"

namespace deeptarget::nn {

double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
  if (fan_in == 0 || fan_out == 0) throw ShapeError("glorot: fans must be >= 1");
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

NumericArray glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  NumericArray out({fan_out, fan_in});
  glorot_fill_rows(out, 0, fan_out, rng);
  return out;
}

void glorot_fill_rows(NumericArray& target, std::size_t row0, std::size_t rows, Rng& rng) {
  const std::size_t cols = target.cols();
  const double limit = glorot_limit(cols, rows);
  for (std::size_t r = row0; r < row0 + rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      target.at(r, c) = (2.0 * uniform_unit(rng) - 1.0) * limit;
    }
  }
}

void uniform_fill(NumericArray& target, double lo, double hi, Rng& rng) {
  for (double& v : target.data()) v = lo + (hi - lo) * uniform_unit(rng);
}

}  // namespace deeptarget::nn
