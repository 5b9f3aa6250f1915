#pragma once

#include <cstddef>

#include "deeptarget/nn/array.hpp"
#include "deeptarget/rng.hpp"

namespace deeptarget::nn {

/// Limit of the Glorot/Xavier uniform distribution, sqrt(6 / (fan_in + fan_out)).
double glorot_limit(std::size_t fan_in, std::size_t fan_out);

/// fan_out x fan_in matrix with entries i.i.d. uniform on [-limit, limit].
NumericArray glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// Fills `block` (rows x cols) of `target` starting at row `row0` with Glorot draws.
void glorot_fill_rows(NumericArray& target, std::size_t row0, std::size_t rows, Rng& rng);

/// Every entry uniform on [lo, hi).
void uniform_fill(NumericArray& target, double lo, double hi, Rng& rng);

}  // namespace deeptarget::nn
