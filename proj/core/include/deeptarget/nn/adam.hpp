#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "deeptarget/nn/param_store.hpp"

namespace deeptarget::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamMoments {
  NumericArray first;
  NumericArray second;
};

/// Bias-corrected Adam state; moments are created lazily to mirror the store.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::map<std::string, AdamMoments> moments;
};

/// One Adam update of every trainable parameter from its accumulated gradient.
/// Throws NumericError without touching anything if a gradient is non-finite.
void adam_step(ParamStore& store, AdamState& state);

}  // namespace deeptarget::nn
