#pragma once

#include <array>
#include <limits>
#include <cstddef>
#include <span>
#include <vector>

#include "deeptarget/nn/array.hpp"
#include "deeptarget/rng.hpp"

namespace deeptarget::nn {

inline constexpr double kProbabilityEpsilon = 1e-12;

double logistic(double x);

/// Two-unit output: P(Y=i | h) = s(w_i . h) / (s(w_0 . h) + s(w_1 . h)).
///
/// A normalized pair of logistic units rather than a softmax; with
/// w_0 . h = 0 the target probability saturates at 2/3.
std::array<double, 2> output_probability(const NumericArray& weights, std::span<const double> h);

/// Smallest output probability; keeps both classes strictly positive when
/// the exact value underflows a double.
inline constexpr double kMinProbability = std::numeric_limits<double>::min();

/// (P(Y=0), P(Y=1)) from the two logits. Evaluated in log space, so very
/// negative logits do not collapse to 0/0.
std::array<double, 2> normalized_logistic_pair(double a0, double a1);

/// Batched form of `output_probability` with its cache.
struct OutputCache {
  Mat inputs;         // d x B
  Mat logits;         // 2 x B
  Mat probabilities;  // 2 x B, rows P(Y=0) and P(Y=1)
  Vec target;         // P(Y=1 | h) per column
};

/// Returns P(Y=1 | h) for every column of `h`.
Vec output_forward(const NumericArray& weights, const Mat& h, OutputCache* cache);

/// Back-propagates dL/dP(Y=1) per example; accumulates into `weight_grad`,
/// returns dL/dh.
Mat output_backward(const NumericArray& weights, NumericArray& weight_grad,
                    const OutputCache& cache, const Vec& d_target);

struct LossResult {
  double value = 0.0;
  std::vector<double> grad;
};

/// Label-conditioned binary cross-entropy averaged over the batch, with
/// probabilities clamped to [eps, 1 - eps].
LossResult bce_loss(std::span<const double> p, std::span<const int> y);

struct ArrayLoss {
  double value = 0.0;
  NumericArray grad;
};

/// Squared reconstruction error summed over positions and dimensions,
/// averaged over `batch`. Gradient is with respect to `reconstruction`.
ArrayLoss mse_loss(const NumericArray& target, const NumericArray& reconstruction,
                   std::size_t batch = 1);

enum class Mode { Train, Eval };

struct DropoutMask {
  double keep = 1.0;
  Mode mode = Mode::Eval;
  Mat mask;  // entries are 0 or 1/keep; empty means identity
};

/// Inverted dropout: in training each unit survives with probability 1 - p
/// and is scaled by 1 / (1 - p); evaluation is the identity.
Mat dropout(const Mat& x, double p, Mode mode, Rng& rng, DropoutMask* mask);
Mat dropout_backward(const Mat& d_out, const DropoutMask& mask);

struct DropoutResult {
  NumericArray output;
  DropoutMask mask;
};
DropoutResult dropout(const NumericArray& x, double p, Mode mode, Rng& rng);

}  // namespace deeptarget::nn
