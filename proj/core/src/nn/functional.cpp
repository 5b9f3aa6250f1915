#include "deeptarget/nn/functional.hpp"

#include <algorithm>
#include <cmath>

#include "deeptarget/error.hpp"

namespace deeptarget::nn {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace {

double log_logistic(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

}  // namespace

std::array<double, 2> normalized_logistic_pair(double a0, double a1) {
  // s1 / (s0 + s1) = logistic(log s1 - log s0)
  const double d = log_logistic(a1) - log_logistic(a0);
  return {std::max(logistic(-d), kMinProbability), std::max(logistic(d), kMinProbability)};
}

std::array<double, 2> output_probability(const NumericArray& weights, std::span<const double> h) {
  if (weights.rows() != 2 || weights.cols() != h.size()) {
    throw ShapeError("output_probability: weights " + weights.shape_string() +
                     " incompatible with h of length " + std::to_string(h.size()));
  }
  std::array<double, 2> a{};
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < h.size(); ++j) a[i] += weights.at(i, j) * h[j];
  }
  return normalized_logistic_pair(a[0], a[1]);
}

Vec output_forward(const NumericArray& weights, const Mat& h, OutputCache* cache) {
  if (weights.rows() != 2 || static_cast<Eigen::Index>(weights.cols()) != h.rows()) {
    throw ShapeError("output_forward: weights " + weights.shape_string() +
                     " incompatible with input width " + std::to_string(h.rows()));
  }
  Mat logits = weights.matrix() * h;
  Mat probs(2, h.cols());
  for (Eigen::Index b = 0; b < h.cols(); ++b) {
    const auto p = normalized_logistic_pair(logits(0, b), logits(1, b));
    probs(0, b) = p[0];
    probs(1, b) = p[1];
  }
  Vec target = probs.row(1).transpose();
  if (cache) {
    cache->inputs = h;
    cache->logits = std::move(logits);
    cache->probabilities = std::move(probs);
    cache->target = target;
  }
  return target;
}

Mat output_backward(const NumericArray& weights, NumericArray& weight_grad,
                    const OutputCache& cache, const Vec& d_target) {
  // dp1/da1 = p0 p1 s(-a1), dp1/da0 = -p0 p1 s(-a0)
  const Eigen::Index n = cache.inputs.cols();
  Mat d_logits(2, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    const double scale = cache.probabilities(0, b) * cache.probabilities(1, b) * d_target(b);
    d_logits(0, b) = -scale * logistic(-cache.logits(0, b));
    d_logits(1, b) = scale * logistic(-cache.logits(1, b));
  }
  weight_grad.matrix().noalias() += d_logits * cache.inputs.transpose();
  return weights.matrix().transpose() * d_logits;
}

LossResult bce_loss(std::span<const double> p, std::span<const int> y) {
  if (p.size() != y.size() || p.empty()) throw ShapeError("bce_loss: size mismatch or empty batch");
  const double n = static_cast<double>(p.size());
  LossResult out;
  out.grad.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
    const double label = static_cast<double>(y[i]);
    out.value -= label * std::log(q) + (1.0 - label) * std::log(1.0 - q);
    out.grad[i] = (q - label) / (n * q * (1.0 - q));
  }
  out.value /= n;
  return out;
}

ArrayLoss mse_loss(const NumericArray& target, const NumericArray& reconstruction,
                   std::size_t batch) {
  if (!target.same_shape(reconstruction)) {
    throw ShapeError("mse_loss: shape " + target.shape_string() + " vs " +
                     reconstruction.shape_string());
  }
  if (batch == 0) throw ShapeError("mse_loss: batch must be >= 1");
  const double scale = 1.0 / static_cast<double>(batch);
  ArrayLoss out{0.0, NumericArray(target.shape())};
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double diff = reconstruction[i] - target[i];
    out.value += diff * diff;
    out.grad[i] = 2.0 * diff * scale;
  }
  out.value *= scale;
  return out;
}

Mat dropout(const Mat& x, double p, Mode mode, Rng& rng, DropoutMask* mask) {
  if (!(p >= 0.0 && p < 1.0)) throw ShapeError("dropout: probability must lie in [0, 1)");
  DropoutMask local;
  DropoutMask& m = mask ? *mask : local;
  m.keep = 1.0 - p;
  m.mode = mode;
  m.mask.resize(0, 0);
  if (mode == Mode::Eval || p == 0.0) return x;
  const double scale = 1.0 / m.keep;
  m.mask.resize(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      m.mask(i, j) = uniform_unit(rng) < p ? 0.0 : scale;
    }
  }
  return x.cwiseProduct(m.mask);
}

Mat dropout_backward(const Mat& d_out, const DropoutMask& mask) {
  if (mask.mask.size() == 0) return d_out;
  return d_out.cwiseProduct(mask.mask);
}

DropoutResult dropout(const NumericArray& x, double p, Mode mode, Rng& rng) {
  DropoutResult out;
  const Mat in = x.matrix();
  const Mat y = dropout(in, p, mode, rng, &out.mask);
  out.output = NumericArray(x.shape());
  out.output.matrix() = y;
  return out;
}

}  // namespace deeptarget::nn
