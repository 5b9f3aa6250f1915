#include "deeptarget/nn/adam.hpp"

#include <cmath>

#include "deeptarget/error.hpp"

namespace deeptarget::nn {

void adam_step(ParamStore& store, AdamState& state) {
  for (const auto& [name, p] : store) {
    if (p.trainable && !p.grad.all_finite()) {
      throw NumericError("adam_step: non-finite gradient in '" + name + "' at step " +
                         std::to_string(state.step + 1));
    }
  }
  const AdamConfig& cfg = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& [name, p] : store) {
    if (!p.trainable) continue;
    auto [it, inserted] = state.moments.try_emplace(name);
    AdamMoments& mom = it->second;
    if (inserted || !mom.first.same_shape(p.value)) {
      mom.first = NumericArray(p.value.shape());
      mom.second = NumericArray(p.value.shape());
    }
    auto value = p.value.data();
    auto grad = p.grad.data();
    auto m = mom.first.data();
    auto v = mom.second.data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

}  // namespace deeptarget::nn
