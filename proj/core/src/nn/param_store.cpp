#include "deeptarget/nn/param_store.hpp"

#include <cmath>

#include "deeptarget/error.hpp"

namespace deeptarget::nn {

Param& ParamStore::add(const std::string& name, std::vector<std::size_t> shape) {
  if (params_.contains(name)) throw ShapeError("ParamStore: duplicate parameter " + name);
  Param p{NumericArray(shape), NumericArray(shape), true};
  return params_.emplace(name, std::move(p)).first->second;
}

Param& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ShapeError("ParamStore: unknown parameter " + name);
  return it->second;
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ShapeError("ParamStore: unknown parameter " + name);
  return it->second;
}

void ParamStore::erase_prefix(const std::string& prefix) {
  std::erase_if(params_, [&](const auto& kv) { return kv.first.starts_with(prefix); });
}

void ParamStore::zero_grad() {
  for (auto& [name, p] : params_) p.grad.fill(0.0);
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_) n += p.value.size();
  return n;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, p] : params_) out.push_back(name);
  return out;
}

double ParamStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& [name, p] : params_) {
    if (!p.trainable) continue;
    for (double g : p.grad.data()) sq += g * g;
  }
  return std::sqrt(sq);
}

double ParamStore::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (max_norm > 0.0 && norm > max_norm && std::isfinite(norm)) {
    const double scale = max_norm / norm;
    for (auto& [name, p] : params_) {
      if (!p.trainable) continue;
      for (double& g : p.grad.data()) g *= scale;
    }
  }
  return norm;
}

void ParamStore::copy_values_to(ParamStore& dest, const std::string& from_prefix,
                                const std::string& to_prefix) const {
  for (const auto& [name, p] : params_) {
    if (!name.starts_with(from_prefix)) continue;
    const std::string target = to_prefix + name.substr(from_prefix.size());
    Param& d = dest.at(target);
    if (!d.value.same_shape(p.value)) {
      throw ShapeError("ParamStore: shape mismatch copying " + name + " to " + target);
    }
    d.value = p.value;
  }
}

}  // namespace deeptarget::nn
