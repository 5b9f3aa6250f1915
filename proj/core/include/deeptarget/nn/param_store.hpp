#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "deeptarget/nn/array.hpp"

namespace deeptarget::nn {

/// A trainable tensor and its accumulated gradient.
struct Param {
  NumericArray value;
  NumericArray grad;
  bool trainable = true;
};

/// Named parameters in deterministic (lexicographic) order.
///
/// Gradients accumulate until `zero_grad()` is called; nothing in the
/// library clears them implicitly.
class ParamStore {
 public:
  using Map = std::map<std::string, Param>;

  Param& add(const std::string& name, std::vector<std::size_t> shape);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.contains(name); }
  void erase_prefix(const std::string& prefix);

  void zero_grad();
  std::size_t parameter_count() const;
  std::vector<std::string> names() const;

  /// Global L2 norm over the gradients of trainable parameters.
  double grad_norm() const;
  /// Rescales gradients so the global norm is at most `max_norm`; returns the pre-clip norm.
  double clip_grad_norm(double max_norm);

  /// Copies values of every parameter under `from_prefix` into `to_prefix` of `dest`.
  void copy_values_to(ParamStore& dest, const std::string& from_prefix,
                      const std::string& to_prefix) const;

  Map::iterator begin() { return params_.begin(); }
  Map::iterator end() { return params_.end(); }
  Map::const_iterator begin() const { return params_.begin(); }
  Map::const_iterator end() const { return params_.end(); }
  std::size_t size() const { return params_.size(); }

 private:
  Map params_;
};

}  // namespace deeptarget::nn
