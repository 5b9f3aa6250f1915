#include "deeptarget/nn/array.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "deeptarget/error.hpp"

namespace deeptarget::nn {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

NumericArray::NumericArray(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

NumericArray::NumericArray(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != element_count(shape_)) {
    throw ShapeError("NumericArray: data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string());
  }
}

NumericArray NumericArray::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("NumericArray::from_rows: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return NumericArray({r, c}, std::move(data));
}

std::size_t NumericArray::rows() const {
  if (shape_.empty()) return 1;
  return shape_[0];
}

std::size_t NumericArray::cols() const {
  if (shape_.size() < 2) return 1;
  return element_count(shape_) / shape_[0];
}

MatMap NumericArray::matrix() {
  return MatMap(data_.data(), static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols()));
}

ConstMatMap NumericArray::matrix() const {
  return ConstMatMap(data_.data(), static_cast<Eigen::Index>(rows()),
                     static_cast<Eigen::Index>(cols()));
}

void NumericArray::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool NumericArray::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string NumericArray::shape_string() const {
  std::string out = "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape_[i]);
  }
  return out + "]";
}

}  // namespace deeptarget::nn
