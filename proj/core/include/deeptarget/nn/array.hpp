#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace deeptarget::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowMajorMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMajorMat>;
using ConstMatMap = Eigen::Map<const RowMajorMat>;

/// Dense row-major array of doubles tagged with its shape.
///
/// Rank 1 arrays are treated as column vectors and rank 2 arrays as
/// matrices when viewed through `matrix()`.
class NumericArray {
 public:
  NumericArray() = default;
  explicit NumericArray(std::vector<std::size_t> shape, double fill = 0.0);
  NumericArray(std::vector<std::size_t> shape, std::vector<double> data);

  static NumericArray from_rows(std::initializer_list<std::initializer_list<double>> rows);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

  /// Rows and columns of the matrix view (rank 1 -> n x 1).
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  MatMap matrix();
  ConstMatMap matrix() const;

  void fill(double value);
  bool all_finite() const;
  bool same_shape(const NumericArray& other) const { return shape_ == other.shape_; }
  std::string shape_string() const;

  friend bool operator==(const NumericArray&, const NumericArray&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace deeptarget::nn
