#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "nnbcd/error.hpp"

namespace nnbcd {

/// Row-major dense matrix. Every 2-D quantity in the library (weights,
/// split variables, data) uses this layout.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

using Shape = std::vector<std::size_t>;

std::size_t shape_size(std::span<const std::size_t> shape) noexcept;

/// Shape-tagged row-major array (last index fastest).
class DenseTensor {
 public:
  DenseTensor() = default;
  explicit DenseTensor(Shape shape);
  DenseTensor(Shape shape, std::vector<double> data);

  static DenseTensor from_matrix(const Matrix& m);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }

  double& at(std::initializer_list<std::size_t> index);
  double at(std::initializer_list<std::size_t> index) const;

  std::size_t flat_index(std::span<const std::size_t> index) const;

  /// Copy out as a matrix; requires rank 2.
  Matrix to_matrix() const;
  /// Zero-copy view; requires rank 2.
  ConstMatrixMap as_matrix() const;
  MatrixMap as_matrix();

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

DenseTensor reshape(const DenseTensor& x, Shape new_shape);

/// Output axis k is input axis order[k].
DenseTensor permute(const DenseTensor& x, std::span<const std::size_t> order);

std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> order);

Matrix reshape_matrix(const Matrix& m, Eigen::Index rows, Eigen::Index cols);

}  // namespace nnbcd
