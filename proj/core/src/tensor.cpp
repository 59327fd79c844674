#include "nnbcd/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <string>

namespace nnbcd {

namespace {

std::string shape_str(std::span<const std::size_t> shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

void check_extents(const Shape& shape) {
  if (std::any_of(shape.begin(), shape.end(), [](std::size_t e) { return e == 0; }))
    throw Error(ErrorCode::ShapeMismatch, "zero extent in shape " + shape_str(shape));
}

}  // namespace

std::size_t shape_size(std::span<const std::size_t> shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

DenseTensor::DenseTensor(Shape shape) : shape_(std::move(shape)) {
  check_extents(shape_);
  data_.assign(shape_size(shape_), 0.0);
}

DenseTensor::DenseTensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_extents(shape_);
  if (shape_size(shape_) != data_.size())
    throw Error(ErrorCode::ShapeMismatch, "shape " + shape_str(shape_) + " holds " +
                                              std::to_string(shape_size(shape_)) + " entries, got " +
                                              std::to_string(data_.size()));
}

DenseTensor DenseTensor::from_matrix(const Matrix& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return DenseTensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                     std::move(data));
}

std::size_t DenseTensor::flat_index(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size())
    throw Error(ErrorCode::ShapeMismatch, "index rank does not match tensor rank");
  std::size_t flat = 0;
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= shape_[k]) throw Error(ErrorCode::ShapeMismatch, "index out of range");
    flat = flat * shape_[k] + index[k];
  }
  return flat;
}

double& DenseTensor::at(std::initializer_list<std::size_t> index) {
  return data_[flat_index(std::span(index.begin(), index.size()))];
}

double DenseTensor::at(std::initializer_list<std::size_t> index) const {
  return data_[flat_index(std::span(index.begin(), index.size()))];
}

Matrix DenseTensor::to_matrix() const { return as_matrix(); }

ConstMatrixMap DenseTensor::as_matrix() const {
  if (shape_.size() != 2) throw Error(ErrorCode::ShapeMismatch, "matrix view needs rank 2");
  return ConstMatrixMap(data_.data(), static_cast<Eigen::Index>(shape_[0]),
                        static_cast<Eigen::Index>(shape_[1]));
}

MatrixMap DenseTensor::as_matrix() {
  if (shape_.size() != 2) throw Error(ErrorCode::ShapeMismatch, "matrix view needs rank 2");
  return MatrixMap(data_.data(), static_cast<Eigen::Index>(shape_[0]),
                   static_cast<Eigen::Index>(shape_[1]));
}

DenseTensor reshape(const DenseTensor& x, Shape new_shape) {
  if (shape_size(new_shape) != x.size())
    throw Error(ErrorCode::ShapeMismatch,
                "cannot reshape " + shape_str(x.shape()) + " to " + shape_str(new_shape));
  return DenseTensor(std::move(new_shape), std::vector<double>(x.data().begin(), x.data().end()));
}

std::vector<std::size_t> inverse_permutation(std::span<const std::size_t> order) {
  std::vector<std::size_t> inv(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) inv[order[k]] = k;
  return inv;
}

DenseTensor permute(const DenseTensor& x, std::span<const std::size_t> order) {
  const std::size_t d = x.rank();
  if (order.size() != d) throw Error(ErrorCode::ShapeMismatch, "axis order has wrong length");
  std::vector<bool> seen(d, false);
  for (auto a : order) {
    if (a >= d || seen[a]) throw Error(ErrorCode::ShapeMismatch, "axis order is not a permutation");
    seen[a] = true;
  }

  Shape out_shape(d);
  for (std::size_t k = 0; k < d; ++k) out_shape[k] = x.shape()[order[k]];

  // Stride of each output axis inside the input buffer.
  std::vector<std::size_t> in_strides(d, 1);
  for (std::size_t k = d; k-- > 1;) in_strides[k - 1] = in_strides[k] * x.shape()[k];
  std::vector<std::size_t> strides(d);
  for (std::size_t k = 0; k < d; ++k) strides[k] = in_strides[order[k]];

  DenseTensor out(out_shape);
  std::vector<std::size_t> idx(d, 0);
  std::size_t src = 0;
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    out[flat] = x[src];
    for (std::size_t k = d; k-- > 0;) {
      if (++idx[k] < out_shape[k]) {
        src += strides[k];
        break;
      }
      src -= strides[k] * (out_shape[k] - 1);
      idx[k] = 0;
    }
  }
  return out;
}

Matrix reshape_matrix(const Matrix& m, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != m.size()) throw Error(ErrorCode::ShapeMismatch, "matrix reshape changes size");
  return ConstMatrixMap(m.data(), rows, cols);
}

}  // namespace nnbcd
