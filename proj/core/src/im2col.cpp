#include "nnbcd/im2col.hpp"

#include <string>

namespace nnbcd {

Matrix im2col(const DenseTensor& input, std::size_t kernel_size) {
  if (input.rank() != 3) throw Error(ErrorCode::ShapeMismatch, "im2col expects a W x H x C tensor");
  const std::size_t width = input.extent(0);
  const std::size_t height = input.extent(1);
  const std::size_t channels = input.extent(2);
  if (kernel_size == 0 || kernel_size > width || kernel_size > height)
    throw Error(ErrorCode::KernelTooLarge, "kernel size " + std::to_string(kernel_size) +
                                               " does not fit a " + std::to_string(width) + "x" +
                                               std::to_string(height) + " input");

  const std::size_t out_w = width - kernel_size + 1;
  const std::size_t out_h = height - kernel_size + 1;
  const std::size_t patch = kernel_size * kernel_size * channels;
  Matrix cols(static_cast<Eigen::Index>(out_w * out_h), static_cast<Eigen::Index>(patch));

  const auto src = input.data();
  for (std::size_t x = 0; x < out_w; ++x) {
    for (std::size_t y = 0; y < out_h; ++y) {
      double* row = cols.data() + (x * out_h + y) * patch;
      for (std::size_t i = 0; i < kernel_size; ++i) {
        for (std::size_t j = 0; j < kernel_size; ++j) {
          const double* pixel = src.data() + ((x + i) * height + (y + j)) * channels;
          std::copy(pixel, pixel + channels, row);
          row += channels;
        }
      }
    }
  }
  return cols;
}

Matrix kernel_matrix(const DenseTensor& kernel) {
  if (kernel.rank() != 4 || kernel.extent(0) != kernel.extent(1))
    throw Error(ErrorCode::ShapeMismatch, "kernel must be l x l x C x S");
  const auto rows = kernel.extent(0) * kernel.extent(1) * kernel.extent(2);
  return ConstMatrixMap(kernel.data().data(), static_cast<Eigen::Index>(rows),
                        static_cast<Eigen::Index>(kernel.extent(3)));
}

DenseTensor kernel_tensor(const Matrix& k, std::size_t kernel_size, std::size_t channels) {
  if (static_cast<std::size_t>(k.rows()) != kernel_size * kernel_size * channels)
    throw Error(ErrorCode::ShapeMismatch, "kernel matrix rows != l*l*C");
  return DenseTensor({kernel_size, kernel_size, channels, static_cast<std::size_t>(k.cols())},
                     std::vector<double>(k.data(), k.data() + k.size()));
}

DenseTensor conv_output_tensor(const Matrix& y, std::size_t out_width, std::size_t out_height) {
  if (static_cast<std::size_t>(y.rows()) != out_width * out_height)
    throw Error(ErrorCode::ShapeMismatch, "output rows != W' * H'");
  return DenseTensor({out_width, out_height, static_cast<std::size_t>(y.cols())},
                     std::vector<double>(y.data(), y.data() + y.size()));
}

}  // namespace nnbcd
