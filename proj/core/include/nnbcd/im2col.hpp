#pragma once

#include <cstddef>

#include "nnbcd/tensor.hpp"

namespace nnbcd {

/// Unfolds a W x H x C input into a (W-l+1)(H-l+1) x l*l*C patch matrix.
/// Row k = x * (H-l+1) + y holds the l x l x C window anchored at (x, y),
/// laid out as (i, j, c) with c fastest, so that `im2col(X, l) * kernel_matrix(K)`
/// is the valid (unpadded, unit-stride) convolution of X with K.
Matrix im2col(const DenseTensor& input, std::size_t kernel_size);

/// Reshapes an l x l x C x S kernel tensor to the l*l*C x S matrix form.
Matrix kernel_matrix(const DenseTensor& kernel);

/// Inverse of `kernel_matrix`.
DenseTensor kernel_tensor(const Matrix& k, std::size_t kernel_size, std::size_t channels);

/// Reshapes the (W'H') x S product back to a W' x H' x S tensor.
DenseTensor conv_output_tensor(const Matrix& y, std::size_t out_width, std::size_t out_height);

}  // namespace nnbcd
