#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "nnbcd/hyperparams.hpp"
#include "nnbcd/tensor.hpp"
#include "nnbcd/tt.hpp"

namespace nnbcd {

enum class CompressionKind { None, TT, L0Constrained, L0Reg, L1Reg };

struct CompressionSpec {
  CompressionKind kind = CompressionKind::None;
  tt::Tensorization tensorization;  // TT only
  tt::RankChain ranks;              // TT only
  std::size_t beta = 0;             // L0Constrained only: nonzeros kept
  /// TT only: keep the previous cores when the TT-SVD surrogate would raise
  /// the W^MC sub-objective.
  bool descent_guard = true;

  static CompressionSpec none() { return {}; }
  static CompressionSpec l0_constrained(std::size_t beta);
  static CompressionSpec l0_reg();
  static CompressionSpec l1_reg();
  static CompressionSpec tensor_train(tt::Tensorization t, tt::RankChain ranks);

  /// Validates against an out x in weight; clamps TT ranks to feasible values.
  void validate_for(std::size_t rows, std::size_t cols);
};

std::string_view to_string(CompressionKind kind) noexcept;

/// Number of nonzeros kept when a fraction `keep` of `count` weights survives,
/// i.e. ceil(keep * count) with float noise around integers removed.
std::size_t beta_for_keep_fraction(double keep, std::size_t count);

/// W^MC in both dense and native form; `cores` is set for TT layers.
struct CompressedWeight {
  Matrix dense;
  std::optional<tt::TTCores> cores;
};

/// Closed-form W^MC block update: argmin r(M) + tau/2 ||W - M||^2 + alpha/2 ||M - M_prev||^2
/// subject to the compression constraint. TT uses the TT-SVD of the blend as a surrogate.
CompressedWeight update_mc(const Matrix& w, const CompressedWeight& prev, const CompressionSpec& spec,
                           const Hyperparams& hp);

/// Pure projection of W (no proximal pull): the update with alpha = 0.
CompressedWeight project_mc(const Matrix& w, const CompressionSpec& spec, double tau, double lambda_reg);

/// r_i(M): lambda * ||M||_1 or lambda * ||M||_0 for the regularized kinds, else 0.
double mc_regularizer(const Matrix& m, const CompressionSpec& spec, double lambda_reg);

/// Throws InfeasibleCompressedWeight if `m` violates the layer's constraint.
void check_feasible(const CompressedWeight& m, const CompressionSpec& spec);

/// Parameter count of one layer after compression.
std::size_t compressed_param_count(const CompressionSpec& spec, std::size_t rows, std::size_t cols);

/// sum(compressed counts) / sum(dense counts); layer_shapes are (rows, cols).
double compression_ratio(std::span<const CompressionSpec> specs,
                         std::span<const std::pair<std::size_t, std::size_t>> layer_shapes);

/// Exact-zero count over total count across all matrices.
double sparsity(std::span<const Matrix> weights);

std::size_t count_nonzeros(const Matrix& m) noexcept;

}  // namespace nnbcd
