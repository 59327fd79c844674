#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "nnbcd/tensor.hpp"

namespace nnbcd::tt {

/// Factorization of an M x N weight matrix into d row factors and d column
/// factors: M = prod(row_factors), N = prod(col_factors), d >= 2.
///
/// W(i, j) maps to the order-2d tensor index (i1, j1, ..., id, jd) where
/// (i1..id) are the mixed-radix digits of i over row_factors and (j1..jd)
/// those of j over col_factors, most significant first. This ordering is
/// part of the serialized format.
struct Tensorization {
  std::vector<std::size_t> row_factors;
  std::vector<std::size_t> col_factors;

  std::size_t order() const noexcept { return row_factors.size(); }
  std::size_t rows() const noexcept;
  std::size_t cols() const noexcept;
  /// Throws ShapeMismatch if the factor lists are malformed.
  void validate() const;
  void validate_for(std::size_t rows, std::size_t cols) const;

  friend bool operator==(const Tensorization&, const Tensorization&) = default;
};

using RankChain = std::vector<std::size_t>;

/// Core k has shape (r_{k-1}, m_k, n_k, r_k); r_0 = r_d = 1.
struct TTCores {
  std::vector<DenseTensor> cores;

  std::size_t order() const noexcept { return cores.size(); }
  RankChain ranks() const;
  /// Throws InvalidRankChain on boundary ranks != 1 or mismatched neighbours.
  void validate() const;
  void validate_for(const Tensorization& t) const;

  friend bool operator==(const TTCores&, const TTCores&) = default;
};

/// Largest rank chain the tensorization admits.
RankChain max_ranks(const Tensorization& t);

/// Checks the chain structure (length d+1, r_0 = r_d = 1, all >= 1) and
/// clamps interior ranks to their feasible maximum. `clamped` reports
/// whether anything was reduced.
RankChain clamp_ranks(const Tensorization& t, const RankChain& ranks, bool* clamped = nullptr);

/// Reorders W into the interleaved order-2d tensor, flattened as a vector of
/// length M * N in (i1, j1, ..., id, jd) row-major order.
std::vector<double> tensorize(const Matrix& w, const Tensorization& t);
Matrix detensorize(std::span<const double> entries, const Tensorization& t);

/// Left-to-right sequential truncated SVD. Ranks above the feasible maximum
/// are clamped with a warning.
TTCores tt_svd(const Matrix& w, const Tensorization& t, const RankChain& ranks);

/// Dense M x N matrix represented by the cores.
Matrix tt_reconstruct(const TTCores& cores, const Tensorization& t);

/// W * X for an N x n batch X, contracting core by core without forming W.
Matrix tt_forward(const TTCores& cores, const Tensorization& t, const Matrix& x);

/// Sum of core element counts, sum_k r_{k-1} m_k n_k r_k.
std::size_t tt_param_count(const TTCores& cores);
std::size_t tt_param_count(const Tensorization& t, const RankChain& ranks);

/// CSV dump. Header line: `d,<d>,ranks,<r0;..;rd>,rows,<m1;..>,cols,<n1;..>`,
/// then one line per core holding its entries in row-major order.
void write_csv(std::ostream& os, const TTCores& cores, const Tensorization& t);
std::pair<TTCores, Tensorization> read_csv(std::istream& is);

}  // namespace nnbcd::tt
