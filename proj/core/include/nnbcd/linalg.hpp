#pragma once

#include <Eigen/Cholesky>

#include "nnbcd/tensor.hpp"

namespace nnbcd {

struct SvdResult {
  Matrix left;      // m x r, orthonormal columns
  Vector values;    // r, non-increasing, >= 0
  Matrix right;     // r x n, orthonormal rows

  Matrix reconstruct() const;
};

/// Cholesky factorization of a symmetric positive-definite matrix with a
/// single diagonal-jitter retry (jitter = 1e-10 * trace(A) / n).
class SpdFactorization {
 public:
  explicit SpdFactorization(const Matrix& a);

  Matrix solve(const Matrix& b) const;
  Eigen::Index size() const noexcept { return n_; }
  bool jittered() const noexcept { return jittered_; }

 private:
  Eigen::Index n_ = 0;
  bool jittered_ = false;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// Solves A X = B for symmetric positive-definite A.
Matrix solve_spd(const Matrix& a, const Matrix& b);

/// Rank-r truncated SVD. Each left singular vector has its largest-magnitude
/// entry made non-negative (the paired right vector flips with it).
SvdResult truncated_svd(const Matrix& m, Eigen::Index rank);

/// Full thin SVD (rank = min(m, n)) under the same sign convention.
SvdResult thin_svd(const Matrix& m);

}  // namespace nnbcd
