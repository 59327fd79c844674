#include "nnbcd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SVD>

namespace nnbcd {

Matrix SvdResult::reconstruct() const { return left * values.asDiagonal() * right; }

SpdFactorization::SpdFactorization(const Matrix& a) : n_(a.rows()) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::ShapeMismatch, "solve_spd needs a square matrix");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw Error(ErrorCode::NotPositiveDefinite, "matrix is not symmetric within 1e-10");

  Eigen::MatrixXd work = a;
  llt_.compute(work);
  if (llt_.info() == Eigen::Success) return;

  const double jitter = 1e-10 * std::abs(a.trace()) / static_cast<double>(std::max<Eigen::Index>(n_, 1));
  work.diagonal().array() += jitter;
  llt_.compute(work);
  if (llt_.info() != Eigen::Success)
    throw Error(ErrorCode::NotPositiveDefinite,
                "Cholesky failed after jitter retry (n=" + std::to_string(n_) + ")");
  jittered_ = true;
}

Matrix SpdFactorization::solve(const Matrix& b) const {
  if (b.rows() != n_) throw Error(ErrorCode::ShapeMismatch, "right-hand side row count mismatch");
  Eigen::MatrixXd x = llt_.solve(Eigen::MatrixXd(b));
  return x;
}

Matrix solve_spd(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw Error(ErrorCode::ShapeMismatch, "solve_spd: rows(A) != rows(B)");
  return SpdFactorization(a).solve(b);
}

namespace {

SvdResult svd_impl(const Matrix& m, Eigen::Index rank) {
  const Eigen::Index k = std::min(m.rows(), m.cols());
  if (rank < 1 || rank > k)
    throw Error(ErrorCode::RankTooLarge, "rank " + std::to_string(rank) + " outside [1, " +
                                             std::to_string(k) + "]");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(m), Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdResult out;
  out.left = svd.matrixU().leftCols(rank);
  out.values = svd.singularValues().head(rank);
  out.right = svd.matrixV().leftCols(rank).transpose();

  for (Eigen::Index c = 0; c < rank; ++c) {
    Eigen::Index arg = 0;
    out.left.col(c).cwiseAbs().maxCoeff(&arg);
    if (out.left(arg, c) < 0.0) {
      out.left.col(c) *= -1.0;
      out.right.row(c) *= -1.0;
    }
  }
  return out;
}

}  // namespace

SvdResult truncated_svd(const Matrix& m, Eigen::Index rank) { return svd_impl(m, rank); }

SvdResult thin_svd(const Matrix& m) { return svd_impl(m, std::min(m.rows(), m.cols())); }

}  // namespace nnbcd
