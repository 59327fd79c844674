#include "nnbcd/compress.hpp"

#include <cmath>
#include <string>

#include "nnbcd/log.hpp"
#include "nnbcd/prox.hpp"

namespace nnbcd {

CompressionSpec CompressionSpec::l0_constrained(std::size_t beta) {
  CompressionSpec s;
  s.kind = CompressionKind::L0Constrained;
  s.beta = beta;
  return s;
}

CompressionSpec CompressionSpec::l0_reg() {
  CompressionSpec s;
  s.kind = CompressionKind::L0Reg;
  return s;
}

CompressionSpec CompressionSpec::l1_reg() {
  CompressionSpec s;
  s.kind = CompressionKind::L1Reg;
  return s;
}

CompressionSpec CompressionSpec::tensor_train(tt::Tensorization t, tt::RankChain ranks) {
  CompressionSpec s;
  s.kind = CompressionKind::TT;
  s.tensorization = std::move(t);
  s.ranks = std::move(ranks);
  return s;
}

void CompressionSpec::validate_for(std::size_t rows, std::size_t cols) {
  switch (kind) {
    case CompressionKind::L0Constrained:
      if (beta < 1 || beta > rows * cols)
        throw Error(ErrorCode::BetaOutOfRange, "beta=" + std::to_string(beta) + " outside [1, " +
                                                   std::to_string(rows * cols) + "]");
      break;
    case CompressionKind::TT: {
      tensorization.validate_for(rows, cols);
      bool clamped = false;
      auto r = tt::clamp_ranks(tensorization, ranks, &clamped);
      if (clamped) log_warning("TT rank chain clamped to its feasible maximum");
      ranks = std::move(r);
      break;
    }
    default:
      break;
  }
}

std::string_view to_string(CompressionKind kind) noexcept {
  switch (kind) {
    case CompressionKind::None: return "none";
    case CompressionKind::TT: return "tt";
    case CompressionKind::L0Constrained: return "l0_constrained";
    case CompressionKind::L0Reg: return "l0_reg";
    case CompressionKind::L1Reg: return "l1_reg";
  }
  return "none";
}

std::size_t beta_for_keep_fraction(double keep, std::size_t count) {
  const double x = keep * static_cast<double>(count);
  const double nearest = std::round(x);
  const double b = std::abs(x - nearest) <= 1e-9 * std::max(1.0, x) ? nearest : std::ceil(x);
  return static_cast<std::size_t>(std::max(1.0, b));
}

namespace {

double sub_objective(const Matrix& w, const Matrix& m, const Matrix& prev, double tau, double alpha) {
  return 0.5 * tau * (w - m).squaredNorm() + 0.5 * alpha * (m - prev).squaredNorm();
}

CompressedWeight update_impl(const Matrix& w, const CompressedWeight* prev, const CompressionSpec& spec, double tau,
                             double alpha, double lambda_reg) {
  Matrix z = alpha > 0.0 && prev ? Matrix((tau * w + alpha * prev->dense) / (tau + alpha)) : w;
  CompressedWeight out;
  switch (spec.kind) {
    case CompressionKind::None:
      out.dense = std::move(z);
      break;
    case CompressionKind::L1Reg: {
      const double t = lambda_reg / (tau + alpha);
      out.dense = z.unaryExpr([t](double v) { return prox::soft_threshold(v, t); });
      break;
    }
    case CompressionKind::L0Reg: {
      const double t = std::sqrt(2.0 * lambda_reg / (tau + alpha));
      out.dense = z.unaryExpr([t](double v) { return prox::hard_threshold(v, t); });
      break;
    }
    case CompressionKind::L0Constrained: {
      std::vector<std::size_t> scratch;
      prox::project_topk_inplace(std::span<double>(z.data(), static_cast<std::size_t>(z.size())), spec.beta, scratch);
      out.dense = std::move(z);
      break;
    }
    case CompressionKind::TT: {
      auto cores = tt::tt_svd(z, spec.tensorization, spec.ranks);
      out.dense = tt::tt_reconstruct(cores, spec.tensorization);
      out.cores = std::move(cores);
      if (spec.descent_guard && alpha > 0.0 && prev && prev->cores &&
          sub_objective(w, out.dense, prev->dense, tau, alpha) > sub_objective(w, prev->dense, prev->dense, tau, alpha))
        return *prev;
      break;
    }
  }
  return out;
}

}  // namespace

CompressedWeight update_mc(const Matrix& w, const CompressedWeight& prev, const CompressionSpec& spec,
                           const Hyperparams& hp) {
  if (prev.dense.rows() != w.rows() || prev.dense.cols() != w.cols())
    throw Error(ErrorCode::ShapeMismatch, "W and previous W^MC differ in shape");
  return update_impl(w, &prev, spec, hp.tau, hp.alpha, hp.lambda_reg);
}

CompressedWeight project_mc(const Matrix& w, const CompressionSpec& spec, double tau, double lambda_reg) {
  return update_impl(w, nullptr, spec, tau, 0.0, lambda_reg);
}

double mc_regularizer(const Matrix& m, const CompressionSpec& spec, double lambda_reg) {
  switch (spec.kind) {
    case CompressionKind::L1Reg: return lambda_reg * m.cwiseAbs().sum();
    case CompressionKind::L0Reg: return lambda_reg * static_cast<double>(count_nonzeros(m));
    default: return 0.0;
  }
}

void check_feasible(const CompressedWeight& m, const CompressionSpec& spec) {
  if (spec.kind == CompressionKind::L0Constrained) {
    const auto nnz = count_nonzeros(m.dense);
    if (nnz > spec.beta)
      throw Error(ErrorCode::InfeasibleCompressedWeight,
                  std::to_string(nnz) + " nonzeros exceed beta=" + std::to_string(spec.beta));
  } else if (spec.kind == CompressionKind::TT) {
    if (!m.cores) throw Error(ErrorCode::InfeasibleCompressedWeight, "TT layer without cores");
    const Matrix r = tt::tt_reconstruct(*m.cores, spec.tensorization);
    const double scale = std::max(1.0, r.norm());
    if ((r - m.dense).norm() > 1e-8 * scale)
      throw Error(ErrorCode::InfeasibleCompressedWeight, "dense W^MC does not match its TT cores");
    const auto ranks = m.cores->ranks();
    for (std::size_t k = 0; k < ranks.size(); ++k)
      if (ranks[k] > spec.ranks.at(k))
        throw Error(ErrorCode::InfeasibleCompressedWeight, "TT core rank exceeds the configured chain");
  }
}

std::size_t compressed_param_count(const CompressionSpec& spec, std::size_t rows, std::size_t cols) {
  switch (spec.kind) {
    case CompressionKind::TT: return tt::tt_param_count(spec.tensorization, spec.ranks);
    case CompressionKind::L0Constrained: return spec.beta;
    default: return rows * cols;
  }
}

double compression_ratio(std::span<const CompressionSpec> specs,
                         std::span<const std::pair<std::size_t, std::size_t>> layer_shapes) {
  if (specs.size() != layer_shapes.size())
    throw Error(ErrorCode::ShapeMismatch, "one compression spec per layer required");
  std::size_t kept = 0, total = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto [rows, cols] = layer_shapes[i];
    kept += compressed_param_count(specs[i], rows, cols);
    total += rows * cols;
  }
  return total == 0 ? 1.0 : static_cast<double>(kept) / static_cast<double>(total);
}

std::size_t count_nonzeros(const Matrix& m) noexcept {
  std::size_t n = 0;
  for (Eigen::Index i = 0; i < m.size(); ++i) n += m.data()[i] != 0.0;
  return n;
}

double sparsity(std::span<const Matrix> weights) {
  std::size_t zeros = 0, total = 0;
  for (const auto& w : weights) {
    total += static_cast<std::size_t>(w.size());
    zeros += static_cast<std::size_t>(w.size()) - count_nonzeros(w);
  }
  return total == 0 ? 0.0 : static_cast<double>(zeros) / static_cast<double>(total);
}

}  // namespace nnbcd
