#include "nnbcd/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace nnbcd::diagnostics {

DescentCheck check_descent(double prev, double curr, double step_norm_sq, double lambda, double rel_tol) {
  DescentCheck out;
  out.slack = prev - curr - lambda * step_norm_sq;
  out.ok = out.slack >= -rel_tol * std::max(1.0, std::abs(prev));
  return out;
}

DescentCheck check_descent(double prev, double curr, double step_norm_sq, const Hyperparams& hp, double rel_tol) {
  return check_descent(prev, curr, step_norm_sq, descent_lambda(hp), rel_tol);
}

RateSummary rate_summary(std::span<const IterationRecord> records, double initial_objective, double lambda,
                         double tol) {
  RateSummary out;
  if (records.empty()) return out;
  for (const auto& r : records) out.cum_step_sq += r.step_norm_sq;
  out.bound = (initial_objective - records.back().objective.total) / lambda;
  out.avg_step_sq = out.cum_step_sq / static_cast<double>(records.size());
  out.ok = out.cum_step_sq <= out.bound + tol;
  return out;
}

double step_norm_sq(const BlockState& prev, const BlockState& curr) {
  if (prev.layers.size() != curr.layers.size()) throw Error(ErrorCode::ShapeMismatch, "states differ in depth");
  double total = 0.0;
  for (std::size_t i = 0; i < prev.layers.size(); ++i) {
    const auto& a = prev.layers[i];
    const auto& b = curr.layers[i];
    total += (a.w - b.w).squaredNorm() + (a.u - b.u).squaredNorm() + (a.v - b.v).squaredNorm() +
             (a.mc.dense - b.mc.dense).squaredNorm();
    if (a.b.size() > 0) total += (a.b - b.b).squaredNorm();
  }
  return total;
}

double max_block_norm(const BlockState& state) {
  double best = 0.0;
  for (const auto& l : state.layers) {
    best = std::max({best, l.w.norm(), l.u.norm(), l.v.norm(), l.mc.dense.norm()});
    if (l.b.size() > 0) best = std::max(best, l.b.norm());
  }
  return best;
}

double stationarity_constant(const Hyperparams& hp, double block_bound, double activation_lipschitz,
                             std::size_t layers) {
  const double b = block_bound;
  const double delta = std::max({hp.gamma, hp.alpha + hp.rho * b, hp.alpha + hp.gamma * activation_lipschitz,
                                 2.0 * hp.rho * b + 2.0 * hp.rho * b * b, hp.alpha + hp.tau});
  return delta * std::sqrt(4.0 * static_cast<double>(layers));
}

double stationarity_estimate(const NetworkSpec& spec, const BlockState& prev, const BlockState& curr,
                             const Hyperparams& hp) {
  double lipschitz = 1.0;
  for (const auto& a : spec.activations) lipschitz = std::max(lipschitz, a.lipschitz());
  const double bound = std::max(max_block_norm(prev), max_block_norm(curr));
  return stationarity_constant(hp, bound, lipschitz, spec.num_layers()) * std::sqrt(step_norm_sq(prev, curr));
}

}  // namespace nnbcd::diagnostics
