#pragma once

#include <cstddef>
#include <span>

#include "nnbcd/hyperparams.hpp"
#include "nnbcd/model.hpp"

namespace nnbcd::diagnostics {

/// One row of metrics.csv.
struct IterationRecord {
  std::size_t k = 0;
  ObjectiveBreakdown objective;
  double step_norm_sq = 0.0;  // ||P^k - P^{k-1}||_F^2
  bool descent_ok = true;
  double descent_slack = 0.0;
  double lambda_used = 0.0;
  double train_metric = 0.0;
  double test_metric = 0.0;
  double wall_time = 0.0;
};

struct DescentCheck {
  bool ok = true;
  double slack = 0.0;  // prev - curr - lambda * step_norm_sq
};

/// Sufficient decrease test: curr <= prev - lambda * step_sq + rel_tol * max(1, prev).
DescentCheck check_descent(double prev, double curr, double step_norm_sq, double lambda, double rel_tol = 1e-8);
DescentCheck check_descent(double prev, double curr, double step_norm_sq, const Hyperparams& hp,
                           double rel_tol = 1e-8);

struct RateSummary {
  double cum_step_sq = 0.0;
  double bound = 0.0;        // (L(P^0) - L(P^K)) / lambda
  double avg_step_sq = 0.0;  // cum_step_sq / K
  bool ok = true;            // cum_step_sq <= bound + tol
};

/// Telescoped descent over the first K records. `initial_objective` is L(P^0).
RateSummary rate_summary(std::span<const IterationRecord> records, double initial_objective, double lambda,
                         double tol = 0.0);

/// Squared Frobenius distance over every block (W, U, V, W^MC, b).
double step_norm_sq(const BlockState& prev, const BlockState& curr);

/// Largest Frobenius norm over all blocks of a state.
double max_block_norm(const BlockState& state);

/// Upper-bound surrogate for dist(0, dL(P^k)): delta_bar * ||P^k - P^{k-1}||_F with
/// delta = max{gamma, alpha + rho B, alpha + gamma L_B, 2 rho B + 2 rho B^2, alpha + tau},
/// delta_bar = delta * sqrt(4N). B is the largest block norm of the two iterates.
double stationarity_estimate(const NetworkSpec& spec, const BlockState& prev, const BlockState& curr,
                             const Hyperparams& hp);

double stationarity_constant(const Hyperparams& hp, double block_bound, double activation_lipschitz,
                             std::size_t layers);

}  // namespace nnbcd::diagnostics
