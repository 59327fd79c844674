#pragma once

namespace nnbcd {

/// Penalty and proximal weights of the split objective.
struct Hyperparams {
  double gamma = 1.0;       // V_i = sigma(U_i) penalty
  double rho = 1.0;         // U_i = W_i V_{i-1} penalty
  double tau = 1.0;         // W_i = W_i^MC penalty
  double alpha = 1.0;       // proximal weight
  double lambda_reg = 0.0;  // weight of r_i(W^MC) for the regularized compression kinds

  /// Throws ConfigError unless gamma, rho, tau, alpha > 0 and lambda_reg >= 0.
  void validate() const;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// min{alpha, gamma + rho, tau} / 2: the sufficient-decrease constant when
/// every block is solved exactly.
double descent_lambda(const Hyperparams& hp) noexcept;

/// Constant for the prox-linear V_N path with an L_R-smooth risk:
/// min{alpha/2, (gamma+rho)/2, tau/2, alpha + (gamma - L_R)/2}.
double descent_lambda_proxlinear(const Hyperparams& hp, double risk_lipschitz) noexcept;

}  // namespace nnbcd
