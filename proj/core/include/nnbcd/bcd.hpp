#pragma once

#include <cstddef>
#include <memory>
#include <optional>

#include "nnbcd/linalg.hpp"
#include "nnbcd/model.hpp"

// Closed-form block updates of the backward Gauss-Seidel sweep. Layer
// indices are 0-based: layer i owns W_{i+1}, U_{i+1}, V_{i+1} in 1-based
// notation, and its input is state.layer_input(i).
namespace nnbcd::bcd {

/// Exact V_N minimizer. Squared loss (||v - y||^2, 1/n in R_n):
///   V_N = ((2/n) Y + gamma U_N + alpha V_N^prev) / (2/n + gamma + alpha).
/// Hinge loss (scalar output) goes through the hinge prox elementwise.
Matrix update_v_last(const NetworkSpec& spec, const BlockState& state, const Matrix& y, const Hyperparams& hp);

/// Prox-linear V_N step for a differentiable risk with gradient `grad` at V_N^prev:
///   V_N = (gamma U_N + alpha V_N^prev - grad) / (gamma + alpha).
Matrix update_v_last_proxlinear(const Matrix& u_last, const Matrix& v_prev, const Matrix& grad, const Hyperparams& hp);

/// Gradient of the squared-loss risk (1/n)||V - Y||^2.
Matrix squared_risk_gradient(const Matrix& v, const Matrix& y);

/// Hidden V_i: solves (gamma I + rho W^T W) V = gamma sigma(U_i) + rho W^T (U_{i+1} - b 1^T)
/// using the already-updated W, U, b of layer i + 1.
Matrix update_v_mid(std::size_t layer, const NetworkSpec& spec, const BlockState& state, const Hyperparams& hp);

/// U_N = (gamma V_N + rho (W_N V_{N-1} + b)) / (gamma + rho).
Matrix update_u_last(const BlockState& state, const Hyperparams& hp);

/// Hidden U_i through the ReLU / leaky-ReLU prox: merges the rho and alpha
/// quadratics into one centred at (rho c + alpha U_prev) / (rho + alpha).
Matrix update_u_mid(std::size_t layer, const NetworkSpec& spec, const BlockState& state, const Hyperparams& hp);

/// W_i solving W (rho V V^T + tau I) = rho (U - b 1^T) V^T + tau W^MC.
/// `system`, when given, must factor rho V V^T + tau I for this layer's input.
Matrix update_w(std::size_t layer, const BlockState& state, const Hyperparams& hp,
                const SpdFactorization* system = nullptr);

/// b_i = row mean of U_i - W_i V_{i-1}.
Vector update_bias(std::size_t layer, const BlockState& state);

/// Convolution kernel in matrix form: (rho P^T P + tau I) K = rho P^T U + tau K^MC,
/// where P is the im2col patch matrix of the (fixed) layer input.
Matrix update_kernel(const Matrix& patches, const Matrix& u, const Matrix& k_mc, const Hyperparams& hp,
                     const SpdFactorization* system = nullptr);

/// Input-layer convolution with cached patches and normal-equation factor.
class ConvKernelBlock {
 public:
  ConvKernelBlock(Matrix patches, const Hyperparams& hp);
  Matrix update(const Matrix& u, const Matrix& k_mc, const Hyperparams& hp) const;
  const Matrix& patches() const noexcept { return patches_; }

 private:
  Matrix patches_;
  SpdFactorization system_;
};

struct SweepTimings {
  double v = 0.0;
  double u = 0.0;
  double w = 0.0;
  double b = 0.0;
  double mc = 0.0;
  double total() const noexcept { return v + u + w + b + mc; }
};

/// Bytes held by the split variables plus one sweep snapshot.
std::size_t estimate_memory_bytes(const NetworkSpec& spec, std::size_t samples);

/// Runs full-batch sweeps for a fixed spec, data and hyperparameters. The
/// first layer's W system only depends on X, so it is factored once.
class Engine {
 public:
  Engine(NetworkSpec spec, Hyperparams hp, std::shared_ptr<const Matrix> x, std::shared_ptr<const Matrix> y);

  /// One sweep V_N, U_N, W_N, [b_N], W_N^MC, then the same for i = N-1 .. 1.
  /// On error the state is left as it was before the call.
  SweepTimings sweep(BlockState& state) const;

  const NetworkSpec& spec() const noexcept { return spec_; }
  const Hyperparams& hyperparams() const noexcept { return hp_; }
  const Matrix& x() const noexcept { return *x_; }
  const Matrix& y() const noexcept { return *y_; }
  std::shared_ptr<const Matrix> shared_x() const noexcept { return x_; }

 private:
  NetworkSpec spec_;
  Hyperparams hp_;
  std::shared_ptr<const Matrix> x_;
  std::shared_ptr<const Matrix> y_;
  std::optional<SpdFactorization> input_system_;
};

/// Single sweep without caching; convenience for tests and small problems.
SweepTimings sweep(const NetworkSpec& spec, BlockState& state, const Matrix& y, const Hyperparams& hp);

}  // namespace nnbcd::bcd
