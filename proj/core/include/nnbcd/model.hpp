#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "nnbcd/compress.hpp"
#include "nnbcd/hyperparams.hpp"
#include "nnbcd/tensor.hpp"

namespace nnbcd {

enum class ActivationKind { Relu, LeakyRelu, Identity };

struct Activation {
  ActivationKind kind = ActivationKind::Relu;
  double slope = 0.0;  // leaky_relu only

  static Activation relu() { return {ActivationKind::Relu, 0.0}; }
  static Activation leaky_relu(double slope) { return {ActivationKind::LeakyRelu, slope}; }
  static Activation identity() { return {ActivationKind::Identity, 0.0}; }

  double operator()(double u) const noexcept {
    switch (kind) {
      case ActivationKind::Relu: return u > 0.0 ? u : 0.0;
      case ActivationKind::LeakyRelu: return u >= 0.0 ? u : slope * u;
      case ActivationKind::Identity: return u;
    }
    return u;
  }
  Matrix apply(const Matrix& u) const;
  /// Lipschitz constant (1 for all supported kinds with slope <= 1).
  double lipschitz() const noexcept;

  friend bool operator==(const Activation&, const Activation&) = default;
};

enum class LossKind { Squared, Hinge };

std::string_view to_string(ActivationKind kind) noexcept;
std::string_view to_string(LossKind kind) noexcept;

/// Layer i maps n_{i-1} -> n_i with weight W_i of shape n_i x n_{i-1}.
struct NetworkSpec {
  std::vector<std::size_t> layer_dims;  // n_0 .. n_N
  std::vector<Activation> activations;  // one per layer; last must be identity
  LossKind loss = LossKind::Squared;
  std::vector<CompressionSpec> compression;  // one per layer
  bool use_bias = false;

  std::size_t num_layers() const noexcept { return layer_dims.empty() ? 0 : layer_dims.size() - 1; }
  std::size_t rows(std::size_t layer) const { return layer_dims.at(layer + 1); }
  std::size_t cols(std::size_t layer) const { return layer_dims.at(layer); }
  std::vector<std::pair<std::size_t, std::size_t>> weight_shapes() const;

  /// Checks invariants and clamps TT ranks. Throws ConfigError / ShapeMismatch.
  void validate();

  /// Plain fully connected spec with `hidden` activations and no compression.
  static NetworkSpec mlp(std::vector<std::size_t> dims, Activation hidden = Activation::relu(),
                         LossKind loss = LossKind::Squared);
};

/// Blocks of one layer: W_i, U_i, V_i, W_i^MC and the optional bias b_i.
struct LayerBlocks {
  Matrix w;
  Matrix u;
  Matrix v;
  CompressedWeight mc;
  Vector b;  // empty unless use_bias
};

/// The BCD iterate. `input` is V_0 = X, shared and never mutated.
struct BlockState {
  std::shared_ptr<const Matrix> input;
  std::vector<LayerBlocks> layers;

  std::size_t samples() const noexcept { return input ? static_cast<std::size_t>(input->cols()) : 0; }
  /// V_{i-1} for 0-based layer i.
  const Matrix& layer_input(std::size_t layer) const { return layer == 0 ? *input : layers[layer - 1].v; }
  std::vector<Matrix> weights() const;
  std::vector<Matrix> compressed_weights() const;
  std::vector<Vector> biases() const;
};

enum class InitKind { Gaussian, Zero };

struct InitScheme {
  InitKind kind = InitKind::Gaussian;
  double std = 0.01;
};

/// Deterministic 64-bit generator with a portable normal sampler.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1).
  double uniform() noexcept;
  double normal() noexcept;
  std::size_t below(std::size_t n) noexcept;

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Draws W_i, then fills U_i, V_i with one forward sweep and sets
/// W_i^MC to the compression projection of W_i.
BlockState init_state(const NetworkSpec& spec, std::shared_ptr<const Matrix> x, std::uint64_t seed,
                      const InitScheme& scheme, const Hyperparams& hp);

/// Builds the consistent state (U = WV + b, V = sigma(U), W^MC = proj(W)) for given weights.
BlockState state_from_weights(const NetworkSpec& spec, std::shared_ptr<const Matrix> x, std::vector<Matrix> weights,
                              const Hyperparams& hp, std::vector<Vector> biases = {});

/// Feed-forward prediction n_N x n from the given weights only.
Matrix forward(const NetworkSpec& spec, std::span<const Matrix> weights, const Matrix& x,
               std::span<const Vector> biases = {});

struct ObjectiveBreakdown {
  double risk = 0.0;             // R_n(V_N; Y)
  double reg_w = 0.0;            // sum r_i(W_i^MC)
  double reg_v = 0.0;            // sum s_i(V_i); always 0 (no V regularizers are supported)
  double coupling_rho = 0.0;     // rho/2 sum ||U_i - W_i V_{i-1} - b_i 1^T||^2
  double coupling_gamma = 0.0;   // gamma/2 sum ||V_i - sigma(U_i)||^2
  double mc_tau = 0.0;           // tau/2 sum ||W_i - W_i^MC||^2
  double total = 0.0;
};

/// Empirical risk R_n = (1/n) sum_j loss(V_N[:, j], y_j). Squared loss is
/// ||v - y||^2 with no 1/2 factor; hinge is max(0, 1 - y v) for scalar outputs.
double empirical_risk(LossKind loss, const Matrix& v_last, const Matrix& y);

ObjectiveBreakdown objective(const NetworkSpec& spec, const BlockState& state, const Matrix& y,
                             const Hyperparams& hp);

}  // namespace nnbcd
