#include "nnbcd/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace nnbcd {

void Hyperparams::validate() const {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw Error(ErrorCode::ConfigError, std::string("hyperparams.") + name +
                                              " must be > 0 (sufficient decrease needs alpha, gamma, rho, tau > 0)");
  };
  positive(gamma, "gamma");
  positive(rho, "rho");
  positive(tau, "tau");
  positive(alpha, "alpha");
  if (!(lambda_reg >= 0.0) || !std::isfinite(lambda_reg))
    throw Error(ErrorCode::ConfigError, "hyperparams.lambda_reg must be >= 0");
}

double descent_lambda(const Hyperparams& hp) noexcept {
  return std::min({hp.alpha, hp.gamma + hp.rho, hp.tau}) / 2.0;
}

double descent_lambda_proxlinear(const Hyperparams& hp, double risk_lipschitz) noexcept {
  return std::min(descent_lambda(hp), hp.alpha + (hp.gamma - risk_lipschitz) / 2.0);
}

Matrix Activation::apply(const Matrix& u) const {
  if (kind == ActivationKind::Identity) return u;
  return u.unaryExpr([this](double x) { return (*this)(x); });
}

double Activation::lipschitz() const noexcept {
  return kind == ActivationKind::LeakyRelu ? std::max(1.0, std::abs(slope)) : 1.0;
}

std::string_view to_string(ActivationKind kind) noexcept {
  switch (kind) {
    case ActivationKind::Relu: return "relu";
    case ActivationKind::LeakyRelu: return "leaky_relu";
    case ActivationKind::Identity: return "identity";
  }
  return "identity";
}

std::string_view to_string(LossKind kind) noexcept { return kind == LossKind::Hinge ? "hinge" : "squared"; }

std::vector<std::pair<std::size_t, std::size_t>> NetworkSpec::weight_shapes() const {
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  for (std::size_t i = 0; i < num_layers(); ++i) shapes.emplace_back(rows(i), cols(i));
  return shapes;
}

void NetworkSpec::validate() {
  if (layer_dims.size() < 2) throw Error(ErrorCode::ConfigError, "network.layer_dims needs at least two entries");
  if (std::any_of(layer_dims.begin(), layer_dims.end(), [](std::size_t d) { return d == 0; }))
    throw Error(ErrorCode::ConfigError, "network.layer_dims entries must be >= 1");
  const std::size_t n = num_layers();
  if (activations.size() != n)
    throw Error(ErrorCode::ConfigError, "network.activations needs one entry per layer (" + std::to_string(n) + ")");
  if (activations.back().kind != ActivationKind::Identity)
    throw Error(ErrorCode::ConfigError, "network.activations: the output layer must be identity");
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto& a = activations[i];
    if (a.kind == ActivationKind::Identity)
      throw Error(ErrorCode::UnsupportedActivation,
                  "network.activations[" + std::to_string(i) + "]: hidden layers need relu or leaky_relu");
    if (a.kind == ActivationKind::LeakyRelu && !(a.slope >= 0.0 && a.slope < 1.0))
      throw Error(ErrorCode::ConfigError, "network.activations: leaky_relu slope must lie in [0, 1)");
  }
  if (loss == LossKind::Hinge && layer_dims.back() != 1)
    throw Error(ErrorCode::UnsupportedLoss, "hinge loss is only supported for a single output");
  if (compression.empty()) compression.assign(n, CompressionSpec::none());
  if (compression.size() != n)
    throw Error(ErrorCode::ConfigError, "compression needs one entry per layer (" + std::to_string(n) + ")");
  for (std::size_t i = 0; i < n; ++i) compression[i].validate_for(rows(i), cols(i));
}

NetworkSpec NetworkSpec::mlp(std::vector<std::size_t> dims, Activation hidden, LossKind loss) {
  NetworkSpec spec;
  spec.layer_dims = std::move(dims);
  const std::size_t n = spec.num_layers();
  spec.activations.assign(n, hidden);
  if (n > 0) spec.activations.back() = Activation::identity();
  spec.loss = loss;
  spec.compression.assign(n, CompressionSpec::none());
  return spec;
}

std::vector<Matrix> BlockState::weights() const {
  std::vector<Matrix> out;
  for (const auto& l : layers) out.push_back(l.w);
  return out;
}

std::vector<Matrix> BlockState::compressed_weights() const {
  std::vector<Matrix> out;
  for (const auto& l : layers) out.push_back(l.mc.dense);
  return out;
}

std::vector<Vector> BlockState::biases() const {
  std::vector<Vector> out;
  for (const auto& l : layers) out.push_back(l.b);
  return out;
}

// xoshiro256** seeded through splitmix64.
Rng::Rng(std::uint64_t seed) {
  for (auto& s : s_) {
    seed += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = seed;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    s = z ^ (z >> 31);
  }
}

std::uint64_t Rng::next_u64() noexcept {
  const auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::size_t Rng::below(std::size_t n) noexcept { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

namespace {

void check_input(const NetworkSpec& spec, const Matrix& x) {
  if (spec.num_layers() == 0) throw Error(ErrorCode::ConfigError, "network has no layers");
  if (static_cast<std::size_t>(x.rows()) != spec.layer_dims.front())
    throw Error(ErrorCode::ShapeMismatch, "data has " + std::to_string(x.rows()) + " features, network expects " +
                                              std::to_string(spec.layer_dims.front()));
}

Matrix affine(const Matrix& w, const Matrix& v, const Vector& b) {
  Matrix u = w * v;
  if (b.size() > 0) u.colwise() += b;
  return u;
}

}  // namespace

BlockState state_from_weights(const NetworkSpec& spec, std::shared_ptr<const Matrix> x, std::vector<Matrix> weights,
                              const Hyperparams& hp, std::vector<Vector> biases) {
  check_input(spec, *x);
  const std::size_t n = spec.num_layers();
  if (weights.size() != n) throw Error(ErrorCode::ShapeMismatch, "one weight matrix per layer required");
  if (biases.empty() && spec.use_bias)
    for (std::size_t i = 0; i < n; ++i) biases.push_back(Vector::Zero(static_cast<Eigen::Index>(spec.rows(i))));

  BlockState state;
  state.input = std::move(x);
  state.layers.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& layer = state.layers[i];
    if (static_cast<std::size_t>(weights[i].rows()) != spec.rows(i) ||
        static_cast<std::size_t>(weights[i].cols()) != spec.cols(i))
      throw Error(ErrorCode::ShapeMismatch, "weight " + std::to_string(i + 1) + " has the wrong shape");
    layer.w = std::move(weights[i]);
    if (spec.use_bias) layer.b = biases.at(i);
    layer.u = affine(layer.w, state.layer_input(i), layer.b);
    layer.v = spec.activations[i].apply(layer.u);
    layer.mc = project_mc(layer.w, spec.compression[i], hp.tau, hp.lambda_reg);
  }
  return state;
}

BlockState init_state(const NetworkSpec& spec, std::shared_ptr<const Matrix> x, std::uint64_t seed,
                      const InitScheme& scheme, const Hyperparams& hp) {
  check_input(spec, *x);
  Rng rng(seed);
  std::vector<Matrix> weights;
  for (std::size_t i = 0; i < spec.num_layers(); ++i) {
    Matrix w = Matrix::Zero(static_cast<Eigen::Index>(spec.rows(i)), static_cast<Eigen::Index>(spec.cols(i)));
    if (scheme.kind == InitKind::Gaussian)
      for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = scheme.std * rng.normal();
    weights.push_back(std::move(w));
  }
  return state_from_weights(spec, std::move(x), std::move(weights), hp);
}

Matrix forward(const NetworkSpec& spec, std::span<const Matrix> weights, const Matrix& x,
               std::span<const Vector> biases) {
  check_input(spec, x);
  if (weights.size() != spec.num_layers()) throw Error(ErrorCode::ShapeMismatch, "one weight matrix per layer required");
  Matrix v = x;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i].cols() != v.rows())
      throw Error(ErrorCode::ShapeMismatch, "weight " + std::to_string(i + 1) + " does not match its input width");
    const Vector b = i < biases.size() ? biases[i] : Vector();
    v = spec.activations[i].apply(affine(weights[i], v, b));
  }
  return v;
}

double empirical_risk(LossKind loss, const Matrix& v_last, const Matrix& y) {
  if (v_last.rows() != y.rows() || v_last.cols() != y.cols())
    throw Error(ErrorCode::ShapeMismatch, "prediction and target shapes differ");
  const auto n = static_cast<double>(y.cols());
  if (loss == LossKind::Squared) return (v_last - y).squaredNorm() / n;
  if (y.rows() != 1) throw Error(ErrorCode::UnsupportedLoss, "hinge loss needs a single output row");
  double total = 0.0;
  for (Eigen::Index j = 0; j < y.cols(); ++j) total += std::max(0.0, 1.0 - y(0, j) * v_last(0, j));
  return total / n;
}

ObjectiveBreakdown objective(const NetworkSpec& spec, const BlockState& state, const Matrix& y,
                             const Hyperparams& hp) {
  ObjectiveBreakdown out;
  const std::size_t n = spec.num_layers();
  if (state.layers.size() != n) throw Error(ErrorCode::ShapeMismatch, "state and spec disagree on layer count");
  out.risk = empirical_risk(spec.loss, state.layers.back().v, y);
  double rho_sum = 0.0, gamma_sum = 0.0, tau_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& layer = state.layers[i];
    check_feasible(layer.mc, spec.compression[i]);
    out.reg_w += mc_regularizer(layer.mc.dense, spec.compression[i], hp.lambda_reg);
    rho_sum += (layer.u - affine(layer.w, state.layer_input(i), layer.b)).squaredNorm();
    gamma_sum += (layer.v - spec.activations[i].apply(layer.u)).squaredNorm();
    tau_sum += (layer.w - layer.mc.dense).squaredNorm();
  }
  out.coupling_rho = 0.5 * hp.rho * rho_sum;
  out.coupling_gamma = 0.5 * hp.gamma * gamma_sum;
  out.mc_tau = 0.5 * hp.tau * tau_sum;
  out.total = out.risk + out.reg_w + out.reg_v + out.coupling_rho + out.coupling_gamma + out.mc_tau;
  return out;
}

}  // namespace nnbcd
