#include "nnbcd/bcd.hpp"

#include <chrono>
#include <string>

#include "nnbcd/prox.hpp"

namespace nnbcd::bcd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Matrix affine(const Matrix& w, const Matrix& v, const Vector& b) {
  Matrix u = w * v;
  if (b.size() > 0) u.colwise() += b;
  return u;
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": shape mismatch");
}

Matrix gram_system(const Matrix& v, double rho, double tau) {
  Matrix a = rho * (v * v.transpose());
  a.diagonal().array() += tau;
  return a;
}

}  // namespace

Matrix update_v_last(const NetworkSpec& spec, const BlockState& state, const Matrix& y, const Hyperparams& hp) {
  const auto& last = state.layers.back();
  check_same_shape(last.v, y, "update_v_last");
  const double n = static_cast<double>(y.cols());

  if (spec.loss == LossKind::Squared) {
    const double c = 2.0 / n;
    return (c * y + hp.gamma * last.u + hp.alpha * last.v) / (c + hp.gamma + hp.alpha);
  }

  if (y.rows() != 1) throw Error(ErrorCode::UnsupportedLoss, "hinge V_N update needs a single output row");
  // (1/n) max(0, 1 - y v) + (gamma + alpha)/2 (v - centre)^2, scaled by n.
  const double g = n * (hp.gamma + hp.alpha);
  Matrix centre = (hp.gamma * last.u + hp.alpha * last.v) / (hp.gamma + hp.alpha);
  Matrix out(centre.rows(), centre.cols());
  for (Eigen::Index j = 0; j < out.cols(); ++j) out(0, j) = prox::hinge(y(0, j), centre(0, j), g);
  return out;
}

Matrix update_v_last_proxlinear(const Matrix& u_last, const Matrix& v_prev, const Matrix& grad, const Hyperparams& hp) {
  check_same_shape(u_last, v_prev, "update_v_last_proxlinear");
  check_same_shape(u_last, grad, "update_v_last_proxlinear");
  return (hp.gamma * u_last + hp.alpha * v_prev - grad) / (hp.gamma + hp.alpha);
}

Matrix squared_risk_gradient(const Matrix& v, const Matrix& y) {
  check_same_shape(v, y, "squared_risk_gradient");
  return (2.0 / static_cast<double>(y.cols())) * (v - y);
}

Matrix update_v_mid(std::size_t layer, const NetworkSpec& spec, const BlockState& state, const Hyperparams& hp) {
  if (layer + 1 >= state.layers.size()) throw Error(ErrorCode::ShapeMismatch, "update_v_mid needs a hidden layer");
  const auto& here = state.layers[layer];
  const auto& next = state.layers[layer + 1];

  Matrix target = next.u;
  if (next.b.size() > 0) target.colwise() -= next.b;

  Matrix system = hp.rho * (next.w.transpose() * next.w);
  system.diagonal().array() += hp.gamma;
  Matrix rhs = hp.gamma * spec.activations[layer].apply(here.u) + hp.rho * (next.w.transpose() * target);
  return solve_spd(system, rhs);
}

Matrix update_u_last(const BlockState& state, const Hyperparams& hp) {
  const std::size_t last = state.layers.size() - 1;
  const auto& layer = state.layers[last];
  return (hp.gamma * layer.v + hp.rho * affine(layer.w, state.layer_input(last), layer.b)) / (hp.gamma + hp.rho);
}

Matrix update_u_mid(std::size_t layer, const NetworkSpec& spec, const BlockState& state, const Hyperparams& hp) {
  const auto& act = spec.activations.at(layer);
  if (act.kind == ActivationKind::Identity)
    throw Error(ErrorCode::UnsupportedActivation, "hidden U update needs relu or leaky_relu");
  const auto& here = state.layers[layer];
  const Matrix c = affine(here.w, state.layer_input(layer), here.b);

  const double merged = hp.rho + hp.alpha;
  const double g = merged / hp.gamma;
  Matrix out(here.u.rows(), here.u.cols());
  const double* cv = c.data();
  const double* up = here.u.data();
  const double* vv = here.v.data();
  double* o = out.data();
  const Eigen::Index size = out.size();
  if (act.kind == ActivationKind::Relu) {
    for (Eigen::Index k = 0; k < size; ++k) o[k] = prox::relu(vv[k], (hp.rho * cv[k] + hp.alpha * up[k]) / merged, g);
  } else {
    for (Eigen::Index k = 0; k < size; ++k)
      o[k] = prox::leaky_relu(vv[k], (hp.rho * cv[k] + hp.alpha * up[k]) / merged, g, act.slope);
  }
  return out;
}

Matrix update_w(std::size_t layer, const BlockState& state, const Hyperparams& hp, const SpdFactorization* system) {
  const auto& here = state.layers[layer];
  const Matrix& v = state.layer_input(layer);

  Matrix target = here.u;
  if (here.b.size() > 0) target.colwise() -= here.b;
  const Matrix rhs_t = (hp.rho * (target * v.transpose()) + hp.tau * here.mc.dense).transpose();

  Matrix w_t = system ? system->solve(rhs_t) : solve_spd(gram_system(v, hp.rho, hp.tau), rhs_t);
  return w_t.transpose();
}

Vector update_bias(std::size_t layer, const BlockState& state) {
  const auto& here = state.layers[layer];
  return (here.u - here.w * state.layer_input(layer)).rowwise().mean();
}

Matrix update_kernel(const Matrix& patches, const Matrix& u, const Matrix& k_mc, const Hyperparams& hp,
                     const SpdFactorization* system) {
  if (patches.rows() != u.rows()) throw Error(ErrorCode::ShapeMismatch, "update_kernel: patch rows != output rows");
  if (k_mc.rows() != patches.cols() || k_mc.cols() != u.cols())
    throw Error(ErrorCode::ShapeMismatch, "update_kernel: K^MC shape mismatch");
  const Matrix rhs = hp.rho * (patches.transpose() * u) + hp.tau * k_mc;
  if (system) return system->solve(rhs);
  Matrix a = hp.rho * (patches.transpose() * patches);
  a.diagonal().array() += hp.tau;
  return solve_spd(a, rhs);
}

ConvKernelBlock::ConvKernelBlock(Matrix patches, const Hyperparams& hp)
    : patches_(std::move(patches)), system_([&] {
        Matrix a = hp.rho * (patches_.transpose() * patches_);
        a.diagonal().array() += hp.tau;
        return a;
      }()) {}

Matrix ConvKernelBlock::update(const Matrix& u, const Matrix& k_mc, const Hyperparams& hp) const {
  return update_kernel(patches_, u, k_mc, hp, &system_);
}

std::size_t estimate_memory_bytes(const NetworkSpec& spec, std::size_t samples) {
  std::size_t doubles = 0;
  for (std::size_t i = 0; i < spec.num_layers(); ++i) {
    doubles += 2 * spec.rows(i) * samples;          // U_i, V_i
    doubles += 2 * spec.rows(i) * spec.cols(i);     // W_i, W_i^MC
  }
  doubles *= 2;  // pre-sweep snapshot
  doubles += (spec.layer_dims.front() + spec.layer_dims.back()) * samples;  // X, Y
  return doubles * sizeof(double);
}

namespace {

SweepTimings sweep_impl(const NetworkSpec& spec, const Hyperparams& hp, const Matrix& y, BlockState& state,
                        const SpdFactorization* input_system) {
  const std::size_t n = spec.num_layers();
  if (state.layers.size() != n) throw Error(ErrorCode::ShapeMismatch, "state and spec disagree on layer count");

  BlockState backup = state;
  SweepTimings t;
  try {
    for (std::size_t i = n; i-- > 0;) {
      auto& layer = state.layers[i];

      auto start = Clock::now();
      layer.v = i + 1 == n ? update_v_last(spec, state, y, hp) : update_v_mid(i, spec, state, hp);
      t.v += seconds_since(start);

      start = Clock::now();
      layer.u = i + 1 == n ? update_u_last(state, hp) : update_u_mid(i, spec, state, hp);
      t.u += seconds_since(start);

      start = Clock::now();
      layer.w = update_w(i, state, hp, i == 0 ? input_system : nullptr);
      t.w += seconds_since(start);

      if (spec.use_bias) {
        start = Clock::now();
        layer.b = update_bias(i, state);
        t.b += seconds_since(start);
      }

      start = Clock::now();
      layer.mc = update_mc(layer.w, layer.mc, spec.compression[i], hp);
      t.mc += seconds_since(start);
    }
  } catch (...) {
    state = std::move(backup);
    throw;
  }
  return t;
}

}  // namespace

Engine::Engine(NetworkSpec spec, Hyperparams hp, std::shared_ptr<const Matrix> x, std::shared_ptr<const Matrix> y)
    : spec_(std::move(spec)), hp_(hp), x_(std::move(x)), y_(std::move(y)) {
  hp_.validate();
  spec_.validate();
  if (static_cast<std::size_t>(x_->rows()) != spec_.layer_dims.front() ||
      static_cast<std::size_t>(y_->rows()) != spec_.layer_dims.back() || x_->cols() != y_->cols())
    throw Error(ErrorCode::ShapeMismatch, "data shapes do not match the network");
  input_system_.emplace(gram_system(*x_, hp_.rho, hp_.tau));
}

SweepTimings Engine::sweep(BlockState& state) const {
  if (state.input.get() != x_.get() && *state.input != *x_)
    throw Error(ErrorCode::ShapeMismatch, "state was built for different data");
  return sweep_impl(spec_, hp_, *y_, state, &*input_system_);
}

SweepTimings sweep(const NetworkSpec& spec, BlockState& state, const Matrix& y, const Hyperparams& hp) {
  return sweep_impl(spec, hp, y, state, nullptr);
}

}  // namespace nnbcd::bcd
