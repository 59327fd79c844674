#include "nnbcd/prox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "nnbcd/error.hpp"

namespace nnbcd::prox {

namespace {

void require_positive(double g) {
  if (!(g > 0.0)) throw Error(ErrorCode::NonPositiveGamma, "proximal weight must be > 0, got " + std::to_string(g));
}

}  // namespace

double relu(double a, double b, double g) {
  require_positive(g);
  const double gb = g * b;
  if (a + gb >= 0.0 && b >= 0.0) return (a + gb) / (1.0 + g);
  if (a + gb < 0.0) return std::min(b, 0.0);
  // Here b < 0 and a + g b >= 0, which forces a > 0.
  const double split = -(std::sqrt(g * (g + 1.0)) - g) * a;
  if (split <= gb) return (a + gb) / (1.0 + g);
  return b;
}

double leaky_relu(double a, double b, double g, double slope) {
  require_positive(g);
  if (slope == 0.0) return relu(a, b, g);
  const auto objective = [&](double u) {
    const double s = u >= 0.0 ? u : slope * u;
    return 0.5 * (s - a) * (s - a) + 0.5 * g * (u - b) * (u - b);
  };
  const double pos = std::max((a + g * b) / (1.0 + g), 0.0);
  const double neg = std::min((slope * a + g * b) / (slope * slope + g), 0.0);
  return objective(neg) < objective(pos) ? neg : pos;
}

double hinge(double a, double b, double g) {
  require_positive(g);
  if (a == 0.0) return b;
  const double ab = a * b;
  if (ab >= 1.0) return b;
  if (ab <= 1.0 - a * a / g) return b + a / g;
  return 1.0 / a;
}

double soft_threshold(double z, double t) noexcept {
  const double m = std::abs(z) - t;
  return m > 0.0 ? std::copysign(m, z) : 0.0;
}

double hard_threshold(double z, double t) noexcept { return std::abs(z) > t ? z : 0.0; }

void project_topk_inplace(std::span<double> z, std::size_t beta, std::vector<std::size_t>& scratch) {
  if (beta < 1 || beta > z.size())
    throw Error(ErrorCode::BetaOutOfRange,
                "beta=" + std::to_string(beta) + " outside [1, " + std::to_string(z.size()) + "]");
  if (beta == z.size()) return;

  scratch.resize(z.size());
  std::iota(scratch.begin(), scratch.end(), std::size_t{0});
  const auto larger = [&](std::size_t i, std::size_t j) {
    const double ai = std::abs(z[i]), aj = std::abs(z[j]);
    return ai > aj || (ai == aj && i < j);
  };
  std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(beta), scratch.end(), larger);
  for (auto it = scratch.begin() + static_cast<std::ptrdiff_t>(beta); it != scratch.end(); ++it) z[*it] = 0.0;
}

std::vector<double> project_topk(std::span<const double> z, std::size_t beta) {
  std::vector<double> out(z.begin(), z.end());
  std::vector<std::size_t> scratch;
  project_topk_inplace(out, beta, scratch);
  return out;
}

}  // namespace nnbcd::prox
