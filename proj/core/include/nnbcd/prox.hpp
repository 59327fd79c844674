#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nnbcd::prox {

/// argmin_u 1/2 (max(0,u) - a)^2 + g/2 (u - b)^2, g > 0.
double relu(double a, double b, double g);

/// argmin_u 1/2 (s(u) - a)^2 + g/2 (u - b)^2 with s(u) = u for u >= 0 and
/// slope * u otherwise, 0 <= slope < 1. No published closed form; solved by
/// minimizing each linear piece and keeping the better one.
double leaky_relu(double a, double b, double g, double slope);

/// argmin_u max(0, 1 - a u) + g/2 (u - b)^2, g > 0.
double hinge(double a, double b, double g);

/// sign(z) * max(|z| - t, 0).
double soft_threshold(double z, double t) noexcept;

/// z if |z| > t, else 0. Ties go to 0.
double hard_threshold(double z, double t) noexcept;

/// Euclidean projection onto {x : ||x||_0 <= beta}: keeps the beta entries of
/// largest magnitude, ties broken toward the lowest index.
std::vector<double> project_topk(std::span<const double> z, std::size_t beta);

/// In-place variant; `scratch` avoids reallocating the index buffer.
void project_topk_inplace(std::span<double> z, std::size_t beta, std::vector<std::size_t>& scratch);

}  // namespace nnbcd::prox
