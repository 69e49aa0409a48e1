#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "evload/matrix.hpp"

namespace evload {

/// Smooth minimum -eps*log(sum_j exp(-y_j/eps)).
///
/// Shift-stabilized: the minimum of y is subtracted before exponentiating,
/// so the result stays finite for |y_j|/eps up to ~1e308 rather than ~700.
/// Bounds: min(y) - eps*log(n) <= softmin(y, eps) <= min(y).
inline double softmin(std::span<const double> y, double eps) {
  if (y.empty()) throw std::invalid_argument("softmin: empty input");
  if (!(eps > 0.0)) throw std::invalid_argument("softmin: eps must be positive");
  const double lo = *std::min_element(y.begin(), y.end());
  double acc = 0.0;
  for (double v : y) acc += std::exp(-(v - lo) / eps);
  return lo - eps * std::log(acc);
}

/// Gradient of softmin: the softmax distribution over the negated, scaled
/// coordinates. Writes into `out` (same length as y). All entries are >= 0
/// and sum to 1; coordinates far above the minimum underflow to exact 0.
inline void softmin_fractions(std::span<const double> y, double eps, std::span<double> out) {
  if (y.empty()) throw std::invalid_argument("softmin_fractions: empty input");
  if (!(eps > 0.0)) throw std::invalid_argument("softmin_fractions: eps must be positive");
  if (out.size() != y.size())
    throw std::invalid_argument("softmin_fractions: output size mismatch");
  const double lo = *std::min_element(y.begin(), y.end());
  double acc = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    out[j] = std::exp(-(y[j] - lo) / eps);
    acc += out[j];
  }
  for (std::size_t j = 0; j < y.size(); ++j) out[j] /= acc;
}

inline Vec softmin_fractions(std::span<const double> y, double eps) {
  Vec out(y.size());
  softmin_fractions(y, eps, out);
  return out;
}

/// Negative entropy sum_j d_j*log(d_j) with the continuous extension
/// 0*log(0) = 0. Result lies in [-log(n), 0] for d in the unit simplex.
inline double negative_entropy(std::span<const double> delta) {
  double h = 0.0;
  for (double d : delta) {
    if (d < -1e-9) throw std::invalid_argument("negative_entropy: negative component");
    if (d > 0.0) h += d * std::log(d);
  }
  return h;
}

}  // namespace evload
