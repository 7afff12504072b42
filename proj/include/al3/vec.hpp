#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "al3/error.hpp"

namespace al3 {

using Vector = std::vector<double>;

inline double dot(std::span<const double> x, std::span<const double> y) {
  detail::require_size(y.size(), x.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(std::span<const double> x) {
  // scaled accumulation so huge/tiny entries do not overflow or underflow
  double scale = 0.0, ssq = 1.0;
  for (double v : x) {
    if (v == 0.0) continue;
    const double a = std::abs(v);
    if (scale < a) {
      ssq = 1.0 + ssq * (scale / a) * (scale / a);
      scale = a;
    } else {
      ssq += (a / scale) * (a / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

/// y += a x
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  detail::require_size(y.size(), x.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline void scale(double a, std::span<double> x) {
  for (double& v : x) v *= a;
}

inline Vector subtract(std::span<const double> x, std::span<const double> y) {
  detail::require_size(y.size(), x.size(), "subtract");
  Vector r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] - y[i];
  return r;
}

/// ‖x − y‖₂ / ‖y‖₂, or ‖x‖₂ when y = 0.
inline double relative_diff(std::span<const double> x, std::span<const double> y) {
  const double ny = norm2(y);
  const double d = norm2(subtract(x, y));
  return ny > 0.0 ? d / ny : d;
}

inline Vector unit_vector(std::size_t n, std::size_t j) {
  Vector e(n, 0.0);
  e.at(j) = 1.0;
  return e;
}

}  // namespace al3
