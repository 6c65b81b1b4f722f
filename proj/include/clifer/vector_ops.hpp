#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace clifer {

// An encoded feature frame. Dimension is dataset-defined.
using Vector = std::vector<double>;

inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

// x += rate * (target - x)
inline void move_towards(std::span<double> x, std::span<const double> target, double rate) noexcept {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += rate * (target[i] - x[i]);
}

inline Vector blend(std::span<const double> a, std::span<const double> b, double wa) {
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = wa * a[i] + (1.0 - wa) * b[i];
  return out;
}

inline Vector midpoint(std::span<const double> a, std::span<const double> b) { return blend(a, b, 0.5); }

}  // namespace clifer
