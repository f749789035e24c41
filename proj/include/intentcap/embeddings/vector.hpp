#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "intentcap/errors.hpp"

namespace intentcap {

/// Sentence embedding. `normalized` records that the vector has unit
/// Euclidean norm; similarity functions require it.
struct EmbeddingVector {
  std::vector<double> components;
  bool normalized = false;

  std::size_t dimension() const noexcept { return components.size(); }

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

inline double inner_product(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ValidationError("embedding dimension mismatch: " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline EmbeddingVector normalize(const EmbeddingVector& v) {
  double norm2 = 0.0;
  for (double x : v.components) norm2 += x * x;
  if (!(norm2 > 0.0) || !std::isfinite(norm2)) {
    throw ValidationError("cannot normalize a zero or non-finite vector");
  }
  const double norm = std::sqrt(norm2);
  EmbeddingVector out;
  out.components.reserve(v.components.size());
  for (double x : v.components) out.components.push_back(x / norm);
  out.normalized = true;
  return out;
}

namespace detail {
inline void require_normalized_pair(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (!a.normalized || !b.normalized) throw ValidationError("similarity requires normalized vectors");
  if (a.dimension() != b.dimension()) {
    throw ValidationError("embedding dimension mismatch: " + std::to_string(a.dimension()) +
                          " vs " + std::to_string(b.dimension()));
  }
}
}  // namespace detail

/// (1 + <a,b>) / 2 for unit vectors, evaluated as |a+b|^2 / 4. The two are
/// algebraically equal when |a| = |b| = 1; the second form is exactly 0 for
/// b = -a and does not lose precision near either end of the range.
inline double sim_squared(const EmbeddingVector& a, const EmbeddingVector& b) {
  detail::require_normalized_pair(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.components.size(); ++i) {
    const double s = a.components[i] + b.components[i];
    acc += s * s;
  }
  return std::clamp(acc / 4.0, 0.0, 1.0);
}

/// Bounded alignment score sqrt((1 + <a,b>) / 2): 1 for a = b, 0 for a = -b.
inline double sim(const EmbeddingVector& a, const EmbeddingVector& b) {
  return std::sqrt(sim_squared(a, b));
}

/// Cosine of two unit vectors, in [-1, 1].
inline double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  detail::require_normalized_pair(a, b);
  return std::clamp(inner_product(a.components, b.components), -1.0, 1.0);
}

}  // namespace intentcap
