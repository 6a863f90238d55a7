#pragma once

#include <cmath>

#include "ldp/errors.hpp"
#include "ldp/types.hpp"

namespace ldp {

/// Closed half-space {z : <z, normal> >= level} with a unit normal.
struct HalfSpace {
  Vector normal;
  double level = 0.0;

  /// Normalizes the direction; the set itself is unchanged.
  static HalfSpace make(const Vector& direction, double level) {
    const double norm = direction.norm();
    if (!(norm > 0.0) || !std::isfinite(norm) || !std::isfinite(level))
      throw PreconditionError("half-space needs a finite nonzero normal and finite level");
    return HalfSpace{direction / norm, level / norm};
  }

  double margin(const Vector& z) const { return z.dot(normal) - level; }
  bool contains(const Vector& z) const { return margin(z) >= 0.0; }

  /// Euclidean projection onto the half-space.
  Vector project(const Vector& z) const {
    const double m = margin(z);
    return m >= 0.0 ? z : Vector(z - m * normal);
  }
};

}  // namespace ldp
