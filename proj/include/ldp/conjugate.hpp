#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "ldp/halfspace.hpp"
#include "ldp/kernel.hpp"

namespace ldp {

struct ConjugateSettings {
  int max_iterations = 500;
  /// Stop when |z - grad G(alpha)| <= gradient_tolerance * (1 + |z|).
  double gradient_tolerance = 1e-10;
  /// Iterates beyond this norm are candidates for a divergence verdict.
  double norm_cap = 1e3;
  /// Longest Newton step accepted in one iteration.
  double max_step = 20.0;
  /// Consecutive objective increases required before declaring divergence.
  int divergence_window = 20;
};

enum class ConjugateStatus { converged, divergent, max_iterations };

std::string_view to_string(ConjugateStatus status);

/// Value of sup_alpha [<z, alpha> - G(y, alpha)] with its maximizer.
struct ConjugateResult {
  double value = 0.0;  // +inf when divergent
  std::optional<Vector> argmax;
  ConjugateStatus status = ConjugateStatus::converged;
  int iterations = 0;
  double gradient_norm = 0.0;

  bool converged() const { return status == ConjugateStatus::converged; }
  bool divergent() const { return status == ConjugateStatus::divergent; }
};

/// Numeric Legendre transform of G(y, .) at z by damped Newton ascent.
ConjugateResult fenchel(const KernelModel& model, const Vector& y, const Vector& z,
                        const ConjugateSettings& settings = {});

/// Conjugate of G^a(y, .) = G(y, .) + a^2|.|^2/2. Finite for every z when a > 0.
ConjugateResult perturbed_fenchel(const KernelModel& model, PerturbationLevel a, const Vector& y,
                                  const Vector& z, const ConjugateSettings& settings = {});

/// Exact conjugate for an affine model with invertible sigma(y):
/// log_mgf^*(sigma(y)^{-1} (z - b(y))). Throws PreconditionError when sigma(y)
/// is singular.
double fenchel_closed_form_affine(const AffineNoiseModel& model, const Vector& y, const Vector& z);

/// Mean bound D: 1.1 * max over the given states of |E F(y)|.
double mean_norm_bound(const KernelModel& model, std::span<const Vector> states);

/// Quadratic majorant (|z| + D)^2 / (2 a^2) of the perturbed conjugate.
double perturbed_conjugate_bound(PerturbationLevel a, const Vector& z, double mean_bound);

/// Boundary point of a half-space target where the conjugate is smallest.
struct DominatingPointResult {
  Vector point;       // x0 = grad G(y, xi0), on the boundary hyperplane
  Vector multiplier;  // xi0 = t* normal
  double level = 0.0; // <x0, xi0> - G(y, xi0) = G^*(y, x0)
  double tilt = 0.0;  // t*
};

/// Solves <grad G(y, t n), n> = c for t >= 0 on the target {<z, n> >= c}.
/// Requires the mean of mu(y, .) to lie strictly outside the target.
/// Throws DivergenceError if no root exists with t below settings.norm_cap.
DominatingPointResult dominating_point_halfspace(const KernelModel& model, const Vector& y,
                                                 const HalfSpace& target,
                                                 const ConjugateSettings& settings = {});

}  // namespace ldp
