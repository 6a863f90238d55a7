#include "ldp/conjugate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/toms748_solve.hpp>
#include <fmt/format.h>

#include "ldp/errors.hpp"

namespace ldp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 60;

// Damped Newton ascent on alpha -> <z, alpha> - Ga(y, alpha), which is concave.
ConjugateResult maximize_dual(const KernelModel& model, PerturbationLevel a, const Vector& y,
                              const Vector& z, const ConjugateSettings& s) {
  if (z.size() != model.dim()) throw PreconditionError("conjugate argument has wrong dimension");
  if (!all_finite(z)) throw PreconditionError("conjugate argument is not finite");

  const Index d = model.dim();
  const double tolerance = s.gradient_tolerance * (1.0 + z.norm());
  auto objective = [&](const Vector& alpha) { return z.dot(alpha) - perturbed_cgf(model, a, y, alpha); };

  Vector alpha = Vector::Zero(d);
  double value = 0.0;  // G(y, 0) = 0
  int rising = 0;      // consecutive strict increases of the objective

  ConjugateResult out;
  for (int iter = 0; iter < s.max_iterations; ++iter) {
    const Vector grad = z - perturbed_cgf_grad(model, a, y, alpha);
    out.iterations = iter;
    out.gradient_norm = grad.norm();
    if (out.gradient_norm <= tolerance) {
      out.value = std::max(value, 0.0);
      out.argmax = alpha;
      out.status = ConjugateStatus::converged;
      return out;
    }
    if (alpha.norm() > s.norm_cap) {
      if (rising >= s.divergence_window) {
        out.value = kInf;
        out.argmax.reset();
        out.status = ConjugateStatus::divergent;
      } else {
        out.value = std::max(value, 0.0);
        out.argmax = alpha;
        out.status = ConjugateStatus::max_iterations;
      }
      return out;
    }

    Matrix hess = perturbed_cgf_hessian(model, a, y, alpha);
    hess.diagonal().array() += 1e-12 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff());
    Eigen::LDLT<Matrix> ldlt(hess);
    Vector dir;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) dir = ldlt.solve(grad);
    if (dir.size() != d || !all_finite(dir) || dir.dot(grad) <= 0.0) dir = grad;
    const double len = dir.norm();
    if (len > s.max_step) dir *= s.max_step / len;

    double step = 1.0;
    const double slope = grad.dot(dir);
    bool accepted = false;
    for (int h = 0; h < kMaxHalvings; ++h) {
      const Vector trial = alpha + step * dir;
      const double trial_value = objective(trial);
      // Near the optimum objective changes drop below rounding; a full step
      // that shrinks the gradient is accepted regardless.
      const bool sufficient = std::isfinite(trial_value) && trial_value >= value + kArmijo * step * slope;
      const bool polishing = !sufficient && h == 0 && std::isfinite(trial_value) &&
                             std::abs(trial_value - value) <= 1e-12 * (1.0 + std::abs(value)) &&
                             (z - perturbed_cgf_grad(model, a, y, trial)).norm() < 0.5 * out.gradient_norm;
      if (sufficient || polishing) {
        rising = trial_value > value ? rising + 1 : 0;
        alpha = trial;
        value = trial_value;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no further ascent representable in floating point
  }

  const Vector grad = z - perturbed_cgf_grad(model, a, y, alpha);
  out.gradient_norm = grad.norm();
  out.value = std::max(value, 0.0);
  out.argmax = alpha;
  out.status = out.gradient_norm <= tolerance ? ConjugateStatus::converged
                                              : ConjugateStatus::max_iterations;
  return out;
}

}  // namespace

std::string_view to_string(ConjugateStatus status) {
  switch (status) {
    case ConjugateStatus::converged: return "converged";
    case ConjugateStatus::divergent: return "divergent";
    case ConjugateStatus::max_iterations: return "max-iterations";
  }
  return "unknown";
}

ConjugateResult fenchel(const KernelModel& model, const Vector& y, const Vector& z,
                        const ConjugateSettings& settings) {
  return maximize_dual(model, PerturbationLevel{}, y, z, settings);
}

ConjugateResult perturbed_fenchel(const KernelModel& model, PerturbationLevel a, const Vector& y,
                                  const Vector& z, const ConjugateSettings& settings) {
  return maximize_dual(model, a, y, z, settings);
}

double fenchel_closed_form_affine(const AffineNoiseModel& model, const Vector& y, const Vector& z) {
  if (z.size() != model.dim() || y.size() != model.dim())
    throw PreconditionError("closed-form conjugate: dimension mismatch");
  const Matrix sigma = model.sigma(y);
  Eigen::FullPivLU<Matrix> lu(sigma);
  if (!lu.isInvertible())
    throw PreconditionError("sigma(y) is singular; no closed form, use the numeric fenchel");
  const Vector v = lu.solve(z - model.drift(y));
  return model.noise().log_mgf_conjugate(v);
}

double mean_norm_bound(const KernelModel& model, std::span<const Vector> states) {
  double sup = 0.0;
  for (const Vector& y : states) sup = std::max(sup, model.mean(y).norm());
  return 1.1 * sup;
}

double perturbed_conjugate_bound(PerturbationLevel a, const Vector& z, double mean_bound) {
  if (a.is_zero()) return kInf;
  const double r = z.norm() + mean_bound;
  return r * r / (2.0 * a.value() * a.value());
}

DominatingPointResult dominating_point_halfspace(const KernelModel& model, const Vector& y,
                                                 const HalfSpace& target,
                                                 const ConjugateSettings& settings) {
  const Vector& n = target.normal;
  const double c = target.level;
  if (n.size() != model.dim()) throw PreconditionError("half-space normal has wrong dimension");

  auto directional_mean = [&](double t) { return model.cgf_grad(y, Vector(t * n)).dot(n); };
  const double at_zero = directional_mean(0.0);
  if (!(at_zero < c))
    throw PreconditionError(fmt::format(
        "mean {} already lies in the target half-space (level {}); not a rare event", at_zero, c));

  double lo = 0.0;
  double hi = 1.0;
  double f_hi = directional_mean(hi) - c;
  while (f_hi < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > settings.norm_cap)
      throw DivergenceError(fmt::format(
          "level {} is not reachable by tilting below |xi| = {}", c, settings.norm_cap));
    f_hi = directional_mean(hi) - c;
  }

  double t_star = hi;
  if (f_hi > 0.0) {
    const double f_lo = directional_mean(lo) - c;
    std::uintmax_t max_iter = 200;
    const auto bracket = boost::math::tools::toms748_solve(
        [&](double t) { return directional_mean(t) - c; }, lo, hi, f_lo, f_hi,
        boost::math::tools::eps_tolerance<double>(50), max_iter);
    t_star = 0.5 * (bracket.first + bracket.second);
  }

  DominatingPointResult out;
  out.tilt = t_star;
  out.multiplier = t_star * n;
  out.point = model.cgf_grad(y, out.multiplier);
  out.level = out.point.dot(out.multiplier) - model.cgf(y, out.multiplier);
  return out;
}

}  // namespace ldp
