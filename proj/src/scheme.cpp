#include "ldp/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "ldp/errors.hpp"
#include "ldp/quadrature.hpp"

namespace ldp {

void SchemeRun::validate() const {
  if (!model) throw PreconditionError("scheme run has no model");
  if (n < 1) throw PreconditionError("scheme run needs n >= 1");
  if (x.size() != model->dim()) throw PreconditionError("start point has wrong dimension");
  if (!all_finite(x)) throw PreconditionError("start point is not finite");
}

Trajectory simulate(const SchemeRun& run, RandomStream& rng) {
  run.validate();
  const Index d = run.model->dim();
  const double inv_n = 1.0 / static_cast<double>(run.n);
  const double a = run.a.value();

  Matrix knots(d, run.n + 1);
  knots.col(0) = run.x;
  Vector state = run.x;
  for (Index k = 1; k <= run.n; ++k) {
    Vector step = run.model->sample_increment(state, rng);
    const Vector g = rng.normal_vector(d);
    if (a != 0.0) step += a * g;
    state += inv_n * step;
    if (!all_finite(state))
      throw NumericalError(fmt::format("scheme state became non-finite at step {} of {}", k, run.n));
    knots.col(k) = state;
  }
  return Trajectory(std::move(knots));
}

Trajectory simulate(const SchemeRun& run) {
  RandomStream rng(run.seed);
  return simulate(run, rng);
}

double phi_n(const KernelModel& model, const Vector& x, PerturbationLevel a, const Trajectory& f,
             const DualMeasure& lambda, Index n) {
  if (n == 0) n = f.steps();
  if (n < 1) throw PreconditionError("phi_n needs n >= 1");
  if (x.size() != model.dim() || f.dim() != model.dim())
    throw PreconditionError("phi_n: dimension mismatch");
  if (lambda.empty()) return 0.0;
  if (lambda.dim() != model.dim()) throw PreconditionError("phi_n: dual measure dimension mismatch");

  const double inv_n = 1.0 / static_cast<double>(n);
  double sum = x.dot(lambda.total_mass());
  for (Index i = 1; i <= n; ++i) {
    const Vector weight = inv_n * lambda.basis_integral(n, i);
    const double t = static_cast<double>(i - 1) * inv_n;
    const Vector y = n == f.steps() ? Vector(f.knot(i - 1)) : f.eval(t);
    sum += perturbed_cgf(model, a, y, weight);
  }
  return sum;
}

double phi_limit(const KernelModel& model, const Vector& x, PerturbationLevel a,
                 const Trajectory& f, const DualMeasure& lambda) {
  if (x.size() != model.dim() || f.dim() != model.dim())
    throw PreconditionError("phi_limit: dimension mismatch");
  if (lambda.empty()) return 0.0;
  if (lambda.dim() != model.dim())
    throw PreconditionError("phi_limit: dual measure dimension mismatch");

  std::vector<double> breaks;
  breaks.reserve(static_cast<std::size_t>(f.steps()) + lambda.atoms().size() + 1);
  for (Index k = 0; k <= f.steps(); ++k) breaks.push_back(f.time(k));
  for (const auto& atom : lambda.atoms()) breaks.push_back(atom.time);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  double integral = 0.0;
  for (std::size_t p = 1; p < breaks.size(); ++p) {
    const double lo = breaks[p - 1];
    const double hi = breaks[p];
    if (!(hi > lo)) continue;
    // No atom lies strictly inside (lo, hi), so lambda([s,1]) = lambda([hi,1]) there.
    const Vector tail = lambda.tail_mass(hi);
    integral += GaussLegendre5::integrate(
        [&](double s) { return perturbed_cgf(model, a, f.eval(s), tail); }, lo, hi);
  }
  return x.dot(lambda.total_mass()) + integral;
}

CoupledGap coupled_perturbation_gap(const AffineNoiseModel& model, const Vector& x, Index n,
                                    PerturbationLevel a, std::uint64_t seed) {
  if (n < 1) throw PreconditionError("coupled gap needs n >= 1");
  if (x.size() != model.dim()) throw PreconditionError("start point has wrong dimension");

  RandomStream rng(seed);
  const Index d = model.dim();
  const double inv_n = 1.0 / static_cast<double>(n);

  Vector plain = x;
  Vector perturbed = x;
  double gap = 0.0;
  double noise_norms = 0.0;
  double quotient_sum = 0.0;
  for (Index k = 1; k <= n; ++k) {
    const Vector z = model.sample_noise(rng);
    const Vector g = rng.normal_vector(d);
    const Vector f_plain = model.increment(plain, z);
    const Vector f_perturbed = model.increment(perturbed, z);
    const double separation = (perturbed - plain).norm();
    if (separation > 0.0) quotient_sum += (f_perturbed - f_plain).norm() / separation;
    noise_norms += g.norm();

    plain += inv_n * f_plain;
    perturbed += inv_n * (f_perturbed + a.value() * g);
    if (!all_finite(plain) || !all_finite(perturbed))
      throw NumericalError(fmt::format("coupled recursion became non-finite at step {}", k));
    gap = std::max(gap, (perturbed - plain).norm());
  }

  CoupledGap out;
  out.gap = gap;
  out.bound = inv_n * a.value() * noise_norms * std::exp(inv_n * quotient_sum);
  return out;
}

}  // namespace ldp
