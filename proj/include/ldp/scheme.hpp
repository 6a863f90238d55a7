#pragma once

#include <cstdint>

#include "ldp/kernel.hpp"
#include "ldp/random.hpp"
#include "ldp/trajectory.hpp"

namespace ldp {

/// One run of X_k = X_{k-1} + (F_k(X_{k-1}) + a g_k) / n, X_0 = x.
struct SchemeRun {
  KernelPtr model;
  Vector x;
  Index n = 1;
  PerturbationLevel a;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Draws one scheme trajectory from `rng`. Per step the increment F_k is drawn
/// first and then the Gaussian g_k; g_k is consumed even when a = 0 so runs
/// that differ only in a share their F draws.
/// Throws NumericalError naming the step if the state stops being finite.
Trajectory simulate(const SchemeRun& run, RandomStream& rng);

/// simulate() on the stream seeded with run.seed.
Trajectory simulate(const SchemeRun& run);

/// Phi_n^{x,a}(f, lambda) = <x, lambda(T)> + sum_{i=1}^n G^a(f((i-1)/n), n^{-1} int phi_{n,i} dlambda).
/// `n` defaults to f.steps().
double phi_n(const KernelModel& model, const Vector& x, PerturbationLevel a, const Trajectory& f,
             const DualMeasure& lambda, Index n = 0);

/// Phi^{x,a}(f, lambda) = <x, lambda(T)> + int_0^1 G^a(f(s), lambda([s,1])) ds, integrated
/// with 5-point Gauss-Legendre on every piece between knots and atom times.
double phi_limit(const KernelModel& model, const Vector& x, PerturbationLevel a,
                 const Trajectory& f, const DualMeasure& lambda);

struct CoupledGap {
  double gap = 0.0;    // sup_k |X^{x,a}_k - X^x_k|
  double bound = 0.0;  // n^{-1} a (sum_j |g_j|) exp(n^{-1} sum_i H_i)
};

/// Runs the perturbed and unperturbed recursions on common noise (the same
/// Z_k in both, g_k only in the perturbed one) and returns the sup gap with
/// its deterministic upper bound. Draw order per step: Z_k, then g_k.
CoupledGap coupled_perturbation_gap(const AffineNoiseModel& model, const Vector& x, Index n,
                                    PerturbationLevel a, std::uint64_t seed);

}  // namespace ldp
