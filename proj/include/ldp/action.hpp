#pragma once

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "ldp/conjugate.hpp"
#include "ldp/halfspace.hpp"
#include "ldp/kernel.hpp"
#include "ldp/trajectory.hpp"

namespace ldp {

/// Rate functional of a polygon: sum over cells of the integral of
/// (G^a)^*(f(s), f'(s)).
struct ActionValue {
  double value = 0.0;            // +inf when infeasible
  std::vector<double> segments;  // per-cell contributions
  bool initial_condition_ok = true;
  bool divergent = false;        // some conjugate diverged
  int unconverged = 0;           // quadrature nodes whose conjugate hit max-iterations
  std::string reason;            // why the value is +inf, empty otherwise

  bool finite() const { return std::isfinite(value); }
};

/// Evaluates the action of `f` started at x. Each cell uses 5-point
/// Gauss-Legendre in time at the cell's constant slope. Returns +inf with a
/// reason when |f(0) - x| > 1e-12 or a conjugate diverges; conjugates that
/// stop at max-iterations are counted in `unconverged`, not turned into +inf.
ActionValue action(const KernelModel& model, const Vector& x, PerturbationLevel a,
                   const Trajectory& f, const ConjugateSettings& settings = {});

/// Discretized action plus its gradient with respect to every knot, assembled
/// from the envelope theorem: d/dz G^* = alpha^*, d/dy G^* = -grad_y G(y, alpha^*)
/// (the latter by central differences). Divergent quadrature nodes contribute the
/// surrogate value 1e12 and no gradient, and set `barrier`.
struct ActionGradient {
  double value = 0.0;
  Matrix gradient;  // d x (n+1), column k is d value / d knot k
  bool barrier = false;
};

ActionGradient action_with_gradient(const KernelModel& model, PerturbationLevel a,
                                    const Trajectory& f, const ConjugateSettings& settings = {},
                                    double fd_step = 1e-5);

struct TerminalPoint {
  Vector z;
};

struct MinimizerSettings {
  int max_iterations = 400;
  /// Certificate: projected gradient norm at or below this.
  double gradient_tolerance = 1e-7;
  double fd_step = 1e-5;
  ConjugateSettings conjugate;
};

struct ActionProblem {
  KernelPtr model;
  Vector x;
  std::variant<TerminalPoint, HalfSpace> terminal;
  Index knots = 21;  // m >= 2 knots, m - 1 cells
  PerturbationLevel a;
  MinimizerSettings solver;

  void validate() const;
};

enum class MinimizeStatus { converged, max_iterations, line_search_failed };

std::string_view to_string(MinimizeStatus status);

struct IterationRecord {
  int iteration = 0;
  double value = 0.0;
  double gradient_norm = 0.0;
  double step = 0.0;
};

struct MinimizeResult {
  Trajectory path;
  ActionValue value;
  MinimizeStatus status = MinimizeStatus::converged;
  int iterations = 0;
  double projected_gradient_norm = 0.0;
  bool warning = false;  // stopped without a stationarity certificate
  std::vector<IterationRecord> log;
};

/// Straight-line starting path for a problem: x to the terminal point, or x to
/// the foot of x on the target half-space.
Trajectory initial_path(const ActionProblem& problem);

/// BFGS over the free knots (interior knots, plus the terminal knot for a
/// half-space target, kept feasible by projection). Throws InfeasibleError if
/// the straight-line start has infinite action.
MinimizeResult minimize_action(const ActionProblem& problem);

/// Classical RK4 for f' = grad G(f, 0), f(0) = x on [0,1], returned as a polygon
/// with `steps` cells. Internally integrates with at least 2000 RK4 steps.
Trajectory limit_ode(const KernelModel& model, const Vector& x, Index steps);

}  // namespace ldp
