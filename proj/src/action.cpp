#include "ldp/action.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "ldp/errors.hpp"
#include "ldp/quadrature.hpp"

namespace ldp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInitialTolerance = 1e-12;
constexpr double kBarrierValue = 1e12;
constexpr int kMinOdeSteps = 2000;

// Central differences of y -> G(y, alpha).
Vector state_gradient(const KernelModel& model, const Vector& y, const Vector& alpha, double step) {
  Vector g(y.size());
  Vector probe = y;
  for (Index i = 0; i < y.size(); ++i) {
    const double h = step * (1.0 + std::abs(y[i]));
    probe[i] = y[i] + h;
    const double up = model.cgf(probe, alpha);
    probe[i] = y[i] - h;
    const double down = model.cgf(probe, alpha);
    probe[i] = y[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Free knots of a problem: interior knots, and the terminal knot for a half-space.
struct FreeKnots {
  Index first = 1;
  Index last = 0;  // inclusive
  Index dim = 1;

  Index count() const { return last >= first ? last - first + 1 : 0; }
  Index size() const { return count() * dim; }

  Vector pack(const Matrix& columns) const {
    Vector u(size());
    for (Index k = first; k <= last; ++k) u.segment((k - first) * dim, dim) = columns.col(k);
    return u;
  }
  void unpack(const Vector& u, Matrix& columns) const {
    for (Index k = first; k <= last; ++k) columns.col(k) = u.segment((k - first) * dim, dim);
  }
};

}  // namespace

ActionValue action(const KernelModel& model, const Vector& x, PerturbationLevel a,
                   const Trajectory& f, const ConjugateSettings& settings) {
  if (x.size() != model.dim() || f.dim() != model.dim())
    throw PreconditionError("action: dimension mismatch");

  ActionValue out;
  if ((Vector(f.knot(0)) - x).norm() > kInitialTolerance) {
    out.value = kInf;
    out.initial_condition_ok = false;
    out.reason = "initial condition";
    return out;
  }

  const auto& rule = GaussLegendre5::unit();
  const Index n = f.steps();
  const double h = 1.0 / static_cast<double>(n);
  out.segments.reserve(static_cast<std::size_t>(n));
  double total = 0.0;
  for (Index k = 1; k <= n; ++k) {
    const Vector slope = f.slope(k);
    const Vector left = f.knot(k - 1);
    const Vector chord = f.knot(k) - f.knot(k - 1);
    double cell = 0.0;
    for (int q = 0; q < 5; ++q) {
      const Vector y = left + rule.nodes[q] * chord;
      const ConjugateResult r = perturbed_fenchel(model, a, y, slope, settings);
      if (r.divergent()) {
        cell = kInf;
        break;
      }
      if (!r.converged()) ++out.unconverged;
      cell += rule.weights[q] * r.value;
    }
    cell *= h;
    out.segments.push_back(cell);
    if (!std::isfinite(cell)) {
      out.divergent = true;
      out.reason = fmt::format("divergent conjugate on cell {}", k);
    }
    total += cell;
  }
  out.value = out.divergent ? kInf : total;
  return out;
}

ActionGradient action_with_gradient(const KernelModel& model, PerturbationLevel a,
                                    const Trajectory& f, const ConjugateSettings& settings,
                                    double fd_step) {
  const auto& rule = GaussLegendre5::unit();
  const Index n = f.steps();
  const Index d = f.dim();
  const double h = 1.0 / static_cast<double>(n);

  ActionGradient out;
  out.gradient = Matrix::Zero(d, n + 1);
  for (Index k = 1; k <= n; ++k) {
    const Vector slope = f.slope(k);
    const Vector left = f.knot(k - 1);
    const Vector chord = f.knot(k) - f.knot(k - 1);
    for (int q = 0; q < 5; ++q) {
      const double theta = rule.nodes[q];
      const double w = rule.weights[q];
      const Vector y = left + theta * chord;
      const ConjugateResult r = perturbed_fenchel(model, a, y, slope, settings);
      if (r.divergent() || !r.argmax) {
        out.value += h * w * kBarrierValue;
        out.barrier = true;
        continue;
      }
      out.value += h * w * r.value;
      const Vector& alpha = *r.argmax;
      const Vector dy = -state_gradient(model, y, alpha, fd_step);
      out.gradient.col(k) += w * (h * theta * dy + alpha);
      out.gradient.col(k - 1) += w * (h * (1.0 - theta) * dy - alpha);
    }
  }
  return out;
}

void ActionProblem::validate() const {
  if (!model) throw PreconditionError("action problem has no model");
  if (knots < 2) throw PreconditionError("action problem needs at least 2 knots");
  if (x.size() != model->dim() || !all_finite(x))
    throw PreconditionError("action problem start point is invalid");
  if (const auto* p = std::get_if<TerminalPoint>(&terminal)) {
    if (p->z.size() != model->dim() || !all_finite(p->z))
      throw PreconditionError("terminal point is invalid");
  } else {
    const auto& hs = std::get<HalfSpace>(terminal);
    if (hs.normal.size() != model->dim()) throw PreconditionError("terminal half-space has wrong dimension");
  }
}

std::string_view to_string(MinimizeStatus status) {
  switch (status) {
    case MinimizeStatus::converged: return "converged";
    case MinimizeStatus::max_iterations: return "max-iterations";
    case MinimizeStatus::line_search_failed: return "line-search-failed";
  }
  return "unknown";
}

Trajectory initial_path(const ActionProblem& problem) {
  problem.validate();
  const Index cells = problem.knots - 1;
  Vector end;
  if (const auto* p = std::get_if<TerminalPoint>(&problem.terminal))
    end = p->z;
  else
    end = std::get<HalfSpace>(problem.terminal).project(problem.x);
  return Trajectory::line(problem.x, end, cells);
}

MinimizeResult minimize_action(const ActionProblem& problem) {
  problem.validate();
  const KernelModel& model = *problem.model;
  const MinimizerSettings& s = problem.solver;
  const HalfSpace* target = std::get_if<HalfSpace>(&problem.terminal);

  MinimizeResult result;
  result.path = initial_path(problem);
  const ActionValue start = action(model, problem.x, problem.a, result.path, s.conjugate);
  if (!start.finite())
    throw InfeasibleError(fmt::format("straight-line start has infinite action ({})", start.reason));

  const Index m = problem.knots;
  FreeKnots free{1, target ? m - 1 : m - 2, model.dim()};
  const Index d = model.dim();
  const Index terminal_offset = (m - 1 - free.first) * d;

  auto evaluate = [&](const Trajectory& path) {
    return action_with_gradient(model, problem.a, path, s.conjugate, s.fd_step);
  };
  // Feasible point for a trial vector: terminal knot projected onto the target.
  auto feasible = [&](Vector u) {
    if (target) u.segment(terminal_offset, d) = target->project(u.segment(terminal_offset, d));
    return u;
  };
  // Gradient with the outward normal component removed when the terminal
  // constraint is active and the descent direction would leave the target.
  auto on_boundary = [&](const Vector& u) {
    return target && target->margin(u.segment(terminal_offset, d)) <= 1e-12 * (1.0 + std::abs(target->level));
  };
  // Active when the terminal knot sits on the boundary and the gradient pushes
  // it outward; the normal component is then frozen.
  auto active = [&](const Vector& u, const Vector& g) {
    return on_boundary(u) && g.segment(terminal_offset, d).dot(target->normal) > 0.0;
  };
  auto restrict = [&](bool is_active, Vector v) {
    if (is_active) {
      auto vt = v.segment(terminal_offset, d);
      vt -= vt.dot(target->normal) * target->normal;
    }
    return v;
  };

  Matrix columns = result.path.knots();
  Vector u = free.pack(columns);
  ActionGradient current = evaluate(result.path);
  Vector grad = free.pack(current.gradient);
  Matrix inv_hessian = Matrix::Identity(u.size(), u.size());
  bool scaled = false;
  bool fresh = true;  // inverse Hessian is the identity

  result.status = MinimizeStatus::max_iterations;
  for (int iter = 0; iter <= s.max_iterations; ++iter) {
    const bool is_active = active(u, grad);
    const Vector pg = restrict(is_active, grad);
    result.iterations = iter;
    result.projected_gradient_norm = pg.norm();
    if (u.size() == 0 || result.projected_gradient_norm <= s.gradient_tolerance) {
      result.log.push_back({iter, current.value, result.projected_gradient_norm, 0.0});
      result.status = MinimizeStatus::converged;
      break;
    }
    if (iter == s.max_iterations) {
      result.log.push_back({iter, current.value, result.projected_gradient_norm, 0.0});
      break;
    }

    Vector dir = restrict(is_active, -(inv_hessian * pg));
    if (dir.dot(pg) >= 0.0) {
      inv_hessian.setIdentity();
      dir = -pg;
    }

    double step = 1.0;
    bool accepted = false;
    Vector u_next;
    ActionGradient next;
    for (int halving = 0; halving < 60; ++halving) {
      u_next = feasible(u + step * dir);
      free.unpack(u_next, columns);
      next = evaluate(Trajectory(columns));
      if (!next.barrier && next.value <= current.value + 1e-4 * grad.dot(u_next - u)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    // A collapsed step means the quasi-Newton model is stale; retry once from
    // steepest descent before giving up.
    const bool stalled = accepted && step * dir.norm() <= 1e-14 * (1.0 + u.norm());
    result.log.push_back({iter, current.value, result.projected_gradient_norm, accepted ? step : 0.0});
    if (!accepted || stalled) {
      if (!fresh) {
        inv_hessian.setIdentity();
        scaled = false;
        fresh = true;
        continue;
      }
      free.unpack(u, columns);
      result.status = MinimizeStatus::line_search_failed;
      break;
    }

    const Vector grad_next = free.pack(next.gradient);
    const Vector sv = u_next - u;
    const Vector yv = grad_next - grad;
    const double sy = sv.dot(yv);
    if (sy > 1e-14 * sv.norm() * yv.norm()) {
      if (!scaled) {
        inv_hessian *= sy / yv.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Vector hy = inv_hessian * yv;
      inv_hessian += (rho * rho * yv.dot(hy) + rho) * (sv * sv.transpose()) -
                     rho * (hy * sv.transpose() + sv * hy.transpose());
    }
    fresh = false;
    u = u_next;
    grad = grad_next;
    current = std::move(next);
  }

  free.unpack(u, columns);
  result.path = Trajectory(columns);
  result.value = action(model, problem.x, problem.a, result.path, s.conjugate);
  result.warning = result.status != MinimizeStatus::converged;
  return result;
}

Trajectory limit_ode(const KernelModel& model, const Vector& x, Index steps) {
  if (steps < 1) throw PreconditionError("limit_ode needs steps >= 1");
  if (x.size() != model.dim() || !all_finite(x)) throw PreconditionError("limit_ode: invalid start");

  const Index sub = std::max<Index>(1, (kMinOdeSteps + steps - 1) / steps);
  const double h = 1.0 / static_cast<double>(steps * sub);
  auto field = [&](const Vector& y) { return model.mean(y); };

  Matrix knots(model.dim(), steps + 1);
  knots.col(0) = x;
  Vector y = x;
  for (Index k = 1; k <= steps; ++k) {
    for (Index j = 0; j < sub; ++j) {
      const Vector k1 = field(y);
      const Vector k2 = field(y + 0.5 * h * k1);
      const Vector k3 = field(y + 0.5 * h * k2);
      const Vector k4 = field(y + h * k3);
      y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!all_finite(y))
      throw NumericalError(fmt::format("limit ODE became non-finite near t = {}", double(k) / steps));
    knots.col(k) = y;
  }
  return Trajectory(std::move(knots));
}

}  // namespace ldp
