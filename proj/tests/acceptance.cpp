// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "gen.hpp"
#include "oracles.hpp"

#include "ldp/action.hpp"
#include "ldp/conjugate.hpp"
#include "ldp/rare_event.hpp"
#include "ldp/scheme.hpp"

using namespace ldp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::shared_ptr<const AffineNoiseModel> preset(const std::string& name) { return make_model(preset_spec(name)); }

Outcome martingale_identity() {
  const auto m = preset("gaussian-ou");
  bool pass = true;
  std::string detail;
  std::uint64_t seed = 1001;
  for (double a : {0.0, 0.5})
    for (double alpha : {0.5, 1.0}) {
      const MeanEstimate r =
          martingale_check(m, vec({0}), 50, PerturbationLevel(a), DualMeasure::point(1.0, vec({alpha})), 100000, seed++);
      const double z = std::abs(r.mean - 1.0) / r.std_error;
      pass = pass && z <= 4.0;
      detail += fmt::format("[a={} alpha={}: mean {:.5f}, {:.2f} se] ", a, alpha, r.mean, z);
    }
  return {pass, detail};
}

Outcome scaling_limit() {
  bool pass = true;
  std::string detail;
  for (const auto& name : preset_names()) {
    const auto m = preset(name);
    const Vector x = Vector::Constant(m->dim(), name == "logistic" ? 0.2 : 1.0);
    const Trajectory f = limit_ode(*m, x, 50);
    const DualMeasure lambda = DualMeasure::point(1.0, Vector::Ones(m->dim()));
    const double limit = phi_limit(*m, x, PerturbationLevel(0.0), f, lambda);
    std::vector<double> gaps;
    for (Index n : {100, 1000, 10000})
      gaps.push_back(std::abs(phi_n(*m, x, PerturbationLevel(0.0), f, lambda.scaled(double(n)), n) / double(n) - limit));
    // without drift the scaling is exact and the gap is pure rounding, so
    // there it must stay at rounding level instead of decreasing
    const bool exact = *std::max_element(gaps.begin(), gaps.end()) <= 1e-9;
    const bool ok = exact || (gaps[1] < gaps[0] && gaps[2] < gaps[1] && gaps[2] <= 1e-3);
    pass = pass && ok;
    detail += fmt::format("[{}: {:.2e} {:.2e} {:.2e}{}] ", name, gaps[0], gaps[1], gaps[2], exact ? " exact" : "");
  }
  return {pass, detail};
}

Outcome conjugate_correctness() {
  gen::Source src(3003);
  const std::vector<std::string> names = preset_names();
  double closed_worst = 0.0;
  int closed_count = 0;
  for (const auto& name : names) {
    const auto m = preset(name);
    for (int i = 0; i < 100; ++i) {
      const Vector y = src.vector(m->dim(), 1.0);
      const Vector z = m->cgf_grad(y, src.vector(m->dim(), 2.5));
      const ConjugateResult r = fenchel(*m, y, z);
      const double exact = fenchel_closed_form_affine(*m, y, z);
      closed_worst = std::max(closed_worst, r.converged() ? std::abs(r.value - exact) : INFINITY);
      ++closed_count;
    }
  }

  double young_worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto m = preset(names[static_cast<std::size_t>(i) % names.size()]);
    const Vector y = src.vector(m->dim(), 1.0);
    const Vector z = i % 4 == 0 ? src.vector(m->dim(), 2.0) : m->cgf_grad(y, src.vector(m->dim(), 2.5));
    const Vector alpha = src.vector(m->dim(), 3.0);
    const double slack = fenchel(*m, y, z).value + m->cgf(y, alpha) - z.dot(alpha);
    young_worst = std::min(young_worst, slack);
  }

  // cgf gradient against differences of the cgf, and the conjugate maximizer
  // against differences of the conjugate value.
  double grad_worst = 0.0;
  const double h = 1e-5;
  for (const auto& name : names) {
    const auto m = preset(name);
    for (int i = 0; i < 20; ++i) {
      const Vector y = src.vector(m->dim(), 1.0);
      const Vector alpha = src.vector(m->dim(), 2.0);
      const Vector g = m->cgf_grad(y, alpha);
      const Vector z = m->cgf_grad(y, src.vector(m->dim(), 1.5));
      const ConjugateResult r = fenchel(*m, y, z);
      for (Index k = 0; k < m->dim(); ++k) {
        Vector up = alpha, down = alpha;
        up[k] += h;
        down[k] -= h;
        const double fd = (m->cgf(y, up) - m->cgf(y, down)) / (2 * h);
        grad_worst = std::max(grad_worst, std::abs(fd - g[k]) / std::max(1.0, std::abs(g[k])));
        Vector zu = z, zd = z;
        zu[k] += h;
        zd[k] -= h;
        const double fdz = (fenchel(*m, y, zu).value - fenchel(*m, y, zd).value) / (2 * h);
        const double ak = (*r.argmax)[k];
        grad_worst = std::max(grad_worst, std::abs(fdz - ak) / std::max(1.0, std::abs(ak)));
      }
    }
  }
  const bool pass = closed_worst <= 1e-6 && young_worst >= -1e-9 && grad_worst <= 1e-5;
  return {pass, fmt::format("closed-form max err {:.2e} over {} points; Young-Fenchel min slack {:.2e} over 1000; "
                            "gradient max rel err {:.2e}",
                            closed_worst, closed_count, young_worst, grad_worst)};
}

Outcome cramer_benchmark() {
  const auto m = preset("gaussian");
  const HalfSpace target = HalfSpace::make(vec({1}), 1.0);
  const EstimateReport r = tilted_mc_probability(m, vec({0}), 200, target, 100000, 4004);
  ActionProblem p{m, vec({0}), target, 21, PerturbationLevel(0.0), {}};
  const double predicted = minimize_action(p).value.value;
  const double z = std::abs(r.p_hat - oracle::kNormalTailSqrt200) / r.std_error;
  const double gap = r.empirical_rate ? std::abs(*r.empirical_rate - predicted) / predicted : INFINITY;
  const bool pass = z <= 4.0 && gap <= 0.15;
  return {pass, fmt::format("p_hat {:.4e} vs oracle {:.4e} ({:.2f} se); rate {:.5f} vs predicted {:.5f} (gap {:.2f}%)",
                            r.p_hat, oracle::kNormalTailSqrt200, z, r.empirical_rate.value_or(NAN), predicted, 100 * gap)};
}

Outcome minimum_action() {
  const auto m = preset("gaussian");
  ActionProblem point{m, vec({0}), TerminalPoint{vec({1})}, 21, PerturbationLevel(0.0), {}};
  const MinimizeResult r = minimize_action(point);
  double dev = 0.0;
  for (Index k = 0; k <= 20; ++k) dev = std::max(dev, std::abs(r.path.knot(k)[0] - k / 20.0));
  const HalfSpace target = HalfSpace::make(vec({1}), 2.0);
  ActionProblem half{m, vec({0}), target, 21, PerturbationLevel(0.0), {}};
  const double value = minimize_action(half).value.value;
  const double level = dominating_point_halfspace(*m, vec({0}), target).level;
  const bool pass = dev <= 1e-3 && std::abs(r.value.value - 0.5) <= 1e-3 && std::abs(value - 2.0) <= 1e-2 &&
                    std::abs(value - level) <= 1e-4;
  return {pass, fmt::format("point: value {:.8f}, sup deviation {:.2e}; half-space: value {:.8f}, dominating level {:.8f}",
                            r.value.value, dev, value, level)};
}

Outcome ode_limit() {
  const auto m = preset("gaussian-ou");
  const std::vector<Index> grid{10, 20, 40, 80};
  const OdeReport r = verify_ode_convergence(m, vec({1}), 0.5, grid, 10000, 6006);
  const OdeReport naive = verify_ode_convergence(m, vec({1}), 0.5, grid, 10000, 6006, 1, -0.05, OdeEstimator::naive);
  std::string detail = "q_n:";
  for (const auto& p : r.points) detail += fmt::format(" {:.3e}(se {:.1e})", p.q_hat, p.std_error);
  detail += fmt::format("; slope {:.4f}; naive hits:", r.slope.value_or(NAN));
  for (const auto& p : naive.points) detail += fmt::format(" {}", p.hits);
  return {r.decreasing && r.slope && *r.slope <= -0.05, detail};
}

Outcome perturbation_coupling() {
  int violations = 0;
  int checked = 0;
  for (const auto& name : preset_names()) {
    const auto m = preset(name);
    for (double a : {0.5, 0.25, 0.125})
      for (std::uint64_t r = 0; r < 1000; ++r) {
        const CoupledGap c = coupled_perturbation_gap(*m, Vector::Constant(m->dim(), 0.5), 100,
                                                      PerturbationLevel(a), derive_seed(7007, r));
        violations += c.gap <= c.bound ? 0 : 1;
        ++checked;
      }
  }
  const auto ou = preset("gaussian-ou");
  std::vector<double> quantiles;
  for (double a : {0.5, 0.25, 0.125}) {
    std::vector<double> gaps;
    for (std::uint64_t r = 0; r < 1000; ++r)
      gaps.push_back(coupled_perturbation_gap(*ou, vec({0.5}), 100, PerturbationLevel(a), derive_seed(7008, r)).gap);
    std::sort(gaps.begin(), gaps.end());
    quantiles.push_back(gaps[static_cast<std::size_t>(std::ceil(0.99 * gaps.size())) - 1]);
  }
  const bool pass = violations == 0 && quantiles[1] < quantiles[0] && quantiles[2] < quantiles[1];
  return {pass, fmt::format("{} violations in {} realizations; 0.99-quantiles {:.4e} {:.4e} {:.4e}", violations, checked,
                            quantiles[0], quantiles[1], quantiles[2])};
}

Outcome zero_action_flow() {
  bool pass = true;
  std::string detail;
  for (const auto& name : preset_names()) {
    const auto m = preset(name);
    const Vector x = Vector::Constant(m->dim(), name == "logistic" ? 0.2 : 0.5);
    const ActionValue v = action(*m, x, PerturbationLevel(0.0), limit_ode(*m, x, 200));
    pass = pass && v.finite() && v.value <= 1e-6;
    detail += fmt::format("{} {:.1e}; ", name, v.value);
  }
  return {pass, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 martingale identity", martingale_identity},
      {"2 scaling limit of the dual functional", scaling_limit},
      {"3 conjugate correctness", conjugate_correctness},
      {"4 Cramer benchmark", cramer_benchmark},
      {"5 minimum-action correctness", minimum_action},
      {"6 ODE limit", ode_limit},
      {"7 perturbation coupling", perturbation_coupling},
      {"8 zero-action flow", zero_action_flow},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    fmt::print("{} criterion {}: {} ({:.1f}s)\n", o.pass ? "PASS" : "FAIL", name, o.detail, secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
