#include "ldp/rare_event.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ldp/conjugate.hpp"
#include "ldp/errors.hpp"
#include "ldp/parallel.hpp"
#include "ldp/scheme.hpp"

namespace ldp {

namespace {

constexpr Index kReferenceSteps = 2000;

struct Moments {
  double mean = 0.0;
  double std_error = 0.0;
};

// Sample mean and standard error (unbiased variance / N) in replica order.
Moments moments(const std::vector<double>& values) {
  Moments m;
  const auto count = static_cast<double>(values.size());
  if (values.empty()) return m;
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / count;
  if (values.size() < 2) return m;
  double sq = 0.0;
  for (double v : values) sq += (v - m.mean) * (v - m.mean);
  m.std_error = std::sqrt(sq / (count - 1.0) / count);
  return m;
}

void check_samples(std::uint64_t samples) {
  if (samples < 1) throw PreconditionError("need at least one sample");
}

}  // namespace

EventSpec EventSpec::terminal_ball(const Vector& center, double radius) {
  if (!(radius > 0.0) || !all_finite(center)) throw PreconditionError("ball event needs radius > 0");
  return {TerminalBall{center, radius}};
}

EventSpec EventSpec::sup_distance(Trajectory reference, double epsilon) {
  if (!(epsilon > 0.0)) throw PreconditionError("sup-distance event needs epsilon > 0");
  return {SupDistance{std::move(reference), epsilon}};
}

bool EventSpec::contains(const Trajectory& path) const {
  const Vector end = path.knot(path.steps());
  if (const auto* h = std::get_if<HalfSpace>(&shape)) return h->contains(end);
  if (const auto* b = std::get_if<TerminalBall>(&shape)) return (end - b->center).norm() <= b->radius;
  const auto& s = std::get<SupDistance>(shape);
  return ldp::sup_distance(path, s.reference) >= s.epsilon;
}

std::string EventSpec::kind() const {
  if (std::holds_alternative<HalfSpace>(shape)) return "terminal-halfspace";
  if (std::holds_alternative<TerminalBall>(shape)) return "terminal-ball";
  return "sup-distance";
}

double sup_distance(const Trajectory& f, const Trajectory& g) {
  if (f.dim() != g.dim()) throw PreconditionError("sup_distance: dimension mismatch");
  const Index nf = f.steps();
  const Index ng = g.steps();
  double best = 0.0;
  // Merge the two uniform grids i/nf and j/ng.
  Index i = 0;
  Index j = 0;
  while (i <= nf || j <= ng) {
    double t;
    if (j > ng || (i <= nf && i * ng <= j * nf)) {
      t = f.time(i);
      if (j <= ng && i * ng == j * nf) ++j;
      ++i;
    } else {
      t = g.time(j);
      ++j;
    }
    best = std::max(best, (f.eval(t) - g.eval(t)).norm());
  }
  return best;
}

std::string_view to_string(EstimateMethod method) {
  switch (method) {
    case EstimateMethod::naive: return "naive";
    case EstimateMethod::tilted: return "tilted";
    case EstimateMethod::mixture: return "mixture";
  }
  return "unknown";
}

std::string_view to_string(OdeEstimator estimator) {
  switch (estimator) {
    case OdeEstimator::automatic: return "automatic";
    case OdeEstimator::naive: return "naive";
    case OdeEstimator::mixture: return "mixture";
  }
  return "unknown";
}

EstimateReport mc_probability(const KernelPtr& model, const Vector& x, Index n, PerturbationLevel a,
                              const EventSpec& event, std::uint64_t samples, std::uint64_t seed,
                              int workers) {
  check_samples(samples);
  SchemeRun run{model, x, n, a, seed};
  run.validate();

  const auto hits = run_replicas<char>(samples, workers, [&](std::uint64_t r) -> char {
    RandomStream rng = RandomStream::for_replica(seed, r);
    return event.contains(simulate(run, rng)) ? 1 : 0;
  });

  EstimateReport out;
  out.n = n;
  out.samples = samples;
  out.seed = seed;
  out.workers = workers;
  out.method = EstimateMethod::naive;
  for (char h : hits) out.hits += static_cast<std::uint64_t>(h);
  out.p_hat = static_cast<double>(out.hits) / static_cast<double>(samples);
  out.std_error = std::sqrt(out.p_hat * (1.0 - out.p_hat) / static_cast<double>(samples));
  if (out.p_hat > 0.0) out.empirical_rate = -std::log(out.p_hat) / static_cast<double>(n);
  return out;
}

TiltSchedule constant_tilt(const KernelModel& model, const Vector& x, const HalfSpace& target,
                           Index n) {
  const Trajectory ode = limit_ode(model, x, kReferenceSteps);
  const Vector terminal = ode.knot(ode.steps());
  const DominatingPointResult dp = dominating_point_halfspace(model, terminal, target);
  return TiltSchedule{std::vector<Vector>(static_cast<std::size_t>(n), dp.multiplier)};
}

TiltSchedule path_tilt(const KernelModel& model, const Trajectory& path, Index n,
                       const ConjugateSettings& settings) {
  std::vector<Vector> cell_tilt;
  cell_tilt.reserve(static_cast<std::size_t>(path.steps()));
  for (Index k = 1; k <= path.steps(); ++k) {
    const Vector mid = 0.5 * (path.knot(k - 1) + path.knot(k));
    const ConjugateResult r = fenchel(model, mid, path.slope(k), settings);
    if (!r.argmax)
      throw NumericalError(fmt::format("no finite tilt on cell {} of the action path", k));
    cell_tilt.push_back(*r.argmax);
  }
  TiltSchedule out;
  out.per_step.reserve(static_cast<std::size_t>(n));
  for (Index k = 1; k <= n; ++k) {
    const double t = (static_cast<double>(k) - 0.5) / static_cast<double>(n);
    out.per_step.push_back(cell_tilt[static_cast<std::size_t>(path.cell(t) - 1)]);
  }
  return out;
}

TiltedSample tilted_sample(const AffineNoiseModel& model, const Vector& x, const TiltSchedule& tilt,
                           RandomStream& rng) {
  const auto n = static_cast<Index>(tilt.per_step.size());
  if (n < 1) throw PreconditionError("tilt schedule is empty");
  const double inv_n = 1.0 / static_cast<double>(n);

  TiltedSample out;
  Vector state = x;
  for (Index k = 0; k < n; ++k) {
    const Vector& alpha = tilt.per_step[static_cast<std::size_t>(k)];
    const Matrix sigma = model.sigma(state);
    const Vector z = sigma.transpose() * alpha + model.sample_noise(rng);
    const Vector increment = model.drift(state) + sigma * z;
    out.log_weight += model.cgf(state, alpha) - increment.dot(alpha);
    state += inv_n * increment;
    if (!all_finite(state))
      throw NumericalError(fmt::format("tilted scheme became non-finite at step {}", k + 1));
  }
  out.terminal = state;
  return out;
}

EstimateReport tilted_mc_probability(const std::shared_ptr<const AffineNoiseModel>& model,
                                     const Vector& x, Index n, const HalfSpace& target,
                                     std::uint64_t samples, std::uint64_t seed, int workers,
                                     const std::optional<TiltSchedule>& schedule) {
  check_samples(samples);
  if (!model) throw PreconditionError("tilted estimator needs a model");
  if (n < 1) throw PreconditionError("tilted estimator needs n >= 1");
  if (x.size() != model->dim()) throw PreconditionError("start point has wrong dimension");

  const Trajectory ode = limit_ode(*model, x, kReferenceSteps);
  if (target.contains(ode.knot(ode.steps())))
    throw PreconditionError("the limit path ends inside the target; the event is not rare");

  if (!model->has_gaussian_noise())
    return mc_probability(model, x, n, PerturbationLevel{}, EventSpec{target}, samples, seed, workers);

  const TiltSchedule tilt = schedule ? *schedule : constant_tilt(*model, x, target, n);
  if (static_cast<Index>(tilt.per_step.size()) != n)
    throw PreconditionError("tilt schedule length must equal n");

  std::vector<double> weighted = run_replicas<double>(samples, workers, [&](std::uint64_t r) {
    RandomStream rng = RandomStream::for_replica(seed, r);
    const TiltedSample s = tilted_sample(*model, x, tilt, rng);
    return target.contains(s.terminal) ? std::exp(s.log_weight) : 0.0;
  });

  EstimateReport out;
  out.n = n;
  out.samples = samples;
  out.seed = seed;
  out.workers = workers;
  out.method = EstimateMethod::tilted;
  for (double w : weighted) out.hits += w > 0.0 ? 1 : 0;
  const Moments m = moments(weighted);
  out.p_hat = m.mean;
  out.std_error = m.std_error;
  if (out.p_hat > 0.0) out.empirical_rate = -std::log(out.p_hat) / static_cast<double>(n);
  return out;
}

MeanEstimate martingale_check(const KernelPtr& model, const Vector& x, Index n, PerturbationLevel a,
                              const DualMeasure& lambda, std::uint64_t samples, std::uint64_t seed,
                              int workers) {
  check_samples(samples);
  SchemeRun run{model, x, n, a, seed};
  run.validate();

  const auto values = run_replicas<double>(samples, workers, [&](std::uint64_t r) {
    RandomStream rng = RandomStream::for_replica(seed, r);
    const Trajectory y = simulate(run, rng);
    return std::exp(dual_pairing(y, lambda) - phi_n(*model, x, a, y, lambda));
  });
  const Moments m = moments(values);
  return MeanEstimate{m.mean, m.std_error, samples};
}

RateReport verify_rate(const std::shared_ptr<const AffineNoiseModel>& model, const Vector& x,
                       const HalfSpace& target, const std::vector<Index>& n_grid,
                       std::uint64_t samples, std::uint64_t seed, const RateOptions& options) {
  if (!model) throw PreconditionError("verify_rate needs a model");
  if (n_grid.empty()) throw PreconditionError("verify_rate needs a non-empty n grid");
  const Trajectory ode = limit_ode(*model, x, kReferenceSteps);
  if (target.contains(ode.knot(ode.steps())))
    throw PreconditionError("the limit path ends inside the target; the event is not rare");

  ActionProblem problem;
  problem.model = model;
  problem.x = x;
  problem.terminal = target;
  problem.knots = options.knots;
  problem.solver = options.solver;
  const MinimizeResult best = minimize_action(problem);

  RateReport report;
  report.predicted_rate = best.value.value;
  report.minimizer_status = best.status;
  if (best.warning)
    report.failures.push_back(
        fmt::format("action minimizer stopped without certificate ({})", to_string(best.status)));

  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    const Index n = n_grid[g];
    const std::uint64_t point_seed = derive_seed(seed, g);
    std::optional<TiltSchedule> tilt;
    if (model->has_gaussian_noise()) tilt = path_tilt(*model, best.path, n, options.solver.conjugate);
    RatePoint point;
    point.estimate =
        tilted_mc_probability(model, x, n, target, samples, point_seed, options.workers, tilt);
    point.estimate.predicted_rate = report.predicted_rate;
    if (point.estimate.empirical_rate && report.predicted_rate > 0.0)
      point.relative_gap =
          std::abs(*point.estimate.empirical_rate - report.predicted_rate) / report.predicted_rate;
    report.points.push_back(point);
  }

  // |empirical - predicted| should not grow along the grid; a rise within two
  // standard errors of the rate difference is flagged, a second one fails.
  for (std::size_t g = 1; g < report.points.size(); ++g) {
    const auto& prev = report.points[g - 1].estimate;
    const auto& cur = report.points[g].estimate;
    if (!prev.empirical_rate || !cur.empirical_rate) continue;
    const double gap_prev = std::abs(*prev.empirical_rate - report.predicted_rate);
    const double gap_cur = std::abs(*cur.empirical_rate - report.predicted_rate);
    if (gap_cur <= gap_prev) continue;
    const double se_prev = prev.std_error / (prev.p_hat * static_cast<double>(prev.n));
    const double se_cur = cur.std_error / (cur.p_hat * static_cast<double>(cur.n));
    if (gap_cur - gap_prev <= 2.0 * std::hypot(se_prev, se_cur))
      ++report.flagged_violations;
    else
      report.trend_ok = false;
  }
  if (report.flagged_violations > 1) report.trend_ok = false;
  if (!report.trend_ok) report.failures.push_back("rate gap does not shrink along the n grid");

  const RatePoint& last = report.points.back();
  if (!last.relative_gap)
    report.failures.push_back(fmt::format("no hits at n = {}; rate unavailable", last.estimate.n));
  else if (*last.relative_gap > options.tolerance)
    report.failures.push_back(fmt::format("relative rate gap {:.4f} at n = {} exceeds {:.4f}",
                                          *last.relative_gap, last.estimate.n, options.tolerance));
  return report;
}

namespace {

// Jacobian of the drift by central differences.
Matrix drift_jacobian(const AffineNoiseModel& model, const Vector& y) {
  const Index d = y.size();
  Matrix jac(d, d);
  Vector probe = y;
  for (Index i = 0; i < d; ++i) {
    const double h = 1e-6 * (1.0 + std::abs(y[i]));
    probe[i] = y[i] + h;
    const Vector up = model.drift(probe);
    probe[i] = y[i] - h;
    const Vector down = model.drift(probe);
    probe[i] = y[i];
    jac.col(i) = (up - down) / (2.0 * h);
  }
  return jac;
}

// Noise shifts of every mixture component; column k - 1 is the shift at step k.
std::vector<Matrix> mixture_shifts(const AffineNoiseModel& model, const Vector& x, Index n,
                                   const Trajectory& reference, double epsilon) {
  const Index d = model.dim();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<Vector> mean_path{x};
  std::vector<Matrix> step_jacobian;
  std::vector<Matrix> sigmas;
  for (Index k = 1; k <= n; ++k) {
    const Vector& y = mean_path.back();
    sigmas.push_back(model.sigma(y));
    step_jacobian.push_back(Matrix::Identity(d, d) + inv_n * drift_jacobian(model, y));
    mean_path.push_back(y + inv_n * model.mean(y));
  }

  std::vector<Matrix> shifts;
  for (Index k = 1; k <= n; ++k)
    for (Index i = 0; i < d; ++i)
      for (double sign : {-1.0, 1.0}) {
        const double delta = reference.eval(static_cast<double>(k) * inv_n)[i] + sign * epsilon -
                             mean_path[static_cast<std::size_t>(k)][i];
        // row = e_i^T J(k, j), walked backward from j = k
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Unit(d, i);
        Matrix dirs = Matrix::Zero(d, n);
        double energy = 0.0;
        for (Index j = k; j >= 1; --j) {
          const auto idx = static_cast<std::size_t>(j - 1);
          dirs.col(j - 1) = sigmas[idx].transpose() * row.transpose();
          energy += dirs.col(j - 1).squaredNorm();
          row = row * step_jacobian[idx];
        }
        if (!(energy > 0.0)) continue;
        // displacement e_i^T delta_x_k = sum_j <dirs_j, mu_j> / n
        shifts.push_back(dirs * (delta * static_cast<double>(n) / energy));
      }
  return shifts;
}

}  // namespace

EstimateReport mixture_sup_probability(const std::shared_ptr<const AffineNoiseModel>& model,
                                       const Vector& x, Index n, const Trajectory& reference,
                                       double epsilon, std::uint64_t samples, std::uint64_t seed,
                                       int workers) {
  check_samples(samples);
  if (!model) throw PreconditionError("mixture estimator needs a model");
  if (!model->has_gaussian_noise()) throw PreconditionError("mixture estimator needs Gaussian base noise");
  if (n < 1) throw PreconditionError("mixture estimator needs n >= 1");
  if (x.size() != model->dim() || reference.dim() != model->dim())
    throw PreconditionError("mixture estimator: dimension mismatch");
  if (!(epsilon > 0.0)) throw PreconditionError("mixture estimator needs epsilon > 0");

  std::vector<Matrix> shifts = mixture_shifts(*model, x, n, reference, epsilon);
  shifts.insert(shifts.begin(), Matrix::Zero(model->dim(), n));  // nominal component
  const auto components = static_cast<Index>(shifts.size());
  const double log_components = std::log(static_cast<double>(components));
  const double inv_n = 1.0 / static_cast<double>(n);

  const std::vector<double> weighted = run_replicas<double>(samples, workers, [&](std::uint64_t r) {
    RandomStream rng = RandomStream::for_replica(seed, r);
    const auto pick = std::min<Index>(components - 1, static_cast<Index>(rng.uniform() * components));
    const Matrix& chosen = shifts[static_cast<std::size_t>(pick)];
    Vector log_ratio = Vector::Zero(components);
    Matrix knots(model->dim(), n + 1);
    knots.col(0) = x;
    Vector state = x;
    for (Index k = 0; k < n; ++k) {
      const Vector z = chosen.col(k) + model->sample_noise(rng);
      for (Index c = 0; c < components; ++c) {
        const auto mu = shifts[static_cast<std::size_t>(c)].col(k);
        log_ratio[c] += mu.dot(z) - 0.5 * mu.squaredNorm();
      }
      state += inv_n * model->increment(state, z);
      if (!all_finite(state))
        throw NumericalError(fmt::format("mixture-sampled scheme became non-finite at step {}", k + 1));
      knots.col(k + 1) = state;
    }
    if (sup_distance(Trajectory(std::move(knots)), reference) < epsilon) return 0.0;
    const double top = log_ratio.maxCoeff();
    const double log_mixture = top + std::log((log_ratio.array() - top).exp().sum()) - log_components;
    return std::exp(-log_mixture);
  });

  EstimateReport out;
  out.n = n;
  out.samples = samples;
  out.seed = seed;
  out.workers = workers;
  out.method = EstimateMethod::mixture;
  for (double w : weighted) out.hits += w > 0.0 ? 1 : 0;
  const Moments m = moments(weighted);
  out.p_hat = m.mean;
  out.std_error = m.std_error;
  if (out.p_hat > 0.0) out.empirical_rate = -std::log(out.p_hat) / static_cast<double>(n);
  return out;
}

OdeReport verify_ode_convergence(const KernelPtr& model, const Vector& x, double epsilon,
                                 const std::vector<Index>& n_grid, std::uint64_t samples,
                                 std::uint64_t seed, int workers, double max_slope,
                                 OdeEstimator estimator) {
  if (!model) throw PreconditionError("verify_ode_convergence needs a model");
  if (n_grid.empty()) throw PreconditionError("verify_ode_convergence needs a non-empty n grid");
  const Trajectory reference = limit_ode(*model, x, kReferenceSteps);
  const EventSpec event = EventSpec::sup_distance(reference, epsilon);

  const auto affine = std::dynamic_pointer_cast<const AffineNoiseModel>(model);
  const bool gaussian = affine && affine->has_gaussian_noise();
  if (estimator == OdeEstimator::mixture && !gaussian)
    throw PreconditionError("the mixture estimator needs an affine model with Gaussian base noise");
  const bool use_mixture =
      estimator == OdeEstimator::mixture || (estimator == OdeEstimator::automatic && gaussian);

  OdeReport report;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    const EstimateReport e =
        use_mixture ? mixture_sup_probability(affine, x, n_grid[g], reference, epsilon, samples,
                                              derive_seed(seed, g), workers)
                    : mc_probability(model, x, n_grid[g], PerturbationLevel{}, event, samples,
                                     derive_seed(seed, g), workers);
    report.points.push_back(OdePoint{n_grid[g], e.p_hat, e.std_error, e.hits, e.p_hat == 0.0, e.method});
  }

  report.decreasing = true;
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t g = 0; g < report.points.size(); ++g) {
    const OdePoint& p = report.points[g];
    if (p.censored) {
      report.decreasing = false;
      continue;
    }
    if (g > 0 && !(p.q_hat < report.points[g - 1].q_hat)) report.decreasing = false;
    xs.push_back(static_cast<double>(p.n));
    ys.push_back(std::log(p.q_hat));
  }

  if (xs.size() >= 2) {
    const Eigen::Map<const Vector> xv(xs.data(), static_cast<Index>(xs.size()));
    const Eigen::Map<const Vector> yv(ys.data(), static_cast<Index>(ys.size()));
    const double xm = xv.mean();
    const double ym = yv.mean();
    const double sxx = (xv.array() - xm).square().sum();
    if (sxx > 0.0) {
      report.slope = ((xv.array() - xm) * (yv.array() - ym)).sum() / sxx;
      report.intercept = ym - *report.slope * xm;
    }
  }

  if (!report.decreasing) report.failures.push_back("q_n estimates are not all positive and strictly decreasing");
  if (!report.slope)
    report.failures.push_back("fewer than two nonzero estimates; no log-linear fit");
  else if (*report.slope > max_slope)
    report.failures.push_back(
        fmt::format("fitted log-slope {:.4f} is above {:.4f}", *report.slope, max_slope));
  return report;
}

}  // namespace ldp
