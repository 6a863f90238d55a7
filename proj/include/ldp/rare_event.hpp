#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ldp/action.hpp"
#include "ldp/halfspace.hpp"
#include "ldp/kernel.hpp"
#include "ldp/random.hpp"
#include "ldp/trajectory.hpp"

namespace ldp {

struct TerminalBall {
  Vector center;
  double radius = 1.0;
};

/// {f : sup_t |f(t) - reference(t)| >= epsilon}.
struct SupDistance {
  Trajectory reference;
  double epsilon = 1.0;
};

/// Path event whose probability is estimated.
struct EventSpec {
  std::variant<HalfSpace, TerminalBall, SupDistance> shape;

  static EventSpec terminal_halfspace(const Vector& normal, double level) {
    return {HalfSpace::make(normal, level)};
  }
  static EventSpec terminal_ball(const Vector& center, double radius);
  static EventSpec sup_distance(Trajectory reference, double epsilon);

  bool contains(const Trajectory& path) const;
  std::string kind() const;
};

/// sup_t |f(t) - g(t)|, exact for polygons (scans the union of both knot grids).
double sup_distance(const Trajectory& f, const Trajectory& g);

enum class EstimateMethod { naive, tilted, mixture };

struct EstimateReport {
  double p_hat = 0.0;
  double std_error = 0.0;
  Index n = 0;
  std::uint64_t samples = 0;
  std::uint64_t hits = 0;
  std::optional<double> empirical_rate;  // -log(p_hat)/n, absent when p_hat = 0
  std::optional<double> predicted_rate;
  EstimateMethod method = EstimateMethod::naive;
  std::uint64_t seed = 0;
  int workers = 1;
};

std::string_view to_string(EstimateMethod method);

/// Plain Monte Carlo frequency of `event` over independent scheme runs.
/// Replica r uses RandomStream::for_replica(seed, r); results do not depend on
/// the worker count.
EstimateReport mc_probability(const KernelPtr& model, const Vector& x, Index n, PerturbationLevel a,
                              const EventSpec& event, std::uint64_t samples, std::uint64_t seed,
                              int workers = 1);

/// Deterministic per-step tilt parameters alpha_1..alpha_n.
struct TiltSchedule {
  std::vector<Vector> per_step;
};

/// The same tilt xi0 at every step, taken from the dominating point of the
/// target at the terminal state of the limit ODE.
TiltSchedule constant_tilt(const KernelModel& model, const Vector& x, const HalfSpace& target,
                           Index n);

/// Step k uses the conjugate maximizer of the action path's cell containing
/// t = (k - 1/2)/n, evaluated at the cell midpoint.
TiltSchedule path_tilt(const KernelModel& model, const Trajectory& path, Index n,
                       const ConjugateSettings& settings = {});

struct TiltedSample {
  Vector terminal;
  double log_weight = 0.0;  // sum_k G(X_{k-1}, alpha_k) - <F_k, alpha_k>
};

/// One scheme run under the exponentially tilted Gaussian noise
/// Z ~ N(sigma(y)^T alpha_k, I).
TiltedSample tilted_sample(const AffineNoiseModel& model, const Vector& x, const TiltSchedule& tilt,
                           RandomStream& rng);

/// Importance-sampling estimate of P{Y_n(1) in target}. Requires Gaussian base
/// noise (other bases fall back to mc_probability) and a limit-ODE terminal
/// strictly outside the target. Uses constant_tilt unless a schedule is given.
EstimateReport tilted_mc_probability(const std::shared_ptr<const AffineNoiseModel>& model,
                                     const Vector& x, Index n, const HalfSpace& target,
                                     std::uint64_t samples, std::uint64_t seed, int workers = 1,
                                     const std::optional<TiltSchedule>& schedule = std::nullopt);

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
};

/// Sample mean of exp[<Y, lambda> - Phi_n^{x,a}(Y, lambda)] over scheme runs.
MeanEstimate martingale_check(const KernelPtr& model, const Vector& x, Index n, PerturbationLevel a,
                              const DualMeasure& lambda, std::uint64_t samples, std::uint64_t seed,
                              int workers = 1);

struct RatePoint {
  EstimateReport estimate;
  std::optional<double> relative_gap;  // |empirical - predicted| / predicted
};

struct RateOptions {
  Index knots = 41;
  double tolerance = 0.15;
  int workers = 1;
  MinimizerSettings solver;
};

struct RateReport {
  std::vector<RatePoint> points;
  double predicted_rate = 0.0;
  MinimizeStatus minimizer_status = MinimizeStatus::converged;
  bool trend_ok = true;
  int flagged_violations = 0;
  std::vector<std::string> failures;

  bool passed() const { return failures.empty(); }
};

/// Tilted estimates over `n_grid` compared with the minimized action over
/// paths ending in the target. Tilting follows the minimizing path.
RateReport verify_rate(const std::shared_ptr<const AffineNoiseModel>& model, const Vector& x,
                       const HalfSpace& target, const std::vector<Index>& n_grid,
                       std::uint64_t samples, std::uint64_t seed, const RateOptions& options = {});

/// Importance-sampling estimate of P{sup_t |Y_n(t) - reference(t)| >= epsilon}
/// for Gaussian base noise. The proposal is an equal-weight mixture of the
/// nominal law and, for every step k, coordinate i and sign s, a deterministic
/// noise shift that moves the linearized zero-noise path to
/// reference(k/n) + s epsilon e_i at step k. Weights are the exact inverse
/// mixture likelihood ratios, so the estimate is unbiased.
EstimateReport mixture_sup_probability(const std::shared_ptr<const AffineNoiseModel>& model,
                                       const Vector& x, Index n, const Trajectory& reference,
                                       double epsilon, std::uint64_t samples, std::uint64_t seed,
                                       int workers = 1);

/// automatic uses the mixture estimator for Gaussian base noise and naive
/// sampling otherwise.
enum class OdeEstimator { automatic, naive, mixture };

std::string_view to_string(OdeEstimator estimator);

struct OdePoint {
  Index n = 0;
  double q_hat = 0.0;
  double std_error = 0.0;
  std::uint64_t hits = 0;
  bool censored = false;  // zero estimate; excluded from the fit
  EstimateMethod method = EstimateMethod::naive;
};

struct OdeReport {
  std::vector<OdePoint> points;
  std::optional<double> slope;      // least-squares slope of log q_n against n
  std::optional<double> intercept;
  bool decreasing = false;
  std::vector<std::string> failures;

  bool passed() const { return failures.empty(); }
};

/// Estimates of q_n = P{sup |Y_n - f_x| >= epsilon} over the grid with a
/// least-squares fit of log q_n on n over the nonzero estimates. `decreasing`
/// holds only when every estimate is positive and the sequence strictly
/// decreases.
OdeReport verify_ode_convergence(const KernelPtr& model, const Vector& x, double epsilon,
                                 const std::vector<Index>& n_grid, std::uint64_t samples,
                                 std::uint64_t seed, int workers = 1, double max_slope = -0.05,
                                 OdeEstimator estimator = OdeEstimator::automatic);

}  // namespace ldp
