#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "ldp/errors.hpp"
#include "ldp/types.hpp"

namespace ldp {

/// Tent-ramp basis on the uniform grid of [0,1] with n cells:
/// phi_{n,i}(t) = (n t - (i-1)) on [(i-1)/n, i/n), 1 on [i/n, 1], 0 before.
/// Any polygon with knots a_0..a_n equals a_0 + sum_i (a_i - a_{i-1}) phi_{n,i}.
template <typename Scalar>
Scalar basis_phi(Index n, Index i, Scalar t) {
  if (n < 1 || i < 1 || i > n) throw PreconditionError("basis_phi: index out of range");
  if (!(t >= Scalar(0) && t <= Scalar(1))) throw PreconditionError("basis_phi: t outside [0,1]");
  const Scalar lo = Scalar(i - 1) / Scalar(n);
  const Scalar hi = Scalar(i) / Scalar(n);
  if (t >= hi) return Scalar(1);
  if (t >= lo) return Scalar(n) * t - Scalar(i - 1);
  return Scalar(0);
}

/// Piecewise-linear path on [0,1] with knots at t = k/n, k = 0..n.
/// Knots are stored as columns of a d x (n+1) matrix.
template <typename Scalar>
class BasicTrajectory {
 public:
  using VectorType = VectorX<Scalar>;
  using KnotMatrix = MatrixX<Scalar>;

  BasicTrajectory() = default;

  explicit BasicTrajectory(KnotMatrix knots) : knots_(std::move(knots)) {
    if (knots_.cols() < 2 || knots_.rows() < 1)
      throw PreconditionError("trajectory needs dimension >= 1 and at least two knots");
  }

  /// Constant path at x with n cells.
  static BasicTrajectory constant(const VectorType& x, Index n) {
    return BasicTrajectory(x.replicate(1, n + 1));
  }

  /// Straight line from `from` to `to` with n cells.
  static BasicTrajectory line(const VectorType& from, const VectorType& to, Index n) {
    KnotMatrix k(from.size(), n + 1);
    for (Index j = 0; j <= n; ++j) {
      const Scalar s = Scalar(j) / Scalar(n);
      k.col(j) = (Scalar(1) - s) * from + s * to;
    }
    return BasicTrajectory(std::move(k));
  }

  Index steps() const { return knots_.cols() - 1; }
  Index dim() const { return knots_.rows(); }
  Scalar time(Index k) const { return Scalar(k) / Scalar(steps()); }

  auto knot(Index k) const { return knots_.col(k); }
  auto knot(Index k) { return knots_.col(k); }
  const KnotMatrix& knots() const { return knots_; }
  KnotMatrix& knots() { return knots_; }

  /// Index of the cell [(k-1)/n, k/n] holding t, k in 1..n.
  Index cell(Scalar t) const {
    const Index n = steps();
    const auto k = static_cast<Index>(std::floor(t * Scalar(n))) + 1;
    return std::clamp<Index>(k, 1, n);
  }

  /// Value of the interpolant at t in [0,1]. Exact at knots.
  VectorType eval(Scalar t) const {
    if (!(t >= Scalar(0) && t <= Scalar(1)))
      throw PreconditionError(fmt::format("trajectory evaluated outside [0,1] (t = {})", double(t)));
    const Index n = steps();
    const Scalar scaled = t * Scalar(n);
    // t = k/n can round to just below k after scaling
    const Scalar nearest = std::round(scaled);
    if (nearest >= Scalar(0) && nearest <= Scalar(n) && nearest / Scalar(n) == t)
      return knots_.col(static_cast<Index>(nearest));
    const Scalar floor = std::floor(scaled);
    const auto k = static_cast<Index>(floor);
    if (k >= n) return knots_.col(n);
    const Scalar frac = scaled - floor;
    if (frac == Scalar(0)) return knots_.col(k);
    return knots_.col(k) + frac * (knots_.col(k + 1) - knots_.col(k));
  }

  /// Constant slope n (a_k - a_{k-1}) on cell k.
  VectorType slope(Index k) const {
    return Scalar(steps()) * (knots_.col(k) - knots_.col(k - 1));
  }

  bool operator==(const BasicTrajectory& other) const {
    return knots_.rows() == other.knots_.rows() && knots_.cols() == other.knots_.cols() &&
           knots_ == other.knots_;
  }

 private:
  KnotMatrix knots_;
};

using Trajectory = BasicTrajectory<double>;

/// Same polygon evaluated through the tent-ramp expansion.
template <typename Scalar>
VectorX<Scalar> eval_by_basis(const BasicTrajectory<Scalar>& f, Scalar t) {
  VectorX<Scalar> out = f.knot(0);
  for (Index i = 1; i <= f.steps(); ++i)
    out += (f.knot(i) - f.knot(i - 1)) * basis_phi(f.steps(), i, t);
  return out;
}

/// Modulus of continuity sup{|f(t) - f(s)| : |t - s| <= delta}.
/// For a polygon the supremum is attained at a pair where both ends are knots
/// or one end is a knot and |t - s| = delta, so only those pairs are scanned.
template <typename Scalar>
Scalar modulus(const BasicTrajectory<Scalar>& f, Scalar delta) {
  if (!(delta > Scalar(0))) throw PreconditionError("modulus needs delta > 0");
  const Index n = f.steps();
  // Knot pairs up to this many cells apart are within delta (with slack for rounding).
  const auto reach = std::min<Index>(n, static_cast<Index>(std::floor(delta * Scalar(n) + 1e-9)));
  Scalar best = 0;
  for (Index k = 0; k <= n; ++k) {
    for (Index j = k + 1; j <= std::min(n, k + reach); ++j)
      best = std::max(best, Scalar((f.knot(j) - f.knot(k)).norm()));
    const Scalar t = f.time(k);
    if (t + delta < Scalar(1)) best = std::max(best, Scalar((f.eval(t + delta) - f.knot(k)).norm()));
    if (t - delta > Scalar(0)) best = std::max(best, Scalar((f.knot(k) - f.eval(t - delta)).norm()));
  }
  return best;
}

/// Finite atomic R^d-valued measure sum_j alpha_j delta_{t_j} on [0,1].
template <typename Scalar>
class BasicDualMeasure {
 public:
  struct Atom {
    Scalar time;
    VectorX<Scalar> weight;
  };

  BasicDualMeasure() = default;

  explicit BasicDualMeasure(Index dim) : dim_(dim) {}

  BasicDualMeasure(Index dim, std::vector<Atom> atoms) : dim_(dim), atoms_(std::move(atoms)) {
    for (const Atom& a : atoms_) validate(a);
    std::stable_sort(atoms_.begin(), atoms_.end(),
                     [](const Atom& l, const Atom& r) { return l.time < r.time; });
  }

  /// Single atom alpha at time t.
  static BasicDualMeasure point(Scalar t, const VectorX<Scalar>& alpha) {
    return BasicDualMeasure(alpha.size(), {Atom{t, alpha}});
  }

  void add(Scalar t, const VectorX<Scalar>& alpha) {
    Atom a{t, alpha};
    validate(a);
    auto pos = std::upper_bound(atoms_.begin(), atoms_.end(), t,
                                [](Scalar v, const Atom& at) { return v < at.time; });
    atoms_.insert(pos, std::move(a));
  }

  Index dim() const { return dim_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  bool empty() const { return atoms_.empty(); }

  /// lambda(T) = sum_j alpha_j.
  VectorX<Scalar> total_mass() const {
    VectorX<Scalar> m = VectorX<Scalar>::Zero(dim_);
    for (const Atom& a : atoms_) m += a.weight;
    return m;
  }

  /// Total variation sum_j |alpha_j|.
  Scalar total_variation() const {
    Scalar v = 0;
    for (const Atom& a : atoms_) v += a.weight.norm();
    return v;
  }

  /// lambda([s, 1]); atoms at s are included.
  VectorX<Scalar> tail_mass(Scalar s) const {
    VectorX<Scalar> m = VectorX<Scalar>::Zero(dim_);
    for (const Atom& a : atoms_)
      if (a.time >= s) m += a.weight;
    return m;
  }

  /// Every weight multiplied by `factor`.
  BasicDualMeasure scaled(Scalar factor) const {
    BasicDualMeasure out = *this;
    for (Atom& a : out.atoms_) a.weight *= factor;
    return out;
  }

  /// Integral of phi_{n,i} against lambda.
  VectorX<Scalar> basis_integral(Index n, Index i) const {
    VectorX<Scalar> m = VectorX<Scalar>::Zero(dim_);
    for (const Atom& a : atoms_) m += basis_phi(n, i, a.time) * a.weight;
    return m;
  }

 private:
  void validate(const Atom& a) const {
    if (!(a.time >= Scalar(0) && a.time <= Scalar(1)))
      throw PreconditionError("dual measure atom time outside [0,1]");
    if (a.weight.size() != dim_) throw PreconditionError("dual measure atom has wrong dimension");
    if (!a.weight.allFinite()) throw PreconditionError("dual measure atom weight is not finite");
  }

  Index dim_ = 0;
  std::vector<Atom> atoms_;
};

using DualMeasure = BasicDualMeasure<double>;

/// <f, lambda> = sum_j <f(t_j), alpha_j>.
template <typename Scalar>
Scalar dual_pairing(const BasicTrajectory<Scalar>& f, const BasicDualMeasure<Scalar>& lambda) {
  if (!lambda.empty() && lambda.dim() != f.dim())
    throw PreconditionError("dual pairing: dimension mismatch");
  Scalar sum = 0;
  for (const auto& a : lambda.atoms()) sum += f.eval(a.time).dot(a.weight);
  return sum;
}

}  // namespace ldp
