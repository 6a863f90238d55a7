#pragma once

// Reference values computed independently of the library: closed forms,
// brute-force grids and constants frozen from high-precision evaluation.

#include <cmath>
#include <functional>

namespace oracle {

// log(0.7 + 0.3 e)
inline constexpr double kBernoulliCgfAtOne = 0.415735221843628685669;
// 0.6 log(0.6/0.3) + 0.4 log(0.4/0.7)
inline constexpr double kKl06vs03 = 0.192041993161798111142;
// P{N(0,1) >= 10}
inline constexpr double kNormalTail10 = 7.61985302416052606597e-24;
// P{N(0,1) >= sqrt(200)}
inline constexpr double kNormalTailSqrt200 = 1.04424379188127237850e-45;
// 0.8^2 / (1 - e^-2): least action to reach 0.8 at t = 1 under b(y) = -y, sigma = 1
inline constexpr double kOuAction08 = 0.740171291359786017164;
inline constexpr double kInvE = 0.367879441171442321596;

inline double normal_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

inline double binary_kl(double v, double p) {
  auto term = [](double a, double b) { return a == 0.0 ? 0.0 : a * std::log(a / b); };
  return term(v, p) + term(1.0 - v, 1.0 - p);
}

// z^2 / (1 - e^-2) scaled for an arbitrary endpoint.
inline double ou_point_action(double z) { return z * z / (1.0 - std::exp(-2.0)); }

// sup over alpha in [lo, hi] of f(alpha): dense grid then golden-section polish.
inline double grid_sup(const std::function<double(double)>& f, double lo, double hi, int points = 20001) {
  double best_x = lo;
  double best = f(lo);
  const double h = (hi - lo) / (points - 1);
  for (int i = 1; i < points; ++i) {
    const double x = lo + i * h;
    const double v = f(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  double a = std::max(lo, best_x - h);
  double b = std::min(hi, best_x + h);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double c = b - g * (b - a);
    const double d = a + g * (b - a);
    if (f(c) > f(d))
      b = d;
    else
      a = c;
  }
  return std::max(best, f(0.5 * (a + b)));
}

}  // namespace oracle
