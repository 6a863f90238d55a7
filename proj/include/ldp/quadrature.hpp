#pragma once

#include <array>

#include <boost/math/quadrature/gauss.hpp>

namespace ldp {

/// Five-point Gauss-Legendre rule mapped to [0,1]: nodes in ascending order,
/// weights summing to one.
struct GaussLegendre5 {
  std::array<double, 5> nodes{};
  std::array<double, 5> weights{};

  static const GaussLegendre5& unit() {
    static const GaussLegendre5 rule = [] {
      using Rule = boost::math::quadrature::gauss<double, 5>;
      const auto& x = Rule::abscissa();  // 0, then positive nodes
      const auto& w = Rule::weights();
      GaussLegendre5 r;
      r.nodes = {0.5 * (1 - x[2]), 0.5 * (1 - x[1]), 0.5, 0.5 * (1 + x[1]), 0.5 * (1 + x[2])};
      r.weights = {0.5 * w[2], 0.5 * w[1], 0.5 * w[0], 0.5 * w[1], 0.5 * w[2]};
      return r;
    }();
    return rule;
  }

  /// Integral of f over [lo, hi].
  template <typename F>
  static double integrate(F&& f, double lo, double hi) {
    const auto& r = unit();
    const double len = hi - lo;
    double sum = 0.0;
    for (int q = 0; q < 5; ++q) sum += r.weights[q] * f(lo + len * r.nodes[q]);
    return len * sum;
  }
};

}  // namespace ldp
