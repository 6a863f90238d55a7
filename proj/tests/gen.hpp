#pragma once

// Hand-rolled generators for property tests. Every generator is driven by an
// explicit seed so a failing case can be replayed.

#include <random>
#include <string>
#include <vector>

#include "ldp/kernel.hpp"
#include "ldp/trajectory.hpp"

namespace gen {

class Source {
 public:
  explicit Source(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

  ldp::Vector vector(ldp::Index d, double scale) {
    ldp::Vector v(d);
    for (ldp::Index i = 0; i < d; ++i) v[i] = uniform(-scale, scale);
    return v;
  }

  ldp::Trajectory path(ldp::Index d, ldp::Index n, double scale) {
    ldp::Matrix k(d, n + 1);
    for (ldp::Index j = 0; j <= n; ++j) k.col(j) = vector(d, scale);
    return ldp::Trajectory(std::move(k));
  }

  ldp::DualMeasure measure(ldp::Index d, int atoms, double scale) {
    std::vector<ldp::DualMeasure::Atom> list;
    for (int j = 0; j < atoms; ++j) list.push_back({uniform(0.0, 1.0), vector(d, scale)});
    return ldp::DualMeasure(d, std::move(list));
  }

  // Random affine model with invertible constant sigma.
  ldp::ModelSpec affine_spec(ldp::Index d, bool bernoulli) {
    ldp::ModelSpec s;
    s.dim = d;
    s.drift_matrix = 0.5 * ldp::Matrix(d, d).unaryExpr([this](double) { return uniform(-1.0, 1.0); });
    s.drift_offset = vector(d, 0.5);
    s.sigma = ldp::Matrix::Identity(d, d) * uniform(0.5, 1.5);
    for (ldp::Index i = 0; i < d; ++i)
      for (ldp::Index j = 0; j < i; ++j) s.sigma(i, j) = uniform(-0.3, 0.3);
    s.noise = bernoulli ? ldp::ModelSpec::NoiseKind::bernoulli : ldp::ModelSpec::NoiseKind::gaussian;
    s.bernoulli_p = uniform(0.1, 0.9);
    s.label = "generated";
    return s.resolved();
  }

  std::string preset() {
    const auto names = ldp::preset_names();
    return names[static_cast<std::size_t>(integer(0, static_cast<int>(names.size()) - 1))];
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gen
