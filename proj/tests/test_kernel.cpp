#include <cmath>

#include "doctest.h"
#include "gen.hpp"
#include "oracles.hpp"

#include "ldp/errors.hpp"
#include "ldp/kernel.hpp"

using namespace ldp;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::shared_ptr<const AffineNoiseModel> gaussian(Index d, double s = 1.0) {
  ModelSpec spec;
  spec.dim = d;
  spec.sigma = s * Matrix::Identity(d, d);
  return make_model(spec.resolved());
}

std::shared_ptr<const AffineNoiseModel> bernoulli(double p) {
  ModelSpec spec;
  spec.noise = ModelSpec::NoiseKind::bernoulli;
  spec.bernoulli_p = p;
  return make_model(spec.resolved());
}

std::shared_ptr<const AffineNoiseModel> deterministic(const Matrix& a) {
  ModelSpec spec;
  spec.dim = a.rows();
  spec.drift_matrix = a;
  spec.sigma = Matrix::Zero(a.rows(), a.rows());
  return make_model(spec.resolved());
}

}  // namespace

TEST_CASE("cgf vanishes at alpha = 0 for every preset") {
  gen::Source src(11);
  for (const auto& name : preset_names()) {
    const auto m = make_model(preset_spec(name));
    for (int k = 0; k < 20; ++k) CHECK(m->cgf(src.vector(m->dim(), 3.0), Vector::Zero(m->dim())) == 0.0);
  }
}

TEST_CASE("gaussian cgf is half the squared norm") {
  const auto m = gaussian(3);
  const Vector alpha = vec({0.3, -1.2, 2.0});
  CHECK(m->cgf(vec({5, 6, 7}), alpha) == doctest::Approx(alpha.squaredNorm() / 2).epsilon(1e-15));
  CHECK((m->cgf_grad(vec({5, 6, 7}), alpha) - alpha).norm() < 1e-15);
}

TEST_CASE("gaussian cgf agrees with a Monte Carlo log-mgf") {
  const auto m = gaussian(1);
  RandomStream rng(5);
  const double alpha = 0.4;
  const int draws = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double w = std::exp(alpha * m->sample_increment(vec({0}), rng)[0]);
    sum += w;
    sq += w * w;
  }
  const double mean = sum / draws;
  const double se = std::sqrt((sq / draws - mean * mean) / draws);
  CHECK(std::abs(mean - std::exp(m->cgf(vec({0}), vec({alpha})))) < 4 * se);
}

TEST_CASE("bernoulli cgf at alpha = 1") {
  const auto m = bernoulli(0.3);
  CHECK(m->cgf(vec({0}), vec({1})) == doctest::Approx(oracle::kBernoulliCgfAtOne).epsilon(1e-14));
}

TEST_CASE("bernoulli cgf is stable for huge arguments") {
  const auto m = bernoulli(0.3);
  const double big = m->cgf(vec({0}), vec({800}));
  CHECK(std::isfinite(big));
  CHECK(big == doctest::Approx(800 + std::log(0.3)).epsilon(1e-12));
  const double small = m->cgf(vec({0}), vec({-800}));
  CHECK(small == doctest::Approx(std::log(0.7)).epsilon(1e-12));
  CHECK(std::isfinite(m->cgf_grad(vec({0}), vec({800}))[0]));
}

TEST_CASE("cgf gradient at zero is the drift plus sigma times the noise mean") {
  const auto m = make_model(preset_spec("bernoulli-2d"));
  const Vector y = vec({0.4, -1.1});
  const Vector expected = m->drift(y) + m->sigma(y) * Vector::Constant(2, 0.4);
  CHECK((m->cgf_grad(y, Vector::Zero(2)) - expected).norm() < 1e-14);
  CHECK((m->mean(y) - expected).norm() < 1e-14);
}

TEST_CASE("non-finite input is rejected") {
  const auto m = gaussian(1);
  CHECK_THROWS_AS(m->cgf(vec({0}), vec({NAN})), PreconditionError);
  CHECK_THROWS_AS(m->cgf(vec({INFINITY}), vec({0})), PreconditionError);
  CHECK_THROWS_AS(m->cgf_grad(vec({0, 0}), vec({0})), PreconditionError);
}

TEST_CASE("perturbed cgf") {
  const auto m = gaussian(2);
  const Vector y = vec({1, 2});
  const Vector alpha = vec({0.5, -1.5});
  CHECK(perturbed_cgf(*m, PerturbationLevel(0.0), y, alpha) == m->cgf(y, alpha));
  CHECK(perturbed_cgf(*m, PerturbationLevel(1.0), y, alpha) == doctest::Approx(alpha.squaredNorm()));
  CHECK(perturbed_cgf(*m, PerturbationLevel(0.5), y, Vector::Zero(2)) == 0.0);
  CHECK_THROWS_AS(PerturbationLevel(-0.1), PreconditionError);
  CHECK_THROWS_AS(PerturbationLevel(NAN), PreconditionError);
}

TEST_CASE("degenerate noise samples are deterministic") {
  RandomStream rng(1);
  const auto zero = deterministic(Matrix::Zero(2, 2));
  CHECK(zero->sample_increment(vec({3, 4}), rng).norm() == 0.0);
  const auto decay = deterministic(-Matrix::Identity(2, 2));
  CHECK(decay->sample_increment(vec({2, 0}), rng) == vec({-2, 0}));
}

TEST_CASE("gaussian sample mean is within four standard errors of zero") {
  const auto m = gaussian(2);
  RandomStream rng(99);
  const int draws = 100000;
  Vector sum = Vector::Zero(2);
  for (int i = 0; i < draws; ++i) sum += m->sample_increment(vec({0, 0}), rng);
  const Vector mean = sum / draws;
  const double se = 1.0 / std::sqrt(double(draws));
  CHECK(std::abs(mean[0]) < 4 * se);
  CHECK(std::abs(mean[1]) < 4 * se);
}

TEST_CASE("callable kernel forwards to its callables") {
  CallableKernel k(
      1, [](const Vector& y, RandomStream&) { return Vector(2 * y); },
      [](const Vector& y, const Vector& a) { return 2 * y.dot(a); },
      [](const Vector& y, const Vector&) { return Vector(2 * y); });
  RandomStream rng(1);
  CHECK(k.cgf(vec({1.5}), vec({2})) == 6.0);
  CHECK(k.cgf_grad(vec({1.5}), vec({2}))[0] == 3.0);
  CHECK(k.sample_increment(vec({1.5}), rng)[0] == 3.0);
  CHECK(std::abs(k.cgf_hessian(vec({1.5}), vec({2}))(0, 0)) < 1e-8);
}

TEST_CASE("model specs are validated") {
  ModelSpec s;
  s.dim = 2;
  s.sigma = Matrix::Identity(3, 3);
  CHECK_THROWS_AS(s.resolved(), PreconditionError);
  ModelSpec p;
  p.noise = ModelSpec::NoiseKind::bernoulli;
  p.bernoulli_p = 1.0;
  CHECK_THROWS(make_model(p));
  CHECK_THROWS_AS(preset_spec("no-such-preset"), PreconditionError);
}

TEST_CASE("logistic preset drift") {
  const auto m = make_model(preset_spec("logistic"));
  CHECK(m->mean(vec({0.25}))[0] == doctest::Approx(0.25 * 0.75));
}
