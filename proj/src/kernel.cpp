#include "ldp/kernel.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include <fmt/format.h>

#include "ldp/errors.hpp"

namespace ldp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kHessianStep = 1e-5;

// log(1 - p + p e^x) without overflow for large |x|.
double log_bernoulli_mgf(double x, double p) {
  if (x > 0.0) return x + std::log(p) + std::log1p((1.0 - p) / p * std::exp(-x));
  return std::log1p(p * std::expm1(x));
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// v log(v/p), continuous extension 0 at v = 0.
double entropy_term(double v, double p) { return v > 0.0 ? v * std::log(v / p) : 0.0; }

}  // namespace

PerturbationLevel::PerturbationLevel(double a) : a_(a) {
  if (!std::isfinite(a) || a < 0.0)
    throw PreconditionError(fmt::format("perturbation level must be finite and >= 0, got {}", a));
}

// ---------------------------------------------------------------------------
// KernelModel

void KernelModel::check_state(const Vector& y) const {
  if (y.size() != dim())
    throw PreconditionError(fmt::format("state has dimension {}, model expects {}", y.size(), dim()));
  if (!all_finite(y)) throw PreconditionError("state vector is not finite");
}

void KernelModel::check_dual(const Vector& alpha) const {
  if (alpha.size() != dim())
    throw PreconditionError(
        fmt::format("dual vector has dimension {}, model expects {}", alpha.size(), dim()));
  if (!all_finite(alpha)) throw PreconditionError("dual vector is not finite");
}

double KernelModel::cgf(const Vector& y, const Vector& alpha) const {
  check_state(y);
  check_dual(alpha);
  return eval_cgf(y, alpha);
}

Vector KernelModel::cgf_grad(const Vector& y, const Vector& alpha) const {
  check_state(y);
  check_dual(alpha);
  return eval_cgf_grad(y, alpha);
}

Matrix KernelModel::cgf_hessian(const Vector& y, const Vector& alpha) const {
  check_state(y);
  check_dual(alpha);
  return eval_cgf_hessian(y, alpha);
}

Vector KernelModel::sample_increment(const Vector& y, RandomStream& rng) const {
  check_state(y);
  return eval_sample(y, rng);
}

Vector KernelModel::mean(const Vector& y) const { return cgf_grad(y, Vector::Zero(dim())); }

Matrix KernelModel::eval_cgf_hessian(const Vector& y, const Vector& alpha) const {
  const Index d = dim();
  Matrix h(d, d);
  Vector probe = alpha;
  for (Index j = 0; j < d; ++j) {
    const double step = kHessianStep * (1.0 + std::abs(alpha[j]));
    probe[j] = alpha[j] + step;
    const Vector up = eval_cgf_grad(y, probe);
    probe[j] = alpha[j] - step;
    const Vector down = eval_cgf_grad(y, probe);
    probe[j] = alpha[j];
    h.col(j) = (up - down) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

// ---------------------------------------------------------------------------
// CallableKernel

CallableKernel::CallableKernel(Index dim, Sampler sampler, Cgf cgf, CgfGrad cgf_grad,
                               std::string label)
    : dim_(dim),
      sampler_(std::move(sampler)),
      cgf_(std::move(cgf)),
      grad_(std::move(cgf_grad)),
      label_(std::move(label)) {
  if (dim_ < 1) throw PreconditionError("kernel dimension must be positive");
  if (!sampler_ || !cgf_ || !grad_) throw PreconditionError("callable kernel needs all three callables");
}

double CallableKernel::eval_cgf(const Vector& y, const Vector& alpha) const { return cgf_(y, alpha); }

Vector CallableKernel::eval_cgf_grad(const Vector& y, const Vector& alpha) const {
  return grad_(y, alpha);
}

Vector CallableKernel::eval_sample(const Vector& y, RandomStream& rng) const { return sampler_(y, rng); }

// ---------------------------------------------------------------------------
// Base noise laws

double GaussianNoise::log_mgf(const Vector& beta) const { return 0.5 * beta.squaredNorm(); }
Vector GaussianNoise::log_mgf_grad(const Vector& beta) const { return beta; }
Matrix GaussianNoise::log_mgf_hessian(const Vector& beta) const {
  return Matrix::Identity(beta.size(), beta.size());
}
double GaussianNoise::log_mgf_conjugate(const Vector& v) const { return 0.5 * v.squaredNorm(); }
Vector GaussianNoise::mean(Index dim) const { return Vector::Zero(dim); }
Vector GaussianNoise::sample(Index dim, RandomStream& rng) const { return rng.normal_vector(dim); }

BernoulliNoise::BernoulliNoise(double p) : p_(p) {
  if (!(p > 0.0 && p < 1.0))
    throw PreconditionError(fmt::format("Bernoulli parameter must lie in (0,1), got {}", p));
  logit_p_ = std::log(p) - std::log1p(-p);
}

double BernoulliNoise::log_mgf(const Vector& beta) const {
  double sum = 0.0;
  for (Index i = 0; i < beta.size(); ++i) sum += log_bernoulli_mgf(beta[i], p_);
  return sum;
}

Vector BernoulliNoise::log_mgf_grad(const Vector& beta) const {
  Vector g(beta.size());
  for (Index i = 0; i < beta.size(); ++i) g[i] = logistic(beta[i] + logit_p_);
  return g;
}

Matrix BernoulliNoise::log_mgf_hessian(const Vector& beta) const {
  Vector diag(beta.size());
  for (Index i = 0; i < beta.size(); ++i) {
    const double s = logistic(beta[i] + logit_p_);
    diag[i] = s * (1.0 - s);
  }
  return diag.asDiagonal();
}

double BernoulliNoise::log_mgf_conjugate(const Vector& v) const {
  double sum = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    const double vi = v[i];
    if (!(vi >= 0.0 && vi <= 1.0)) return kInf;
    sum += entropy_term(vi, p_) + entropy_term(1.0 - vi, 1.0 - p_);
  }
  return sum;
}

Vector BernoulliNoise::mean(Index dim) const { return Vector::Constant(dim, p_); }

Vector BernoulliNoise::sample(Index dim, RandomStream& rng) const {
  Vector z(dim);
  for (Index i = 0; i < dim; ++i) z[i] = rng.uniform() < p_ ? 1.0 : 0.0;
  return z;
}

// ---------------------------------------------------------------------------
// AffineNoiseModel

AffineNoiseModel::AffineNoiseModel(Index dim, Drift drift, Diffusion sigma,
                                   std::shared_ptr<const BaseNoise> noise, std::string label)
    : dim_(dim),
      drift_(std::move(drift)),
      sigma_(std::move(sigma)),
      noise_(std::move(noise)),
      label_(std::move(label)) {
  if (dim_ < 1) throw PreconditionError("model dimension must be positive");
  if (!drift_ || !sigma_ || !noise_) throw PreconditionError("affine model needs drift, sigma and noise");
}

bool AffineNoiseModel::has_gaussian_noise() const {
  return dynamic_cast<const GaussianNoise*>(noise_.get()) != nullptr;
}

Vector AffineNoiseModel::increment(const Vector& y, const Vector& z) const {
  return drift_(y) + sigma_(y) * z;
}

double AffineNoiseModel::eval_cgf(const Vector& y, const Vector& alpha) const {
  return drift_(y).dot(alpha) + noise_->log_mgf(sigma_(y).transpose() * alpha);
}

Vector AffineNoiseModel::eval_cgf_grad(const Vector& y, const Vector& alpha) const {
  const Matrix s = sigma_(y);
  return drift_(y) + s * noise_->log_mgf_grad(s.transpose() * alpha);
}

Matrix AffineNoiseModel::eval_cgf_hessian(const Vector& y, const Vector& alpha) const {
  const Matrix s = sigma_(y);
  return s * noise_->log_mgf_hessian(s.transpose() * alpha) * s.transpose();
}

Vector AffineNoiseModel::eval_sample(const Vector& y, RandomStream& rng) const {
  return increment(y, sample_noise(rng));
}

// ---------------------------------------------------------------------------
// Perturbed cgf

double perturbed_cgf(const KernelModel& model, PerturbationLevel a, const Vector& y,
                     const Vector& alpha) {
  const double g = model.cgf(y, alpha);
  if (a.is_zero()) return g;
  return g + 0.5 * a.value() * a.value() * alpha.squaredNorm();
}

Vector perturbed_cgf_grad(const KernelModel& model, PerturbationLevel a, const Vector& y,
                          const Vector& alpha) {
  Vector g = model.cgf_grad(y, alpha);
  if (!a.is_zero()) g += a.value() * a.value() * alpha;
  return g;
}

Matrix perturbed_cgf_hessian(const KernelModel& model, PerturbationLevel a, const Vector& y,
                             const Vector& alpha) {
  Matrix h = model.cgf_hessian(y, alpha);
  if (!a.is_zero()) h.diagonal().array() += a.value() * a.value();
  return h;
}

// ---------------------------------------------------------------------------
// Specs and presets

ModelSpec ModelSpec::resolved() const {
  if (dim < 1) throw PreconditionError("model dim must be >= 1");
  ModelSpec out = *this;
  if (out.drift_matrix.size() == 0) out.drift_matrix = Matrix::Zero(dim, dim);
  if (out.drift_offset.size() == 0) out.drift_offset = Vector::Zero(dim);
  if (out.sigma.size() == 0) out.sigma = Matrix::Identity(dim, dim);
  if (out.drift_matrix.rows() != dim || out.drift_matrix.cols() != dim)
    throw PreconditionError(fmt::format("drift matrix must be {}x{}", dim, dim));
  if (out.drift_offset.size() != dim)
    throw PreconditionError(fmt::format("drift offset must have {} entries", dim));
  if (out.sigma.rows() != dim || out.sigma.cols() != dim)
    throw PreconditionError(fmt::format("sigma must be {}x{}", dim, dim));
  if (out.drift == DriftKind::logistic && dim != 1)
    throw PreconditionError("logistic drift is scalar (dim = 1)");
  if (!out.drift_matrix.allFinite() || !out.drift_offset.allFinite() || !out.sigma.allFinite())
    throw PreconditionError("model parameters must be finite");
  if (out.noise == NoiseKind::bernoulli && !(out.bernoulli_p > 0.0 && out.bernoulli_p < 1.0))
    throw PreconditionError("bernoulli p must lie in (0,1)");
  if (out.label.empty()) out.label = "affine";
  return out;
}

std::shared_ptr<const AffineNoiseModel> make_model(const ModelSpec& raw) {
  const ModelSpec spec = raw.resolved();

  AffineNoiseModel::Drift drift;
  if (spec.drift == ModelSpec::DriftKind::logistic) {
    drift = [](const Vector& y) {
      Vector out(1);
      out[0] = y[0] * (1.0 - y[0]);
      return out;
    };
  } else {
    drift = [A = spec.drift_matrix, v = spec.drift_offset](const Vector& y) -> Vector {
      return A * y + v;
    };
  }
  AffineNoiseModel::Diffusion sigma = [s = spec.sigma](const Vector&) -> Matrix { return s; };

  std::shared_ptr<const BaseNoise> noise;
  if (spec.noise == ModelSpec::NoiseKind::bernoulli)
    noise = std::make_shared<BernoulliNoise>(spec.bernoulli_p);
  else
    noise = std::make_shared<GaussianNoise>();

  return std::make_shared<AffineNoiseModel>(spec.dim, std::move(drift), std::move(sigma),
                                            std::move(noise), spec.label);
}

std::vector<std::string> preset_names() {
  return {"gaussian",    "gaussian-ou",  "bernoulli", "bernoulli-ou",
          "logistic",    "gaussian-2d",  "bernoulli-2d"};
}

ModelSpec preset_spec(const std::string& name) {
  ModelSpec s;
  s.label = name;
  if (name == "gaussian") {
    // b = 0, sigma = 1
  } else if (name == "gaussian-ou") {
    s.drift_matrix = Matrix::Constant(1, 1, -1.0);
  } else if (name == "bernoulli") {
    s.noise = ModelSpec::NoiseKind::bernoulli;
    s.bernoulli_p = 0.3;
  } else if (name == "bernoulli-ou") {
    s.drift_matrix = Matrix::Constant(1, 1, -1.0);
    s.noise = ModelSpec::NoiseKind::bernoulli;
    s.bernoulli_p = 0.3;
  } else if (name == "logistic") {
    s.drift = ModelSpec::DriftKind::logistic;
    s.sigma = Matrix::Constant(1, 1, 0.5);
  } else if (name == "gaussian-2d") {
    s.dim = 2;
    s.drift_matrix.resize(2, 2);
    s.drift_matrix << -1.0, 0.5, 0.0, -0.5;
    s.drift_offset = Vector::Zero(2);
    s.drift_offset[0] = 0.2;
    s.sigma.resize(2, 2);
    s.sigma << 1.0, 0.0, 0.3, 0.8;
  } else if (name == "bernoulli-2d") {
    s.dim = 2;
    s.drift_matrix.resize(2, 2);
    s.drift_matrix << -0.5, 0.0, 0.2, -0.5;
    s.noise = ModelSpec::NoiseKind::bernoulli;
    s.bernoulli_p = 0.4;
  } else {
    throw PreconditionError(fmt::format("unknown model preset '{}'", name));
  }
  return s.resolved();
}

}  // namespace ldp
