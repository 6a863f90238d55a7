#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ldp/random.hpp"
#include "ldp/types.hpp"

namespace ldp {

/// Gaussian perturbation amplitude a >= 0. a = 0 is the unperturbed scheme.
class PerturbationLevel {
 public:
  PerturbationLevel() = default;
  explicit PerturbationLevel(double a);

  double value() const { return a_; }
  bool is_zero() const { return a_ == 0.0; }

 private:
  double a_ = 0.0;
};

/// Increment law mu(y, .) of the recursive scheme, described by a sampler and
/// its cumulant generating function G(y, alpha) = log E exp<F(y), alpha>.
///
/// Model obligations (not checked mechanically): alpha -> G(y, alpha) is
/// finite and bounded in y for each alpha, G is continuous, grad G(., alpha)
/// is locally uniformly Lipschitz, and the difference quotients of F have
/// finite exponential moments. For the affine family these follow from
/// bounded Lipschitz drift/diffusion.
///
/// Models are immutable once built and may be shared across threads.
class KernelModel {
 public:
  virtual ~KernelModel() = default;

  virtual Index dim() const = 0;

  /// G(y, alpha). Rejects non-finite or wrongly sized input.
  double cgf(const Vector& y, const Vector& alpha) const;
  /// Gradient of G(y, .) at alpha.
  Vector cgf_grad(const Vector& y, const Vector& alpha) const;
  /// Hessian of G(y, .) at alpha. Falls back to central differences of
  /// cgf_grad unless the model overrides it.
  Matrix cgf_hessian(const Vector& y, const Vector& alpha) const;
  /// One draw from mu(y, .).
  Vector sample_increment(const Vector& y, RandomStream& rng) const;

  /// Mean of mu(y, .), i.e. cgf_grad(y, 0).
  Vector mean(const Vector& y) const;

  virtual std::string describe() const = 0;

 protected:
  virtual double eval_cgf(const Vector& y, const Vector& alpha) const = 0;
  virtual Vector eval_cgf_grad(const Vector& y, const Vector& alpha) const = 0;
  virtual Matrix eval_cgf_hessian(const Vector& y, const Vector& alpha) const;
  virtual Vector eval_sample(const Vector& y, RandomStream& rng) const = 0;

 private:
  void check_state(const Vector& y) const;
  void check_dual(const Vector& alpha) const;
};

using KernelPtr = std::shared_ptr<const KernelModel>;

/// Kernel built from user callables (sampler, cgf, gradient).
class CallableKernel final : public KernelModel {
 public:
  using Sampler = std::function<Vector(const Vector&, RandomStream&)>;
  using Cgf = std::function<double(const Vector&, const Vector&)>;
  using CgfGrad = std::function<Vector(const Vector&, const Vector&)>;

  CallableKernel(Index dim, Sampler sampler, Cgf cgf, CgfGrad cgf_grad,
                 std::string label = "callable");

  Index dim() const override { return dim_; }
  std::string describe() const override { return label_; }

 protected:
  double eval_cgf(const Vector& y, const Vector& alpha) const override;
  Vector eval_cgf_grad(const Vector& y, const Vector& alpha) const override;
  Vector eval_sample(const Vector& y, RandomStream& rng) const override;

 private:
  Index dim_;
  Sampler sampler_;
  Cgf cgf_;
  CgfGrad grad_;
  std::string label_;
};

/// Law of the driving noise Z in F(y) = b(y) + sigma(y) Z.
class BaseNoise {
 public:
  virtual ~BaseNoise() = default;

  virtual std::string name() const = 0;
  /// log of the moment generating function, log E exp<Z, beta>.
  virtual double log_mgf(const Vector& beta) const = 0;
  virtual Vector log_mgf_grad(const Vector& beta) const = 0;
  virtual Matrix log_mgf_hessian(const Vector& beta) const = 0;
  /// Legendre transform of log_mgf; +infinity outside its domain.
  virtual double log_mgf_conjugate(const Vector& v) const = 0;
  /// E Z in dimension dim.
  virtual Vector mean(Index dim) const = 0;
  virtual Vector sample(Index dim, RandomStream& rng) const = 0;
};

/// Standard Gaussian: log_mgf(beta) = |beta|^2 / 2.
class GaussianNoise final : public BaseNoise {
 public:
  std::string name() const override { return "gaussian"; }
  double log_mgf(const Vector& beta) const override;
  Vector log_mgf_grad(const Vector& beta) const override;
  Matrix log_mgf_hessian(const Vector& beta) const override;
  double log_mgf_conjugate(const Vector& v) const override;
  Vector mean(Index dim) const override;
  Vector sample(Index dim, RandomStream& rng) const override;
};

/// Independent Bernoulli(p) coordinates on {0,1}^d:
/// log_mgf(beta) = sum_i log(1 - p + p e^{beta_i}).
class BernoulliNoise final : public BaseNoise {
 public:
  explicit BernoulliNoise(double p);

  double p() const { return p_; }
  std::string name() const override { return "bernoulli"; }
  double log_mgf(const Vector& beta) const override;
  Vector log_mgf_grad(const Vector& beta) const override;
  Matrix log_mgf_hessian(const Vector& beta) const override;
  /// Sum of binary relative entropies v_i log(v_i/p) + (1-v_i) log((1-v_i)/(1-p)),
  /// +inf unless every v_i lies in [0, 1].
  double log_mgf_conjugate(const Vector& v) const override;
  Vector mean(Index dim) const override;
  Vector sample(Index dim, RandomStream& rng) const override;

 private:
  double p_;
  double logit_p_;
};

/// F(y) = b(y) + sigma(y) Z with i.i.d. Z drawn from a BaseNoise.
/// G(y, alpha) = <b(y), alpha> + log_mgf(sigma(y)^T alpha).
class AffineNoiseModel final : public KernelModel {
 public:
  using Drift = std::function<Vector(const Vector&)>;
  using Diffusion = std::function<Matrix(const Vector&)>;

  AffineNoiseModel(Index dim, Drift drift, Diffusion sigma,
                   std::shared_ptr<const BaseNoise> noise,
                   std::string label = "affine");

  Index dim() const override { return dim_; }
  std::string describe() const override { return label_; }

  Vector drift(const Vector& y) const { return drift_(y); }
  Matrix sigma(const Vector& y) const { return sigma_(y); }
  const BaseNoise& noise() const { return *noise_; }
  bool has_gaussian_noise() const;

  /// One base-noise draw Z.
  Vector sample_noise(RandomStream& rng) const { return noise_->sample(dim_, rng); }
  /// b(y) + sigma(y) z for a given noise realization.
  Vector increment(const Vector& y, const Vector& z) const;

 protected:
  double eval_cgf(const Vector& y, const Vector& alpha) const override;
  Vector eval_cgf_grad(const Vector& y, const Vector& alpha) const override;
  Matrix eval_cgf_hessian(const Vector& y, const Vector& alpha) const override;
  Vector eval_sample(const Vector& y, RandomStream& rng) const override;

 private:
  Index dim_;
  Drift drift_;
  Diffusion sigma_;
  std::shared_ptr<const BaseNoise> noise_;
  std::string label_;
};

/// G^a(y, alpha) = G(y, alpha) + a^2 |alpha|^2 / 2.
double perturbed_cgf(const KernelModel& model, PerturbationLevel a,
                     const Vector& y, const Vector& alpha);
Vector perturbed_cgf_grad(const KernelModel& model, PerturbationLevel a,
                          const Vector& y, const Vector& alpha);
Matrix perturbed_cgf_hessian(const KernelModel& model, PerturbationLevel a,
                             const Vector& y, const Vector& alpha);

/// Declarative description of an affine model.
struct ModelSpec {
  enum class DriftKind { linear, logistic };
  enum class NoiseKind { gaussian, bernoulli };

  Index dim = 1;
  DriftKind drift = DriftKind::linear;
  Matrix drift_matrix;  // A in b(y) = A y + v; zero if empty
  Vector drift_offset;  // v; zero if empty
  Matrix sigma;         // constant diffusion; identity if empty
  NoiseKind noise = NoiseKind::gaussian;
  double bernoulli_p = 0.5;
  std::string label;

  /// Fills empty matrices/vectors with their defaults and checks shapes.
  ModelSpec resolved() const;
};

std::shared_ptr<const AffineNoiseModel> make_model(const ModelSpec& spec);

/// Named presets shipped with the library.
std::vector<std::string> preset_names();
ModelSpec preset_spec(const std::string& name);

}  // namespace ldp
