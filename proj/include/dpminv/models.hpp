#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dpminv/schedule.hpp"
#include "dpminv/vec.hpp"

namespace dpminv {

struct UnsupportedModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Data-prediction interface: evaluate(x, t) estimates the clean sample
/// from a noisy state. evaluate is deterministic and pure. vjp, when
/// available, applies the transposed Jacobian of evaluate at (x, t).
class DataPredictionModel {
 public:
  virtual ~DataPredictionModel() = default;

  virtual Vec evaluate(const Vec& x, double t) const = 0;

  virtual bool has_vjp() const { return false; }
  virtual Vec vjp(const Vec& /*x*/, double /*t*/, const Vec& /*u*/) const {
    throw UnsupportedModelError("model: no analytic Jacobian available");
  }

  virtual std::optional<double> lipschitz_bound(double /*t*/) const {
    return std::nullopt;
  }
};

/// Predicts zero everywhere. Degenerate but useful: every solver step
/// reduces to pure sigma-ratio scaling.
class ZeroModel final : public DataPredictionModel {
 public:
  Vec evaluate(const Vec& x, double t) const override;
  bool has_vjp() const override { return true; }
  Vec vjp(const Vec& x, double t, const Vec& u) const override;
  std::optional<double> lipschitz_bound(double t) const override;
};

/// Posterior mean of x_0 given x_t when x_0 ~ N(mu, s^2 I) under the VP
/// forward process: affine in x with an exact Lipschitz constant.
class GaussianDenoiser final : public DataPredictionModel {
 public:
  GaussianDenoiser(NoiseSchedule schedule, Vec mean, double variance);

  Vec evaluate(const Vec& x, double t) const override;
  bool has_vjp() const override { return true; }
  Vec vjp(const Vec& x, double t, const Vec& u) const override;
  std::optional<double> lipschitz_bound(double t) const override;

  // coefficient of x in evaluate: s^2 alpha / (alpha^2 s^2 + sigma^2)
  double gain(double t) const;
  const Vec& mean() const { return mean_; }
  double variance() const { return variance_; }

 private:
  NoiseSchedule schedule_;
  Vec mean_;
  double variance_;
};

struct MixtureComponent {
  double weight;
  Vec mean;
  double variance;
};

/// Posterior mean under a Gaussian-mixture prior. Responsibilities are
/// computed in log space with max subtraction. Reduces exactly to
/// GaussianDenoiser at K = 1.
class MixtureDenoiser final : public DataPredictionModel {
 public:
  MixtureDenoiser(NoiseSchedule schedule, std::vector<MixtureComponent> components);

  Vec evaluate(const Vec& x, double t) const override;
  bool has_vjp() const override { return true; }
  Vec vjp(const Vec& x, double t, const Vec& u) const override;

  const std::vector<MixtureComponent>& components() const { return components_; }

 private:
  NoiseSchedule schedule_;
  std::vector<MixtureComponent> components_;
};

/// Classifier-free guidance combination
///   omega * cond(x, t) - (1 - omega) * uncond(x, t).
/// At omega = 1 evaluation takes the conditional path unchanged.
class GuidedModel final : public DataPredictionModel {
 public:
  GuidedModel(double omega, std::shared_ptr<const DataPredictionModel> cond,
              std::shared_ptr<const DataPredictionModel> uncond);

  Vec evaluate(const Vec& x, double t) const override;
  bool has_vjp() const override;
  Vec vjp(const Vec& x, double t, const Vec& u) const override;
  std::optional<double> lipschitz_bound(double t) const override;

  double omega() const { return omega_; }
  const DataPredictionModel& cond() const { return *cond_; }
  const DataPredictionModel& uncond() const { return *uncond_; }

 private:
  double omega_;
  std::shared_ptr<const DataPredictionModel> cond_;
  std::shared_ptr<const DataPredictionModel> uncond_;
};

/// (|omega| + |1-omega|) * max(L_cond, L_uncond); throws when a
/// constituent has no bound.
double guided_lipschitz_bound(const GuidedModel& model, double t);

}  // namespace dpminv
