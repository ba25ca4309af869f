#include "dpminv/models.hpp"

#include <algorithm>
#include <cmath>

#include "dpminv/kernels.hpp"

namespace dpminv {

namespace {

void require_finite(const Vec& x, const char* who) {
  if (!all_finite(x)) {
    throw std::invalid_argument(std::string(who) + ": non-finite input");
  }
}

}  // namespace

Vec ZeroModel::evaluate(const Vec& x, double /*t*/) const {
  require_finite(x, "ZeroModel");
  return Vec(x.size(), 0.0);
}

Vec ZeroModel::vjp(const Vec& /*x*/, double /*t*/, const Vec& u) const {
  return Vec(u.size(), 0.0);
}

std::optional<double> ZeroModel::lipschitz_bound(double /*t*/) const {
  return 0.0;
}

GaussianDenoiser::GaussianDenoiser(NoiseSchedule schedule, Vec mean, double variance)
    : schedule_(std::move(schedule)), mean_(std::move(mean)), variance_(variance) {
  if (variance_ < 0.0) throw std::invalid_argument("GaussianDenoiser: variance < 0");
}

double GaussianDenoiser::gain(double t) const {
  const auto sv = schedule_.eval(t);
  return variance_ * sv.alpha /
         (sv.alpha * sv.alpha * variance_ + sv.sigma * sv.sigma);
}

Vec GaussianDenoiser::evaluate(const Vec& x, double t) const {
  require_finite(x, "GaussianDenoiser");
  if (x.size() != mean_.size())
    throw std::invalid_argument("GaussianDenoiser: dimension mismatch");
  const auto sv = schedule_.eval(t);
  const double v = sv.alpha * sv.alpha * variance_ + sv.sigma * sv.sigma;
  // (s^2 alpha x + sigma^2 mu) / v
  return axpby(variance_ * sv.alpha / v, x, sv.sigma * sv.sigma / v, mean_);
}

Vec GaussianDenoiser::vjp(const Vec& /*x*/, double t, const Vec& u) const {
  return scaled(gain(t), u);
}

std::optional<double> GaussianDenoiser::lipschitz_bound(double t) const {
  return gain(t);
}

MixtureDenoiser::MixtureDenoiser(NoiseSchedule schedule,
                                 std::vector<MixtureComponent> components)
    : schedule_(std::move(schedule)), components_(std::move(components)) {
  if (components_.empty())
    throw std::invalid_argument("MixtureDenoiser: empty mixture");
  double wsum = 0.0;
  const std::size_t dim = components_.front().mean.size();
  for (const auto& c : components_) {
    if (c.weight <= 0.0) throw std::invalid_argument("MixtureDenoiser: weight <= 0");
    if (c.variance < 0.0) throw std::invalid_argument("MixtureDenoiser: variance < 0");
    if (c.mean.size() != dim)
      throw std::invalid_argument("MixtureDenoiser: mean dimension mismatch");
    wsum += c.weight;
  }
  if (std::fabs(wsum - 1.0) > 1e-9)
    throw std::invalid_argument("MixtureDenoiser: weights must sum to 1");
}

Vec MixtureDenoiser::evaluate(const Vec& x, double t) const {
  require_finite(x, "MixtureDenoiser");
  const std::size_t n = x.size();
  if (n != components_.front().mean.size())
    throw std::invalid_argument("MixtureDenoiser: dimension mismatch");
  const auto sv = schedule_.eval(t);
  const std::size_t K = components_.size();

  std::vector<double> logw(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& c = components_[k];
    const double v = sv.alpha * sv.alpha * c.variance + sv.sigma * sv.sigma;
    const double d2 = kern::sq_dist_scaled(x.data(), c.mean.data(), sv.alpha, n);
    logw[k] = std::log(c.weight) -
              0.5 * static_cast<double>(n) * std::log(v) - d2 / (2.0 * v);
  }
  const double m = *std::max_element(logw.begin(), logw.end());
  double z = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    logw[k] = std::exp(logw[k] - m);
    z += logw[k];
  }

  Vec out(n, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& c = components_[k];
    const double g = logw[k] / z;
    const double v = sv.alpha * sv.alpha * c.variance + sv.sigma * sv.sigma;
    kern::axpy(g * c.variance * sv.alpha / v, x.data(), out.data(), n);
    kern::axpy(g * sv.sigma * sv.sigma / v, c.mean.data(), out.data(), n);
  }
  return out;
}

Vec MixtureDenoiser::vjp(const Vec& x, double t, const Vec& u) const {
  require_finite(x, "MixtureDenoiser");
  const std::size_t n = x.size();
  const auto sv = schedule_.eval(t);
  const std::size_t K = components_.size();

  // responsibilities and per-component posterior means
  std::vector<double> logw(K), vk(K), gain(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& c = components_[k];
    vk[k] = sv.alpha * sv.alpha * c.variance + sv.sigma * sv.sigma;
    gain[k] = c.variance * sv.alpha / vk[k];
    const double d2 = kern::sq_dist_scaled(x.data(), c.mean.data(), sv.alpha, n);
    logw[k] = std::log(c.weight) -
              0.5 * static_cast<double>(n) * std::log(vk[k]) - d2 / (2.0 * vk[k]);
  }
  const double m = *std::max_element(logw.begin(), logw.end());
  double z = 0.0;
  std::vector<double> gamma(K);
  for (std::size_t k = 0; k < K; ++k) {
    gamma[k] = std::exp(logw[k] - m);
    z += gamma[k];
  }
  for (std::size_t k = 0; k < K; ++k) gamma[k] /= z;

  // grad_x log N(x; alpha mu_k, v_k I) = -(x - alpha mu_k)/v_k
  std::vector<Vec> grads(K);
  Vec gbar(n, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& c = components_[k];
    grads[k] = axpby(-1.0 / vk[k], x, sv.alpha / vk[k], c.mean);
    kern::axpy(gamma[k], grads[k].data(), gbar.data(), n);
  }

  // J^T u = (sum_k gamma_k gain_k) u + sum_k gamma_k (g_k - gbar) (m_k . u)
  double cbar = 0.0;
  for (std::size_t k = 0; k < K; ++k) cbar += gamma[k] * gain[k];
  Vec out = scaled(cbar, u);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& c = components_[k];
    Vec mk = axpby(gain[k], x, sv.sigma * sv.sigma / vk[k], c.mean);
    const double mu_dot_u = kern::dot(mk.data(), u.data(), n);
    kern::axpy(gamma[k] * mu_dot_u, grads[k].data(), out.data(), n);
    kern::axpy(-gamma[k] * mu_dot_u, gbar.data(), out.data(), n);
  }
  return out;
}

GuidedModel::GuidedModel(double omega,
                         std::shared_ptr<const DataPredictionModel> cond,
                         std::shared_ptr<const DataPredictionModel> uncond)
    : omega_(omega), cond_(std::move(cond)), uncond_(std::move(uncond)) {
  if (!cond_ || !uncond_)
    throw std::invalid_argument("GuidedModel: null constituent");
}

Vec GuidedModel::evaluate(const Vec& x, double t) const {
  if (omega_ == 1.0) return cond_->evaluate(x, t);
  return axpby(omega_, cond_->evaluate(x, t), -(1.0 - omega_),
               uncond_->evaluate(x, t));
}

bool GuidedModel::has_vjp() const {
  return cond_->has_vjp() && uncond_->has_vjp();
}

Vec GuidedModel::vjp(const Vec& x, double t, const Vec& u) const {
  if (omega_ == 1.0) return cond_->vjp(x, t, u);
  return axpby(omega_, cond_->vjp(x, t, u), -(1.0 - omega_),
               uncond_->vjp(x, t, u));
}

std::optional<double> GuidedModel::lipschitz_bound(double t) const {
  const auto lc = cond_->lipschitz_bound(t);
  const auto lu = uncond_->lipschitz_bound(t);
  if (!lc || !lu) return std::nullopt;
  return (std::fabs(omega_) + std::fabs(1.0 - omega_)) * std::max(*lc, *lu);
}

double guided_lipschitz_bound(const GuidedModel& model, double t) {
  const auto b = model.lipschitz_bound(t);
  if (!b) throw UnsupportedModelError("guided_lipschitz_bound: constituent bound missing");
  return *b;
}

}  // namespace dpminv
