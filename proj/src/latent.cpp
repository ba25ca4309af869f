#include "dpminv/latent.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dpminv/linalg.hpp"
#include "dpminv/rng.hpp"

namespace dpminv {

namespace {

constexpr double kClamp = 1e-6;  // encoder clamp distance from +-1
constexpr double kPi = 3.14159265358979323846;

}  // namespace

ToyDecoder::ToyDecoder(int d_latent, int d_out, std::vector<double> w, Vec b)
    : d_latent_(d_latent), d_out_(d_out), w_(std::move(w)), b_(std::move(b)) {
  // G = W^T W; smallest singular value of W from its spectrum
  std::vector<double> g(d_latent_ * d_latent_, 0.0);
  for (int i = 0; i < d_out_; ++i)
    for (int r = 0; r < d_latent_; ++r)
      for (int c = 0; c < d_latent_; ++c)
        g[r * d_latent_ + c] += w_[i * d_latent_ + r] * w_[i * d_latent_ + c];
  const auto ev = linalg::sym_eigenvalues(g, d_latent_);
  sigma_min_ = std::sqrt(std::max(ev.front(), 0.0));
  if (sigma_min_ < 1e-3)
    throw std::runtime_error("ToyDecoder: weight matrix nearly rank deficient");
}

ToyDecoder ToyDecoder::make(int d_latent, int d_out, std::uint64_t seed) {
  if (d_out <= d_latent)
    throw std::invalid_argument("ToyDecoder: need d_out > d_latent");
  Rng rng(seed);
  std::vector<double> w(static_cast<std::size_t>(d_out) * d_latent);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_latent));
  for (auto& v : w) v = scale * rng.gaussian();
  Vec b(d_out);
  for (auto& v : b) v = 0.1 * rng.gaussian();
  return ToyDecoder(d_latent, d_out, std::move(w), std::move(b));
}

Vec ToyDecoder::decode(const Vec& z) const {
  if (static_cast<int>(z.size()) != d_latent_)
    throw std::invalid_argument("ToyDecoder: latent dimension mismatch");
  if (!all_finite(z)) throw std::invalid_argument("ToyDecoder: non-finite input");
  Vec pre = linalg::matvec(w_, z, d_out_, d_latent_);
  for (int i = 0; i < d_out_; ++i) pre[i] = std::tanh(pre[i] + b_[i]);
  return pre;
}

Vec ToyDecoder::loss_grad(const Vec& z, const Vec& x) const {
  Vec pre = linalg::matvec(w_, z, d_out_, d_latent_);
  Vec outer(d_out_);
  for (int i = 0; i < d_out_; ++i) {
    const double th = std::tanh(pre[i] + b_[i]);
    outer[i] = 2.0 * (th - x[i]) * (1.0 - th * th);
  }
  return linalg::matvec_t(w_, outer, d_out_, d_latent_);
}

ToyEncoder::ToyEncoder(const ToyDecoder& decoder)
    : decoder_(&decoder),
      pinv_(linalg::pinv_full_rank(decoder.weight(), decoder.d_out(),
                                   decoder.d_latent())) {}

Vec ToyEncoder::encode(const Vec& x) const {
  if (static_cast<int>(x.size()) != decoder_->d_out())
    throw std::invalid_argument("ToyEncoder: dimension mismatch");
  Vec pre(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double c = std::min(1.0 - kClamp, std::max(-1.0 + kClamp, x[i]));
    pre[i] = std::atanh(c) - decoder_->bias()[i];
  }
  return linalg::matvec(pinv_, pre, decoder_->d_latent(), decoder_->d_out());
}

DecoderInvertResult decoder_invert(const ToyDecoder& decoder, const Vec& x,
                                   const DecoderInvertConfig& config) {
  ToyEncoder encoder(decoder);
  Vec z = encoder.encode(x);
  const int n = decoder.d_latent();
  const double xn = norm2(x);

  Vec m(n, 0.0), v(n, 0.0);
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;

  DecoderInvertResult result;
  Vec best_z = z;
  double best_res = std::numeric_limits<double>::infinity();
  for (int k = 0; k < config.max_iters; ++k) {
    const Vec recon = decoder.decode(z);
    const double res = dist2(recon, x) / std::max(xn, 1e-12);
    result.iterations = k + 1;
    if (res < best_res) {
      best_res = res;
      best_z = z;
    }
    if (res <= config.tol) {
      result.converged = true;
      break;
    }
    Vec g = decoder.loss_grad(z, x);
    double lr;
    if (k < config.warmup_steps) {
      lr = config.learning_rate * static_cast<double>(k + 1) / config.warmup_steps;
    } else {
      const double frac = static_cast<double>(k - config.warmup_steps) /
                          std::max(1, config.max_iters - config.warmup_steps);
      lr = config.learning_rate * 0.5 * (1.0 + std::cos(kPi * frac));
    }
    for (int j = 0; j < n; ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double mh = m[j] / (1.0 - std::pow(b1, k + 1));
      const double vh = v[j] / (1.0 - std::pow(b2, k + 1));
      z[j] -= lr * mh / (std::sqrt(vh) + eps);
    }
  }
  result.z = std::move(best_z);
  result.rel_residual = best_res;
  return result;
}

Vec scale_to_preactivation(const ToyDecoder& decoder, Vec z, double target) {
  if (target <= 0.0)
    throw std::invalid_argument("scale_to_preactivation: target must be positive");
  for (int pass = 0; pass < 4; ++pass) {
    Vec pre = linalg::matvec(decoder.weight(), z, decoder.d_out(), decoder.d_latent());
    double mx = 0.0;
    for (int i = 0; i < decoder.d_out(); ++i)
      mx = std::max(mx, std::fabs(pre[i] + decoder.bias()[i]));
    if (mx <= 0.0) break;
    const double c = target / mx;
    if (std::fabs(c - 1.0) < 1e-12) break;
    for (double& v : z) v *= c;
  }
  return z;
}

}  // namespace dpminv
