#pragma once

#include <cstdint>

#include "dpminv/vec.hpp"

namespace dpminv {

/// Fixed random nonlinear decoder decode(z) = tanh(W z + b) with
/// d_out > d_latent and W of full column rank.
class ToyDecoder {
 public:
  static ToyDecoder make(int d_latent = 16, int d_out = 64, std::uint64_t seed = 42);

  Vec decode(const Vec& z) const;
  // gradient of ||x - decode(z)||^2 with respect to z
  Vec loss_grad(const Vec& z, const Vec& x) const;

  int d_latent() const { return d_latent_; }
  int d_out() const { return d_out_; }
  const std::vector<double>& weight() const { return w_; }  // row-major d_out x d_latent
  const Vec& bias() const { return b_; }
  double min_singular_value() const { return sigma_min_; }

 private:
  ToyDecoder(int d_latent, int d_out, std::vector<double> w, Vec b);

  int d_latent_, d_out_;
  std::vector<double> w_;
  Vec b_;
  double sigma_min_;
};

/// Approximate analytic inverse: W^+ (atanh(clamp(x)) - b). Exact on
/// pre-activations that stay inside the clamp range, biased otherwise.
class ToyEncoder {
 public:
  explicit ToyEncoder(const ToyDecoder& decoder);
  Vec encode(const Vec& x) const;

 private:
  const ToyDecoder* decoder_;
  std::vector<double> pinv_;  // d_latent x d_out
};

struct DecoderInvertConfig {
  int max_iters = 100;
  double learning_rate = 0.1;
  int warmup_steps = 10;  // of the cosine-decay schedule
  double tol = 1e-6;      // relative residual ||x - decode(z)|| / ||x||
};

struct DecoderInvertResult {
  Vec z;
  double rel_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Exact decoder inversion: encoder initialization followed by Adam on the
/// squared reconstruction error with warmup and cosine step decay.
DecoderInvertResult decoder_invert(const ToyDecoder& decoder, const Vec& x,
                                   const DecoderInvertConfig& config = {});

/// Rescales z so that max_i |(W z + b)_i| lands on target (a few
/// fixed-point passes). Used to construct in-range or clipped samples.
Vec scale_to_preactivation(const ToyDecoder& decoder, Vec z, double target);

}  // namespace dpminv
