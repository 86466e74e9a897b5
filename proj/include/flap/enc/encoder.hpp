#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "flap/core/gaussian.hpp"
#include "flap/core/nets.hpp"
#include "flap/core/rng.hpp"

namespace flap::enc {

struct EncoderConfig {
  int obs_dim = 16;
  int z_dim = 16;
  int hidden = 128;
  float log_std_lo = -5.0f;
  float log_std_hi = 2.0f;
};

struct GaussianLatent {
  std::vector<float> mean;
  std::vector<float> log_std;
};

// z = mean + exp(log_std) * noise
std::vector<float> sample_latent(const GaussianLatent& gl, std::span<const float> noise);

inline double kl_to_standard_normal(const GaussianLatent& gl) {
  return core::kl_to_standard_normal<float>(gl.mean, gl.log_std);
}

// Stochastic lossy state encoder phi(z | s). One parameter set embeds both
// states and goals. The underlying GaussianNet is shared with the joint
// IQL training graph; this wrapper is the inference surface.
class StateEncoder {
 public:
  explicit StateEncoder(const EncoderConfig& cfg)
      : cfg_(cfg),
        net_("encoder", cfg.obs_dim, cfg.hidden, cfg.z_dim, cfg.log_std_lo, cfg.log_std_hi) {}

  void init(core::Rng rng) { net_.init(rng); }

  GaussianLatent encode(std::span<const float> obs) const;
  std::vector<float> encode_mean(std::span<const float> obs) const;
  std::vector<float> encode_sample(std::span<const float> obs, core::Rng& rng) const;

  core::GaussianNet<float>& net() { return net_; }
  const core::GaussianNet<float>& net() const { return net_; }
  const EncoderConfig& config() const { return cfg_; }
  int z_dim() const { return cfg_.z_dim; }

 private:
  EncoderConfig cfg_;
  core::GaussianNet<float> net_;
};

}  // namespace flap::enc
