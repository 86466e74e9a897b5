#pragma once

#include <span>
#include <vector>

#include "flap/core/adam.hpp"
#include "flap/core/nets.hpp"
#include "flap/data/trajectory.hpp"
#include "flap/enc/encoder.hpp"
#include "flap/plan/mppi.hpp"

namespace flap::experiment {

enum class BaselineKind { kModelFree, kRawSpacePlanner, kFlap };

BaselineKind parse_baseline(const std::string& name);
std::string baseline_name(BaselineKind k);

// CVAE over raw observations for the raw-space planner baseline: encoder
// q(u | o, o') and decoder m(o' | o, u) with a Gaussian NLL reconstruction.
// Planning happens directly in observation space.
class RawCvae {
 public:
  RawCvae(int obs_dim, int u_dim, int hidden, double learning_rate);

  void init(core::Rng rng);

  double train_step(const data::TrajectoryBuffer& buffer, int delta_t, std::size_t batch_size,
                    core::Rng& rng, bool parallel = true);

  std::vector<float> decode_mean(std::span<const float> obs, std::span<const float> u) const;

  core::GaussianNet<float>& encoder_net() { return q_; }
  const core::GaussianNet<float>& encoder_net() const { return q_; }
  core::GaussianNet<float>& decoder_net() { return m_; }
  const core::GaussianNet<float>& decoder_net() const { return m_; }
  int obs_dim() const { return obs_dim_; }
  int u_dim() const { return u_dim_; }

 private:
  int obs_dim_, u_dim_;
  double beta_ = 0.1;
  core::GaussianNet<float> q_;
  core::GaussianNet<float> m_;
  core::Adam<float> opt_q_, opt_m_;
  std::vector<float> g_q_, g_m_;
};

// Raw-space rollout dynamics for MPPI.
class RawCvaeDynamics final : public plan::TransitionModel {
 public:
  explicit RawCvaeDynamics(const RawCvae& cvae) : cvae_(&cvae) {}
  int z_dim() const override { return cvae_->obs_dim(); }
  int u_dim() const override { return cvae_->u_dim(); }
  void next(std::span<const float> z, std::span<const float> u,
            std::span<float> z_next) const override {
    const std::vector<float> out = cvae_->decode_mean(z, u);
    for (std::size_t i = 0; i < out.size(); ++i) z_next[i] = out[i];
  }

 private:
  const RawCvae* cvae_;
};

// V evaluated on encoded pairs while the plan itself lives in raw space.
class EncodedPairValue final : public plan::TransitionValue {
 public:
  EncodedPairValue(const enc::StateEncoder& encoder, const plan::TransitionValue& latent_value)
      : encoder_(&encoder), latent_value_(&latent_value) {}
  double value(std::span<const float> z_from, std::span<const float> z_to) const override {
    const std::vector<float> a = encoder_->encode_mean(z_from);
    const std::vector<float> b = encoder_->encode_mean(z_to);
    return latent_value_->value(a, b);
  }

 private:
  const enc::StateEncoder* encoder_;
  const plan::TransitionValue* latent_value_;
};

}  // namespace flap::experiment
