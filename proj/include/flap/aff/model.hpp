#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flap/core/adam.hpp"
#include "flap/core/rng.hpp"
#include "flap/data/trajectory.hpp"
#include "flap/enc/encoder.hpp"
#include "flap/aff/losses.hpp"

namespace flap::aff {

struct AffordanceConfig {
  int z_dim = 16;
  int u_dim = 8;
  int hidden = 128;
  int delta_t = 25;  // subgoal horizon in env steps
  double beta = 0.1;
  double learning_rate = 3e-4;
  float log_std_lo = -5.0f;
  float log_std_hi = 2.0f;
};

// A (state index, future index) pair exactly delta_t apart, truncated to the
// final index near the episode end and flagged when truncated.
struct PairSample {
  std::size_t traj = 0;
  std::size_t t = 0;
  std::size_t t_future = 0;
  bool truncated = false;
};

PairSample sample_pair(const data::TrajectoryBuffer& buffer, int delta_t, core::Rng& rng);

struct ElboReport {
  double total = 0.0;
  double reconstruction_kl = 0.0;
  double prior_kl = 0.0;
};

// Conditional VAE over lossy latents: encoder q(u | z, z') and decoder
// m(z' | z, u), trained against a frozen snapshot of the state encoder.
class AffordanceModel {
 public:
  explicit AffordanceModel(const AffordanceConfig& cfg);

  void init(core::Rng rng);

  enc::GaussianLatent infer_code(std::span<const float> z, std::span<const float> z_prime) const;
  enc::GaussianLatent decode(std::span<const float> z, std::span<const float> u) const;

  // u ~ N(0, I); returns the decoder mean so plan rollouts are deterministic
  // given the code sequence.
  std::vector<float> sample_reachable(std::span<const float> z, core::Rng& rng) const;
  std::vector<float> decode_mean(std::span<const float> z, std::span<const float> u) const;

  // One optimizer step on a batch of delta_t-separated pairs.
  ElboReport train_step(const data::TrajectoryBuffer& buffer, const enc::StateEncoder& encoder,
                        std::size_t batch_size, core::Rng& rng, bool parallel = true);

  ElboReport elbo_loss(std::span<const float> obs_t, std::span<const float> obs_future,
                       const enc::StateEncoder& encoder, core::Rng& rng) const;

  core::GaussianNet<float>& encoder_net() { return q_; }
  core::GaussianNet<float>& decoder_net() { return m_; }
  const core::GaussianNet<float>& encoder_net() const { return q_; }
  const core::GaussianNet<float>& decoder_net() const { return m_; }
  const AffordanceConfig& config() const { return cfg_; }

 private:
  AffordanceConfig cfg_;
  core::GaussianNet<float> q_;  // (z, z') -> u distribution
  core::GaussianNet<float> m_;  // (z, u) -> z' distribution
  core::Adam<float> opt_q_, opt_m_;
  std::vector<float> g_q_, g_m_;
};

}  // namespace flap::aff
