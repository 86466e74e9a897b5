#pragma once

#include <memory>
#include <span>
#include <vector>

#include "flap/core/adam.hpp"
#include "flap/core/rng.hpp"
#include "flap/data/relabel.hpp"
#include "flap/enc/encoder.hpp"
#include "flap/gcrl/losses.hpp"

namespace flap::gcrl {

struct LossReport {
  double total = 0.0;
  double value_loss = 0.0;
  double q_loss = 0.0;
  double policy_loss = 0.0;
  double mean_kl = 0.0;
};

struct AgentConfig {
  enc::EncoderConfig encoder;
  int action_dim = 4;
  int hidden = 128;
  float policy_log_std_init = -1.0f;
  IqlConfig iql;
  // Action bounds applied by act(): translation dims then scalar commands.
  double max_translation = 0.05;
};

// Goal-conditioned IQL over lossy latents with twin Q, Polyak targets and
// AWR policy extraction, jointly trained with the VIB objective during
// pre-training. Owns the encoder.
class GcrlAgent {
 public:
  explicit GcrlAgent(const AgentConfig& cfg);

  void init(core::Rng rng);

  // One optimizer step on the mixed batch; rewards/done flags are taken as
  // stored in the transitions. Throws on non-finite losses.
  LossReport train_step(const data::Batch& batch, Phase phase, core::Rng& rng,
                        bool parallel = true);

  std::vector<float> act(std::span<const float> obs, std::span<const float> goal_latent,
                         bool deterministic, core::Rng& rng) const;

  double value(std::span<const float> za, std::span<const float> zb) const;

  enc::StateEncoder& encoder() { return encoder_; }
  const enc::StateEncoder& encoder() const { return encoder_; }
  core::PolicyNet<float>& policy() { return policy_; }
  const core::PolicyNet<float>& policy() const { return policy_; }
  core::ScalarNet<float>& q1() { return q1_; }
  const core::ScalarNet<float>& q1() const { return q1_; }
  core::ScalarNet<float>& q2() { return q2_; }
  const core::ScalarNet<float>& q2() const { return q2_; }
  core::ScalarNet<float>& q1_target() { return q1_tgt_; }
  const core::ScalarNet<float>& q1_target() const { return q1_tgt_; }
  core::ScalarNet<float>& q2_target() { return q2_tgt_; }
  const core::ScalarNet<float>& q2_target() const { return q2_tgt_; }
  core::ScalarNet<float>& v() { return v_; }
  const core::ScalarNet<float>& v() const { return v_; }

  const AgentConfig& config() const { return cfg_; }
  IqlConfig& iql_config() { return cfg_.iql; }

  // Called after loading checkpoints so targets restart from the online nets.
  void sync_targets();

 private:
  AgentConfig cfg_;
  enc::StateEncoder encoder_;
  core::PolicyNet<float> policy_;
  core::ScalarNet<float> q1_, q2_, q1_tgt_, q2_tgt_, v_;
  core::Adam<float> opt_enc_, opt_pol_, opt_q1_, opt_q2_, opt_v_;
  std::vector<float> g_enc_, g_pol_, g_q1_, g_q2_, g_v_;
};

}  // namespace flap::gcrl
