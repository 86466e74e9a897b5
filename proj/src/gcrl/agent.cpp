#include "flap/gcrl/agent.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "flap/core/batch_grad.hpp"

namespace flap::gcrl {

GcrlAgent::GcrlAgent(const AgentConfig& cfg)
    : cfg_(cfg),
      encoder_(cfg.encoder),
      policy_("policy", 2 * cfg.encoder.z_dim, cfg.hidden, cfg.action_dim,
              cfg.encoder.log_std_lo, cfg.encoder.log_std_hi, cfg.policy_log_std_init),
      q1_("q1", 2 * cfg.encoder.z_dim + cfg.action_dim, cfg.hidden),
      q2_("q2", 2 * cfg.encoder.z_dim + cfg.action_dim, cfg.hidden),
      q1_tgt_("q1_target", 2 * cfg.encoder.z_dim + cfg.action_dim, cfg.hidden),
      q2_tgt_("q2_target", 2 * cfg.encoder.z_dim + cfg.action_dim, cfg.hidden),
      v_("v", 2 * cfg.encoder.z_dim, cfg.hidden),
      opt_enc_(encoder_.net().params().size(), static_cast<float>(cfg.iql.learning_rate)),
      opt_pol_(policy_.params().size(), static_cast<float>(cfg.iql.learning_rate)),
      opt_q1_(q1_.params().size(), static_cast<float>(cfg.iql.learning_rate)),
      opt_q2_(q2_.params().size(), static_cast<float>(cfg.iql.learning_rate)),
      opt_v_(v_.params().size(), static_cast<float>(cfg.iql.learning_rate)) {}

void GcrlAgent::init(core::Rng rng) {
  encoder_.init(rng.child("encoder"));
  policy_.init(rng.child("policy"));
  q1_.init(rng.child("q1"));
  q2_.init(rng.child("q2"));
  v_.init(rng.child("v"));
  sync_targets();
}

void GcrlAgent::sync_targets() {
  q1_tgt_.params().copy_from(q1_.params());
  q2_tgt_.params().copy_from(q2_.params());
}

LossReport GcrlAgent::train_step(const data::Batch& batch, Phase phase, core::Rng& rng,
                                 bool parallel) {
  const std::size_t n = batch.transitions.size();
  if (n == 0) throw std::invalid_argument("train_step: empty batch");
  const int zd = cfg_.encoder.z_dim;

  // Noise drawn up front so the parallel blocks never touch the rng.
  std::vector<float> noise(3 * n * static_cast<std::size_t>(zd));
  for (auto& x : noise) x = static_cast<float>(rng.normal());

  IqlNets<float> nets{&encoder_.net(), &policy_, &q1_, &q2_, &q1_tgt_, &q2_tgt_, &v_};

  const bool train_encoder = phase == Phase::kPretrain;
  std::vector<core::GradTarget<float>> targets = {
      {&encoder_.net().params(), train_encoder ? &g_enc_ : nullptr},
      {&policy_.params(), &g_pol_},
      {&q1_.params(), &g_q1_},
      {&q2_.params(), &g_q2_},
      {&v_.params(), &g_v_},
      {&q1_tgt_.params(), nullptr},
      {&q2_tgt_.params(), nullptr},
  };

  std::vector<IqlLossValues> values(n);
  const double total = core::batch_mean_loss_grad<float>(
      n, targets, parallel, [&](core::Tape<float>& t, const std::vector<int>& handles, std::size_t i) {
        IqlHandles h;
        h.enc = handles[0];
        h.pol = handles[1];
        h.q1 = handles[2];
        h.q2 = handles[3];
        h.v = handles[4];
        h.q1t = handles[5];
        h.q2t = handles[6];
        const data::Transition& tr = batch.transitions[i];
        IqlSample<float> s;
        s.obs = tr.obs;
        s.next_obs = tr.next_obs;
        s.goal_obs = tr.goal_obs;
        s.action = tr.action;
        s.reward = tr.reward;
        s.done = tr.done ? 1.0f : 0.0f;
        const float* np = noise.data() + 3 * i * static_cast<std::size_t>(zd);
        s.noise_z = {np, static_cast<std::size_t>(zd)};
        s.noise_zg = {np + zd, static_cast<std::size_t>(zd)};
        s.noise_zn = {np + 2 * zd, static_cast<std::size_t>(zd)};
        return build_iql_sample_loss(t, h, nets, s, cfg_.iql, phase, &values[i]);
      });

  LossReport rep;
  rep.total = total;
  for (const auto& v : values) {
    rep.value_loss += v.value;
    rep.q_loss += v.q;
    rep.policy_loss += v.policy;
    rep.mean_kl += v.kl;
  }
  rep.value_loss /= static_cast<double>(n);
  rep.q_loss /= static_cast<double>(n);
  rep.policy_loss /= static_cast<double>(n);
  rep.mean_kl /= static_cast<double>(n);

  if (!std::isfinite(rep.total)) {
    std::ostringstream msg;
    msg << "train_step: non-finite loss (total=" << rep.total << " value=" << rep.value_loss
        << " q=" << rep.q_loss << " policy=" << rep.policy_loss << " kl=" << rep.mean_kl << ")";
    throw std::runtime_error(msg.str());
  }

  if (train_encoder) opt_enc_.step(encoder_.net().params().flat(), g_enc_);
  opt_pol_.step(policy_.params().flat(), g_pol_);
  opt_q1_.step(q1_.params().flat(), g_q1_);
  opt_q2_.step(q2_.params().flat(), g_q2_);
  opt_v_.step(v_.params().flat(), g_v_);

  const float rate = static_cast<float>(cfg_.iql.polyak_rate);
  q1_tgt_.params().polyak_from(q1_.params(), rate);
  q2_tgt_.params().polyak_from(q2_.params(), rate);
  return rep;
}

std::vector<float> GcrlAgent::act(std::span<const float> obs, std::span<const float> goal_latent,
                                  bool deterministic, core::Rng& rng) const {
  const int zd = cfg_.encoder.z_dim;
  std::vector<float> z;
  if (deterministic) {
    z = encoder_.encode_mean(obs);
  } else {
    z = encoder_.encode_sample(obs, rng);
  }
  std::vector<float> in(static_cast<std::size_t>(2 * zd));
  for (int i = 0; i < zd; ++i) in[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)];
  for (int i = 0; i < zd; ++i) {
    in[static_cast<std::size_t>(zd + i)] = goal_latent[static_cast<std::size_t>(i)];
  }
  std::vector<float> mean(static_cast<std::size_t>(cfg_.action_dim));
  std::vector<float> log_std(static_cast<std::size_t>(cfg_.action_dim));
  core::MlpScratch<float> scratch;
  policy_.forward_plain(in, mean, log_std, scratch);
  if (!deterministic) {
    for (std::size_t i = 0; i < mean.size(); ++i) {
      mean[i] += std::exp(log_std[i]) * static_cast<float>(rng.normal());
    }
  }
  // Box to env bounds: translation dims, then grip and drawer commands.
  const float mt = static_cast<float>(cfg_.max_translation);
  mean[0] = core::clamp_val(mean[0], -mt, mt);
  mean[1] = core::clamp_val(mean[1], -mt, mt);
  mean[2] = core::clamp_val(mean[2], -1.0f, 1.0f);
  mean[3] = core::clamp_val(mean[3], -1.0f, 1.0f);
  return mean;
}

double GcrlAgent::value(std::span<const float> za, std::span<const float> zb) const {
  std::vector<float> in(za.size() + zb.size());
  for (std::size_t i = 0; i < za.size(); ++i) in[i] = za[i];
  for (std::size_t i = 0; i < zb.size(); ++i) in[za.size() + i] = zb[i];
  return static_cast<double>(v_.forward_plain(in));
}

}  // namespace flap::gcrl
