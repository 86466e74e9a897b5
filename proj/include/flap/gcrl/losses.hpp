#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "flap/core/gaussian.hpp"
#include "flap/core/gaussian_graphs.hpp"
#include "flap/core/nets.hpp"
#include "flap/core/tape.hpp"

namespace flap::gcrl {

struct IqlConfig {
  double gamma = 0.99;
  double tau_expectile = 0.7;
  double awr_temperature = 3.0;
  double awr_weight_clip = 100.0;
  double polyak_rate = 0.005;
  double alpha_vib = 0.01;
  double learning_rate = 3e-4;
  int batch_size = 128;
};

enum class Phase { kPretrain, kFinetune };

// Asymmetric squared loss |tau - 1{residual < 0}| * residual^2.
inline double expectile_loss(double residual, double tau) {
  const double w = residual < 0.0 ? std::fabs(tau - 1.0) : tau;
  return w * residual * residual;
}

template <class Real>
struct IqlNets {
  const core::GaussianNet<Real>* encoder = nullptr;
  const core::PolicyNet<Real>* policy = nullptr;
  const core::ScalarNet<Real>* q1 = nullptr;
  const core::ScalarNet<Real>* q2 = nullptr;
  const core::ScalarNet<Real>* q1_target = nullptr;
  const core::ScalarNet<Real>* q2_target = nullptr;
  const core::ScalarNet<Real>* v = nullptr;
};

// Tape binding handles; bind order must match GradTarget order in the batch
// driver: encoder, policy, q1, q2, v, q1_target, q2_target.
struct IqlHandles {
  int enc = -1, pol = -1, q1 = -1, q2 = -1, v = -1, q1t = -1, q2t = -1;
};

template <class Real>
IqlHandles bind_iql(core::Tape<Real>& t, const IqlNets<Real>& nets, Real* g_enc, Real* g_pol,
                    Real* g_q1, Real* g_q2, Real* g_v) {
  IqlHandles h;
  h.enc = t.bind(nets.encoder->params(), g_enc);
  h.pol = t.bind(nets.policy->params(), g_pol);
  h.q1 = t.bind(nets.q1->params(), g_q1);
  h.q2 = t.bind(nets.q2->params(), g_q2);
  h.v = t.bind(nets.v->params(), g_v);
  h.q1t = t.bind(nets.q1_target->params(), nullptr);
  h.q2t = t.bind(nets.q2_target->params(), nullptr);
  return h;
}

template <class Real>
struct IqlSample {
  std::span<const Real> obs;
  std::span<const Real> next_obs;
  std::span<const Real> goal_obs;
  std::span<const Real> action;
  Real reward = Real(-1);
  Real done = Real(0);
  // One reparameterization draw per latent per batch element.
  std::span<const Real> noise_z;
  std::span<const Real> noise_zg;
  std::span<const Real> noise_zn;
};

struct IqlLossValues {
  double value = 0.0;
  double q = 0.0;
  double policy = 0.0;
  double kl = 0.0;  // mean of the two per-latent KL terms
};

namespace detail {
using core::gaussian_log_prob_var;
using core::kl_std_normal_var;
using core::reparam;
}  // namespace detail

// Builds one sample's IQL + VIB loss graph and returns the scalar total.
// Pretrain: encoder runs on the tape and receives gradients from all three
// RL losses plus the two KL penalties. Finetune: latents are computed
// outside the tape (frozen encoder) and the KL terms join as constants.
// TD targets, the expectile indicator, and AWR weights are detached, and
// target networks are evaluated forward-only, matching standard IQL.
template <class Real>
typename core::Tape<Real>::Var build_iql_sample_loss(core::Tape<Real>& t, const IqlHandles& h,
                                                     const IqlNets<Real>& nets,
                                                     const IqlSample<Real>& s,
                                                     const IqlConfig& cfg, Phase phase,
                                                     IqlLossValues* out_values = nullptr) {
  using Var = typename core::Tape<Real>::Var;
  const int zd = nets.encoder->out_dim();

  Var z{}, zg{};
  Var kl_pair{};
  bool has_kl_pair = false;
  double kl_t = 0.0, kl_g = 0.0;
  std::vector<Real> zn_next(static_cast<std::size_t>(zd));

  if (phase == Phase::kPretrain) {
    auto eo = nets.encoder->forward(t, h.enc, t.leaf(s.obs));
    auto go = nets.encoder->forward(t, h.enc, t.leaf(s.goal_obs));
    z = detail::reparam(t, eo.mean, eo.log_std, s.noise_z);
    zg = detail::reparam(t, go.mean, go.log_std, s.noise_zg);
    auto klt_var = detail::kl_std_normal_var(t, eo.mean, eo.log_std);
    auto klg_var = detail::kl_std_normal_var(t, go.mean, go.log_std);
    kl_t = static_cast<double>(t.scalar(klt_var));
    kl_g = static_cast<double>(t.scalar(klg_var));
    if (cfg.alpha_vib != 0.0) {
      kl_pair = t.add(klt_var, klg_var);
      has_kl_pair = true;
    }
  } else {
    std::vector<Real> mu(static_cast<std::size_t>(zd)), ls(static_cast<std::size_t>(zd));
    std::vector<Real> zv(static_cast<std::size_t>(zd));
    core::MlpScratch<Real> scratch;
    nets.encoder->forward_plain(s.obs, mu, ls, scratch);
    for (int i = 0; i < zd; ++i) {
      zv[static_cast<std::size_t>(i)] =
          mu[static_cast<std::size_t>(i)] +
          std::exp(ls[static_cast<std::size_t>(i)]) * s.noise_z[static_cast<std::size_t>(i)];
    }
    kl_t = core::kl_to_standard_normal<Real>(mu, ls);
    z = t.leaf(zv);
    nets.encoder->forward_plain(s.goal_obs, mu, ls, scratch);
    for (int i = 0; i < zd; ++i) {
      zv[static_cast<std::size_t>(i)] =
          mu[static_cast<std::size_t>(i)] +
          std::exp(ls[static_cast<std::size_t>(i)]) * s.noise_zg[static_cast<std::size_t>(i)];
    }
    kl_g = core::kl_to_standard_normal<Real>(mu, ls);
    zg = t.leaf(zv);
  }

  // Next-state latent for the TD target (fully detached).
  {
    std::vector<Real> mu(static_cast<std::size_t>(zd)), ls(static_cast<std::size_t>(zd));
    core::MlpScratch<Real> scratch;
    nets.encoder->forward_plain(s.next_obs, mu, ls, scratch);
    for (int i = 0; i < zd; ++i) {
      zn_next[static_cast<std::size_t>(i)] =
          mu[static_cast<std::size_t>(i)] +
          std::exp(ls[static_cast<std::size_t>(i)]) * s.noise_zn[static_cast<std::size_t>(i)];
    }
  }

  const auto z_val = t.value(z);
  const auto zg_val = t.value(zg);

  // --- Q loss: mean over both heads of (r + gamma (1-done) V(z', zg) - Q)^2
  std::vector<Real> vin(zn_next.size() + zg_val.size());
  for (std::size_t i = 0; i < zn_next.size(); ++i) vin[i] = zn_next[i];
  for (std::size_t i = 0; i < zg_val.size(); ++i) vin[zn_next.size() + i] = zg_val[i];
  const Real v_next = nets.v->forward_plain(vin);
  const Real td_target =
      s.reward + static_cast<Real>(cfg.gamma) * (Real(1) - s.done) * v_next;

  auto act_leaf = t.leaf(s.action);
  auto qin = t.concat(z, zg, act_leaf);
  auto q1v = nets.q1->forward(t, h.q1, qin);
  auto q2v = nets.q2->forward(t, h.q2, qin);
  auto tq = t.leaf1(td_target);
  auto q_loss = t.scale(t.add(t.square(t.sub(tq, q1v)), t.square(t.sub(tq, q2v))), Real(0.5));

  // --- Value loss: expectile of (min target Q - V)
  std::vector<Real> qin_val(z_val.size() + zg_val.size() + s.action.size());
  {
    std::size_t at = 0;
    for (Real x : z_val) qin_val[at++] = x;
    for (Real x : zg_val) qin_val[at++] = x;
    for (Real x : s.action) qin_val[at++] = x;
  }
  const Real min_q_tgt = std::min(nets.q1_target->forward_plain(qin_val),
                                  nets.q2_target->forward_plain(qin_val));
  auto vin_var = t.concat(z, zg);
  auto v_var = nets.v->forward(t, h.v, vin_var);
  auto residual = t.sub(t.leaf1(min_q_tgt), v_var);
  const Real w_exp = t.scalar(residual) < Real(0)
                         ? static_cast<Real>(std::fabs(cfg.tau_expectile - 1.0))
                         : static_cast<Real>(cfg.tau_expectile);
  auto value_loss = t.scale(t.square(residual), w_exp);

  // --- Policy loss: AWR-weighted negative log-likelihood
  const Real min_q = std::min(nets.q1->forward_plain(qin_val), nets.q2->forward_plain(qin_val));
  std::vector<Real> vzg(z_val.size() + zg_val.size());
  for (std::size_t i = 0; i < z_val.size(); ++i) vzg[i] = z_val[i];
  for (std::size_t i = 0; i < zg_val.size(); ++i) vzg[z_val.size() + i] = zg_val[i];
  const Real adv = min_q - nets.v->forward_plain(vzg);
  const Real w_awr =
      std::min(static_cast<Real>(std::exp(static_cast<double>(adv) / cfg.awr_temperature)),
               static_cast<Real>(cfg.awr_weight_clip));
  auto po = nets.policy->forward(t, h.pol, vin_var);
  auto logp = detail::gaussian_log_prob_var(t, act_leaf, po.mean, po.log_std);
  auto policy_loss = t.scale(logp, -w_awr);

  auto total = t.add(t.add(value_loss, q_loss), policy_loss);
  if (has_kl_pair) {
    total = t.add(total, t.scale(kl_pair, static_cast<Real>(cfg.alpha_vib)));
  } else if (cfg.alpha_vib != 0.0) {
    total = t.add_const(total, static_cast<Real>(cfg.alpha_vib * (kl_t + kl_g)));
  }

  if (out_values != nullptr) {
    out_values->value = static_cast<double>(t.scalar(value_loss));
    out_values->q = static_cast<double>(t.scalar(q_loss));
    out_values->policy = static_cast<double>(t.scalar(policy_loss));
    out_values->kl = 0.5 * (kl_t + kl_g);
  }
  return total;
}

}  // namespace flap::gcrl
