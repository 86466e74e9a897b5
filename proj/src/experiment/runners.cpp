#include "flap/experiment/runners.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

#include "flap/plan/adapters.hpp"

namespace flap::experiment {

namespace {

gcrl::AgentConfig agent_config(const RunConfig& cfg) {
  gcrl::AgentConfig ac;
  ac.encoder.obs_dim = env::kObsDim;
  ac.encoder.z_dim = cfg.encoder.z_dim;
  ac.encoder.hidden = cfg.encoder.hidden;
  ac.encoder.log_std_lo = static_cast<float>(cfg.encoder.log_std_lo);
  ac.encoder.log_std_hi = static_cast<float>(cfg.encoder.log_std_hi);
  ac.action_dim = env::kActionDim;
  ac.hidden = cfg.encoder.hidden;
  ac.policy_log_std_init = static_cast<float>(cfg.gcrl.policy_log_std_init);
  ac.iql.gamma = cfg.gcrl.gamma;
  ac.iql.tau_expectile = cfg.gcrl.tau_expectile;
  ac.iql.awr_temperature = cfg.gcrl.awr_temperature;
  ac.iql.awr_weight_clip = cfg.gcrl.awr_weight_clip;
  ac.iql.polyak_rate = cfg.gcrl.polyak_rate;
  ac.iql.alpha_vib = cfg.gcrl.alpha_vib;
  ac.iql.learning_rate = cfg.gcrl.learning_rate;
  ac.iql.batch_size = cfg.dataset.batch_size;
  ac.max_translation = env::kMaxStep;
  return ac;
}

aff::AffordanceConfig affordance_config(const RunConfig& cfg) {
  aff::AffordanceConfig ac;
  ac.z_dim = cfg.encoder.z_dim;
  ac.u_dim = cfg.affordance.u_dim;
  ac.hidden = cfg.affordance.hidden;
  ac.delta_t = cfg.affordance.delta_t;
  ac.beta = cfg.affordance.beta;
  ac.learning_rate = cfg.affordance.learning_rate;
  return ac;
}

}  // namespace

Models::Models(const RunConfig& cfg)
    : agent(agent_config(cfg)),
      affordance(affordance_config(cfg)),
      raw_cvae(env::kObsDim, cfg.affordance.u_dim, cfg.affordance.hidden,
               cfg.affordance.learning_rate) {}

std::string RunPaths::metrics(const std::string& method, std::uint64_t seed) const {
  return out_dir + "/metrics_" + method + "_seed" + std::to_string(seed) + ".csv";
}

std::string RunPaths::finetuned_checkpoint(const std::string& method) const {
  return out_dir + "/checkpoint_" + method + "_finetuned.ckpt";
}

RunPaths run_paths(const RunConfig& cfg) {
  RunPaths p;
  p.out_dir = cfg.run.out_dir;
  p.dataset = p.out_dir + "/dataset.flapds";
  p.checkpoint = p.out_dir + "/checkpoint.ckpt";
  p.pretrain_losses = p.out_dir + "/pretrain_losses.csv";
  p.config_copy = p.out_dir + "/config.ini";
  p.plan_dump = p.out_dir + "/plan.json";
  p.plots_dir = p.out_dir + "/plots";
  p.latents = p.out_dir + "/latents.csv";
  return p;
}

env::SceneTransform target_scene(const RunConfig& cfg) {
  return env::SceneTransform::make(cfg.datagen.target_scene_id, cfg.datagen.seed);
}

env::TaskSpec task_from_config(const RunConfig& cfg) {
  env::TaskId id = env::TaskId::kC;
  if (cfg.env.task == "A") id = env::TaskId::kA;
  if (cfg.env.task == "B") id = env::TaskId::kB;
  return env::make_task(id, target_scene(cfg), cfg.run.seed, cfg.env.success_tol,
                        cfg.env.max_steps);
}

plan::PlannerConfig planner_config(const RunConfig& cfg, const Calibration& calib) {
  plan::PlannerConfig pc;
  pc.n_subgoals = cfg.planner.n_subgoals;
  pc.n_samples = cfg.planner.n_samples;
  pc.n_iters = cfg.planner.n_iters;
  pc.noise_schedule = parse_double_list(cfg.planner.noise_schedule);
  pc.eta1 = cfg.planner.eta1;
  pc.eta2 = cfg.planner.eta2;
  pc.eta3 = cfg.planner.eta3;
  pc.lambda = cfg.planner.lambda;
  pc.v_min = calib.v_min;
  pc.v_max = calib.v_max;
  return pc;
}

tune::FinetuneConfig finetune_config(const RunConfig& cfg, const Calibration& calib) {
  tune::FinetuneConfig fc;
  fc.h = cfg.finetune.h > 0 ? cfg.finetune.h : cfg.affordance.delta_t;
  fc.eps_cos = cfg.finetune.eps_cos;
  fc.reach_dist = cfg.finetune.reach_dist > 0.0 ? cfg.finetune.reach_dist : calib.reach_dist;
  fc.episodes_per_epoch = cfg.finetune.episodes_per_epoch;
  fc.n_epochs = cfg.finetune.n_epochs;
  fc.grad_steps_per_epoch = cfg.finetune.grad_steps_per_epoch;
  fc.batch_size = static_cast<std::size_t>(cfg.dataset.batch_size);
  fc.literal_paper_reward_sign = cfg.finetune.literal_reward_sign;
  return fc;
}

namespace {

data::Batch offline_batch(const data::TrajectoryBuffer& offline, std::size_t size,
                          const data::RelabelConfig& cfg, core::Rng& rng) {
  data::Batch b;
  b.transitions.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    data::Transition t = data::relabel_sample(offline, cfg, rng);
    t.provenance = data::Provenance::kOffline;
    b.transitions.push_back(std::move(t));
  }
  return b;
}

}  // namespace

Calibration run_pretrain(const RunConfig& cfg, const data::TrajectoryBuffer& offline,
                         Models& models, const std::string& loss_csv_path) {
  core::Rng root(cfg.run.seed);
  models.agent.init(root.child("agent_init"));
  models.affordance.init(root.child("affordance_init"));
  models.raw_cvae.init(root.child("raw_cvae_init"));

  const data::RelabelConfig offline_relabel{cfg.dataset.gt_fraction_offline,
                                            cfg.dataset.geometric_future_bias};
  const std::size_t batch = static_cast<std::size_t>(cfg.dataset.batch_size);
  const bool parallel = cfg.run.parallel;

  std::ofstream losses;
  if (!loss_csv_path.empty()) {
    losses.open(loss_csv_path, std::ios::trunc);
    losses << "step,stage,total,value_loss,q_loss,policy_loss,mean_kl\n";
  }

  core::Rng rl_rng = root.child("pretrain_rl");
  for (int step = 0; step < cfg.gcrl.pretrain_steps; ++step) {
    data::Batch b = offline_batch(offline, batch, offline_relabel, rl_rng);
    const gcrl::LossReport rep =
        models.agent.train_step(b, gcrl::Phase::kPretrain, rl_rng, parallel);
    if (losses.is_open() && (step % cfg.experiment.metrics_every == 0 ||
                             step + 1 == cfg.gcrl.pretrain_steps)) {
      losses << step << ",rl," << rep.total << "," << rep.value_loss << "," << rep.q_loss << ","
             << rep.policy_loss << "," << rep.mean_kl << "\n";
    }
  }

  core::Rng aff_rng = root.child("pretrain_affordance");
  for (int step = 0; step < cfg.affordance.steps; ++step) {
    const aff::ElboReport rep =
        models.affordance.train_step(offline, models.agent.encoder(), batch, aff_rng, parallel);
    if (losses.is_open() && (step % cfg.experiment.metrics_every == 0 ||
                             step + 1 == cfg.affordance.steps)) {
      losses << step << ",affordance," << rep.total << "," << rep.reconstruction_kl << ","
             << rep.prior_kl << ",0,0\n";
    }
  }

  core::Rng raw_rng = root.child("pretrain_raw_cvae");
  for (int step = 0; step < cfg.experiment.raw_cvae_steps; ++step) {
    const double loss = models.raw_cvae.train_step(offline, cfg.affordance.delta_t, batch,
                                                   raw_rng, parallel);
    if (losses.is_open() && (step % cfg.experiment.metrics_every == 0 ||
                             step + 1 == cfg.experiment.raw_cvae_steps)) {
      losses << step << ",raw_cvae," << loss << ",0,0,0,0\n";
    }
  }

  // Calibration from the offline buffer.
  Calibration calib;
  core::Rng cal_rng = root.child("calibration");
  const plan::LatentPairValue value(models.agent);
  const auto bounds = plan::calibrate_value_bounds(
      offline, value, models.agent.encoder(), cfg.affordance.delta_t, cal_rng, 20000,
      cfg.planner.vmin_percentile, cfg.planner.vmax_percentile);
  calib.v_min = bounds.first;
  calib.v_max = bounds.second;

  // eps_cos: 90th percentile of successor-pair cosine similarity.
  // reach_dist: 5th percentile of same-state sampled-latent distance.
  std::vector<double> cosines, dists;
  const std::size_t n_cal = 4000;
  std::vector<float> noise(static_cast<std::size_t>(models.agent.encoder().z_dim()));
  for (std::size_t i = 0; i < n_cal; ++i) {
    const data::Trajectory& tr = offline[cal_rng.uniform_index(offline.size())];
    const std::size_t L = tr.length();
    if (L < 1) continue;
    const std::size_t t = cal_rng.uniform_index(L);
    const auto ga = models.agent.encoder().encode(tr.observations[t]);
    const auto gb = models.agent.encoder().encode(tr.observations[t + 1]);
    for (auto& x : noise) x = static_cast<float>(cal_rng.normal());
    const auto za = enc::sample_latent(ga, noise);
    for (auto& x : noise) x = static_cast<float>(cal_rng.normal());
    const auto zb = enc::sample_latent(gb, noise);
    cosines.push_back(tune::cosine_similarity(za, zb));
    for (auto& x : noise) x = static_cast<float>(cal_rng.normal());
    const auto za2 = enc::sample_latent(ga, noise);
    double d2 = 0.0;
    for (std::size_t j = 0; j < za.size(); ++j) {
      const double d = static_cast<double>(za[j]) - za2[j];
      d2 += d * d;
    }
    dists.push_back(std::sqrt(d2));
  }
  std::sort(cosines.begin(), cosines.end());
  std::sort(dists.begin(), dists.end());
  if (!cosines.empty()) {
    calib.eps_cos = cosines[static_cast<std::size_t>(0.9 * (cosines.size() - 1))];
    calib.reach_dist = dists[static_cast<std::size_t>(0.05 * (dists.size() - 1))];
  }
  return calib;
}

Checkpoint make_checkpoint(const RunConfig& cfg, const Models& models, const Calibration& calib) {
  Checkpoint ckpt;
  ckpt.config_hash = config_hash(cfg);
  ckpt.add_block(models.agent.encoder().net().params());
  ckpt.add_block(models.agent.policy().params());
  ckpt.add_block(models.agent.q1().params());
  ckpt.add_block(models.agent.q2().params());
  ckpt.add_block(models.agent.q1_target().params());
  ckpt.add_block(models.agent.q2_target().params());
  ckpt.add_block(models.agent.v().params());
  ckpt.add_block(models.affordance.encoder_net().params());
  ckpt.add_block(models.affordance.decoder_net().params());
  ckpt.add_block(models.raw_cvae.encoder_net().params());
  ckpt.add_block(models.raw_cvae.decoder_net().params());
  ckpt.add_scalar("calib/v_min", calib.v_min);
  ckpt.add_scalar("calib/v_max", calib.v_max);
  ckpt.add_scalar("calib/eps_cos", calib.eps_cos);
  ckpt.add_scalar("calib/reach_dist", calib.reach_dist);
  return ckpt;
}

bool restore_models(const Checkpoint& ckpt, const RunConfig& cfg, Models& models,
                    Calibration* calib) {
  const bool hash_ok = ckpt.config_hash == config_hash(cfg);
  if (!hash_ok) {
    std::cerr << "warning: checkpoint config hash " << ckpt.config_hash
              << " differs from current config hash " << config_hash(cfg) << "\n";
  }
  ckpt.restore_block(models.agent.encoder().net().params());
  ckpt.restore_block(models.agent.policy().params());
  ckpt.restore_block(models.agent.q1().params());
  ckpt.restore_block(models.agent.q2().params());
  ckpt.restore_block(models.agent.q1_target().params());
  ckpt.restore_block(models.agent.q2_target().params());
  ckpt.restore_block(models.agent.v().params());
  ckpt.restore_block(models.affordance.encoder_net().params());
  ckpt.restore_block(models.affordance.decoder_net().params());
  ckpt.restore_block(models.raw_cvae.encoder_net().params());
  ckpt.restore_block(models.raw_cvae.decoder_net().params());
  if (calib != nullptr) {
    calib->v_min = ckpt.scalar("calib/v_min");
    calib->v_max = ckpt.scalar("calib/v_max");
    calib->eps_cos = ckpt.scalar("calib/eps_cos");
    calib->reach_dist = ckpt.scalar("calib/reach_dist");
  }
  return hash_ok;
}

tune::PlanFn make_planner_fn(BaselineKind kind, const Models& models, const Calibration& calib,
                             const RunConfig& cfg, core::Rng planner_rng) {
  if (kind == BaselineKind::kModelFree) return {};
  const plan::PlannerConfig pc = planner_config(cfg, calib);
  const bool parallel = cfg.run.parallel;
  auto rng = std::make_shared<core::Rng>(planner_rng);

  if (kind == BaselineKind::kFlap) {
    auto dynamics = std::make_shared<plan::AffordanceDynamics>(models.affordance);
    auto value = std::make_shared<plan::LatentPairValue>(models.agent);
    const enc::StateEncoder* encoder = &models.agent.encoder();
    return [dynamics, value, pc, rng, encoder, parallel](std::span<const float> obs,
                                                         std::span<const float> goal_obs) {
      const std::vector<float> z0 = encoder->encode_mean(obs);
      const std::vector<float> zg = encoder->encode_mean(goal_obs);
      return plan::mppi_plan(*dynamics, *value, pc, z0, zg, *rng, parallel);
    };
  }

  // Raw-space planner: MPPI over observation-space subgoals, value computed
  // on encoded pairs, then each subgoal is encoded for the policy.
  auto dynamics = std::make_shared<RawCvaeDynamics>(models.raw_cvae);
  auto latent_value = std::make_shared<plan::LatentPairValue>(models.agent);
  auto value = std::make_shared<EncodedPairValue>(models.agent.encoder(), *latent_value);
  const enc::StateEncoder* encoder = &models.agent.encoder();
  return [dynamics, value, latent_value, pc, rng, encoder, parallel](
             std::span<const float> obs, std::span<const float> goal_obs) {
    plan::SubgoalPlan raw =
        plan::mppi_plan(*dynamics, *value, pc, obs, goal_obs, *rng, parallel);
    plan::SubgoalPlan out;
    out.u_seq = raw.u_seq;
    out.cost = raw.cost;
    out.cost_terms = raw.cost_terms;
    out.z_seq.reserve(raw.z_seq.size());
    for (std::size_t k = 0; k + 1 < raw.z_seq.size(); ++k) {
      out.z_seq.push_back(encoder->encode_mean(raw.z_seq[k]));
    }
    out.z_seq.push_back(encoder->encode_mean(goal_obs));
    return out;
  };
}

FinetuneRunResult run_finetune(const RunConfig& cfg, Models& models, const Calibration& calib,
                               BaselineKind kind, const data::TrajectoryBuffer& offline) {
  core::Rng root(cfg.run.seed);
  const tune::PlanFn planner =
      make_planner_fn(kind, models, calib, cfg, root.child("planner"));

  data::TrajectoryBuffer online;
  tune::FinetuneSetup setup;
  setup.agent = &models.agent;
  setup.offline = &offline;
  setup.online = &online;
  setup.task = task_from_config(cfg);
  setup.planner = planner ? &planner : nullptr;
  setup.cfg = finetune_config(cfg, calib);
  setup.offline_relabel = {cfg.dataset.gt_fraction_offline, cfg.dataset.geometric_future_bias};
  setup.online_relabel = {cfg.dataset.gt_fraction_online, cfg.dataset.geometric_future_bias};
  setup.parallel = cfg.run.parallel;

  const std::vector<tune::EpochMetrics> epochs =
      tune::finetune_loop(setup, root.child("finetune"));

  FinetuneRunResult res;
  res.rows.reserve(epochs.size());
  for (const auto& m : epochs) {
    MetricsRow r;
    r.epoch = m.epoch;
    r.seed = cfg.run.seed;
    r.method = baseline_name(kind);
    r.success_rate = m.success_rate;
    r.value_loss = m.losses.value_loss;
    r.q_loss = m.losses.q_loss;
    r.policy_loss = m.losses.policy_loss;
    r.mean_kl = m.losses.mean_kl;
    r.plan_cost = m.mean_plan_cost;
    res.rows.push_back(std::move(r));
  }
  res.final_success_rate = run_eval(cfg, models, calib, kind, cfg.experiment.eval_episodes);
  return res;
}

double run_eval(const RunConfig& cfg, const Models& models, const Calibration& calib,
                BaselineKind kind, int n_episodes) {
  if (n_episodes == 0) {
    std::cerr << "warning: run_eval with 0 episodes reports NaN\n";
    return std::nan("");
  }
  core::Rng root = core::Rng(cfg.run.seed).child("eval");
  const tune::PlanFn planner = make_planner_fn(kind, models, calib, cfg, root.child("planner"));
  const env::TaskSpec task = task_from_config(cfg);
  const tune::FinetuneConfig fc = finetune_config(cfg, calib);

  env::Env e;
  int successes = 0;
  for (int i = 0; i < n_episodes; ++i) {
    core::Rng ep_rng = root.child("episode", static_cast<std::uint64_t>(i));
    const std::uint64_t env_seed = root.child("env", static_cast<std::uint64_t>(i)).seed();
    const tune::EpisodeResult res =
        tune::run_episode(e, task, env_seed, models.agent, planner ? &planner : nullptr, fc,
                          /*deterministic=*/true, ep_rng);
    if (res.success) ++successes;
  }
  return static_cast<double>(successes) / n_episodes;
}

}  // namespace flap::experiment
