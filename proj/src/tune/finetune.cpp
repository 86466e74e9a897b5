#include "flap/tune/finetune.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

namespace flap::tune {

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: size mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine_similarity: zero-norm vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double latent_reward(std::span<const float> z_t, std::span<const float> z_g, double eps_cos,
                     bool literal_paper_sign) {
  const double cos = cosine_similarity(z_t, z_g);
  const bool reached = literal_paper_sign ? cos < eps_cos : cos >= eps_cos;
  return reached ? 0.0 : -1.0;
}

std::span<const float> SubgoalTracker::current_goal(std::span<const float> z_t, double reach_dist,
                                                    int h) {
  const int last = static_cast<int>(plan_->z_seq.size()) - 1;
  if (active_ < last) {
    const auto& cur = plan_->z_seq[static_cast<std::size_t>(active_)];
    double d2 = 0.0;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const double d = static_cast<double>(z_t[i]) - cur[i];
      d2 += d * d;
    }
    if (std::sqrt(d2) <= reach_dist || steps_ >= h) {
      ++active_;
      steps_ = 0;
    }
  }
  ++steps_;
  return plan_->z_seq[static_cast<std::size_t>(active_)];
}

EpisodeResult run_episode(env::Env& e, const env::TaskSpec& task, std::uint64_t episode_seed,
                          const gcrl::GcrlAgent& agent, const PlanFn* planner,
                          const FinetuneConfig& cfg, bool deterministic, core::Rng& rng) {
  EpisodeResult res;
  env::ObservationVector obs_d = e.reset(task, episode_seed);
  const env::ObservationVector goal_d = e.goal_observation();

  auto to_f = [](const env::ObservationVector& v) {
    std::vector<float> f(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) f[i] = static_cast<float>(v[i]);
    return f;
  };
  std::vector<float> obs = to_f(obs_d);
  const std::vector<float> goal_obs = to_f(goal_d);

  const std::vector<float> z_g = agent.encoder().encode_mean(goal_obs);

  plan::SubgoalPlan plan;
  std::unique_ptr<SubgoalTracker> tracker;
  if (planner != nullptr) {
    try {
      plan = (*planner)(obs, goal_obs);
      res.plan_cost = plan.cost;
      tracker = std::make_unique<SubgoalTracker>(plan);
    } catch (const std::exception&) {
      res.plan_failed = true;
      return res;  // aborted episode counts as a failure
    }
  }

  res.trajectory.scene_id = task.scene.scene_id;
  res.trajectory.commanded_goal = goal_obs;
  res.trajectory.observations.push_back(obs);

  while (!e.episode_over()) {
    std::span<const float> goal_latent = z_g;
    if (tracker != nullptr) {
      const std::vector<float> z_t = agent.encoder().encode_mean(obs);
      goal_latent = tracker->current_goal(z_t, cfg.reach_dist, cfg.h);
    }
    const std::vector<float> a = agent.act(obs, goal_latent, deterministic, rng);
    const env::ActionVector act{static_cast<double>(a[0]), static_cast<double>(a[1]),
                                static_cast<double>(a[2]), static_cast<double>(a[3])};
    obs_d = e.step(act);
    obs = to_f(obs_d);
    res.trajectory.observations.push_back(obs);
    res.trajectory.actions.push_back(a);
  }

  res.success = e.succeeded();
  return res;
}

void recompute_batch_rewards(data::Batch& batch, const enc::StateEncoder& encoder,
                             const FinetuneConfig& cfg, core::Rng& rng) {
  std::vector<float> noise(static_cast<std::size_t>(encoder.z_dim()));
  for (auto& tr : batch.transitions) {
    for (auto& n : noise) n = static_cast<float>(rng.normal());
    const std::vector<float> zn = enc::sample_latent(encoder.encode(tr.next_obs), noise);
    for (auto& n : noise) n = static_cast<float>(rng.normal());
    const std::vector<float> zg = enc::sample_latent(encoder.encode(tr.goal_obs), noise);
    tr.reward =
        static_cast<float>(latent_reward(zn, zg, cfg.eps_cos, cfg.literal_paper_reward_sign));
    tr.done = tr.reward == 0.0f;
  }
}

std::vector<EpochMetrics> finetune_loop(FinetuneSetup& setup, core::Rng rng,
                                        const std::function<void(const EpochMetrics&)>& on_epoch) {
  if (setup.agent == nullptr || setup.offline == nullptr || setup.online == nullptr) {
    throw std::invalid_argument("finetune_loop: missing agent or buffers");
  }
  gcrl::GcrlAgent& agent = *setup.agent;
  const FinetuneConfig& cfg = setup.cfg;
  std::vector<EpochMetrics> out;
  out.reserve(static_cast<std::size_t>(cfg.n_epochs));

  env::Env e;
  core::Rng train_rng = rng.child("train");

  for (int epoch = 0; epoch < cfg.n_epochs; ++epoch) {
    EpochMetrics m;
    m.epoch = epoch;

    int successes = 0;
    double cost_sum = 0.0;
    int cost_n = 0;
    for (int ep = 0; ep < cfg.episodes_per_epoch; ++ep) {
      core::Rng ep_rng = rng.child("episode",
                                   static_cast<std::uint64_t>(epoch) * 10000 +
                                       static_cast<std::uint64_t>(ep));
      const std::uint64_t env_seed =
          rng.child("env", static_cast<std::uint64_t>(epoch) * 10000 +
                               static_cast<std::uint64_t>(ep))
              .seed();
      EpisodeResult res = run_episode(e, setup.task, env_seed, agent, setup.planner, cfg,
                                      /*deterministic=*/false, ep_rng);
      if (res.success) ++successes;
      if (!res.plan_failed) {
        setup.online->push_back(std::move(res.trajectory));
        if (std::isfinite(res.plan_cost)) {
          cost_sum += res.plan_cost;
          ++cost_n;
        }
      }
    }
    m.success_rate = static_cast<double>(successes) / cfg.episodes_per_epoch;
    if (cost_n > 0) m.mean_plan_cost = cost_sum / cost_n;

    gcrl::LossReport acc;
    for (int step = 0; step < cfg.grad_steps_per_epoch; ++step) {
      data::Batch batch = data::mix_batch(*setup.offline, *setup.online, cfg.batch_size,
                                          setup.offline_relabel, setup.online_relabel, train_rng);
      // Latent-similarity reward replaces the sparse index reward online.
      recompute_batch_rewards(batch, agent.encoder(), cfg, train_rng);
      const gcrl::LossReport rep =
          agent.train_step(batch, gcrl::Phase::kFinetune, train_rng, setup.parallel);
      acc.total += rep.total;
      acc.value_loss += rep.value_loss;
      acc.q_loss += rep.q_loss;
      acc.policy_loss += rep.policy_loss;
      acc.mean_kl += rep.mean_kl;
    }
    if (cfg.grad_steps_per_epoch > 0) {
      const double n = cfg.grad_steps_per_epoch;
      acc.total /= n;
      acc.value_loss /= n;
      acc.q_loss /= n;
      acc.policy_loss /= n;
      acc.mean_kl /= n;
    }
    m.losses = acc;
    out.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return out;
}

}  // namespace flap::tune
