#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "flap/data/relabel.hpp"
#include "flap/env/env.hpp"
#include "flap/gcrl/agent.hpp"
#include "flap/plan/mppi.hpp"

namespace flap::tune {

struct FinetuneConfig {
  int h = 25;  // subgoal step budget; set to the affordance delta_t
  double eps_cos = 0.97;
  double reach_dist = 0.03;
  int episodes_per_epoch = 5;
  int n_epochs = 40;
  int grad_steps_per_epoch = 100;
  std::size_t batch_size = 128;
  // The paper writes the success indicator with the inequality pointing the
  // other way; flipping this reproduces that literal reading.
  bool literal_paper_reward_sign = false;
};

double cosine_similarity(std::span<const float> a, std::span<const float> b);

// Thresholded cosine similarity: 0 once the goal is reached, -1 otherwise.
double latent_reward(std::span<const float> z_t, std::span<const float> z_g, double eps_cos,
                     bool literal_paper_sign = false);

// Walks the planned subgoals: advance on reach (latent Euclidean distance)
// or when the per-subgoal step budget h runs out; never retreats, parks on
// the final subgoal.
class SubgoalTracker {
 public:
  explicit SubgoalTracker(const plan::SubgoalPlan& plan) : plan_(&plan) {}

  std::span<const float> current_goal(std::span<const float> z_t, double reach_dist, int h);

  int active_index() const { return active_; }
  int steps_on_current() const { return steps_; }

 private:
  const plan::SubgoalPlan* plan_;
  int active_ = 0;
  int steps_ = 0;
};

// Builds a latent-space subgoal plan from the episode's initial and goal
// observations (raw, so raw-space planners can work on them directly);
// absent for the model-free baseline.
using PlanFn =
    std::function<plan::SubgoalPlan(std::span<const float>, std::span<const float>)>;

struct EpisodeResult {
  data::Trajectory trajectory;
  bool success = false;
  bool plan_failed = false;
  double plan_cost = std::numeric_limits<double>::quiet_NaN();
};

EpisodeResult run_episode(env::Env& e, const env::TaskSpec& task, std::uint64_t episode_seed,
                          const gcrl::GcrlAgent& agent, const PlanFn* planner,
                          const FinetuneConfig& cfg, bool deterministic, core::Rng& rng);

struct EpochMetrics {
  int epoch = 0;
  double success_rate = 0.0;
  gcrl::LossReport losses;
  double mean_plan_cost = std::numeric_limits<double>::quiet_NaN();
};

// Replaces each transition's sparse reward with the latent-similarity reward
// of the sampled next-state latent against the sampled goal latent; done
// mirrors reward == 0. Used on every fine-tuning batch.
void recompute_batch_rewards(data::Batch& batch, const enc::StateEncoder& encoder,
                             const FinetuneConfig& cfg, core::Rng& rng);

struct FinetuneSetup {
  gcrl::GcrlAgent* agent = nullptr;
  const data::TrajectoryBuffer* offline = nullptr;
  data::TrajectoryBuffer* online = nullptr;
  env::TaskSpec task;
  const PlanFn* planner = nullptr;  // null: condition directly on z_g
  FinetuneConfig cfg;
  data::RelabelConfig offline_relabel{0.0, false};
  data::RelabelConfig online_relabel{0.3, false};
  bool parallel = true;
};

// Online fine-tuning: per epoch, episodes_per_epoch rollouts into the online
// buffer, then gradient steps on mixed batches whose rewards are recomputed
// with latent_reward against the sampled goal latent. The encoder (and the
// affordance model, which only the planner touches) stays byte-frozen.
std::vector<EpochMetrics> finetune_loop(FinetuneSetup& setup, core::Rng rng,
                                        const std::function<void(const EpochMetrics&)>&
                                            on_epoch = {});

}  // namespace flap::tune
