#pragma once

#include <vector>

#include "flap/core/rng.hpp"
#include "flap/data/trajectory.hpp"

namespace flap::data {

enum class Provenance { kOffline, kOnline };

struct Transition {
  std::vector<float> obs;
  std::vector<float> next_obs;
  std::vector<float> action;
  std::vector<float> goal_obs;
  float reward = -1.0f;  // sparse: 0 at the goal, -1 otherwise
  bool done = false;
  Provenance provenance = Provenance::kOffline;
};

struct RelabelConfig {
  double ground_truth_fraction = 0.0;  // 0.0 offline, 0.3 online
  bool geometric_future_bias = false;  // uniform future when false
  double geometric_p = 0.1;
};

// Transition at index t whose goal is the observation at goal_index
// (t < goal_index <= L). reward = 0 and done iff the next observation is the
// goal observation, i.e. goal_index == t + 1.
Transition make_transition(const Trajectory& traj, std::size_t t, std::size_t goal_index);

// Hindsight relabeling: uniform trajectory, uniform t in [0, L-1]; with
// probability (1 - ground_truth_fraction) the goal is a uniform future
// observation, otherwise the trajectory's commanded goal (falling back to
// the final achieved observation when no commanded goal exists).
Transition relabel_sample(const TrajectoryBuffer& buffer, const RelabelConfig& cfg,
                          core::Rng& rng);

struct Batch {
  std::vector<Transition> transitions;
  bool offline_only_warning = false;  // online buffer was empty

  std::size_t offline_count() const;
  std::size_t online_count() const;
};

// 60/40 offline/online mix with round-half-up on the offline share; counts
// are deterministic, never stochastic.
std::size_t offline_share(std::size_t batch_size, double offline_fraction = 0.6);

Batch mix_batch(const TrajectoryBuffer& offline, const TrajectoryBuffer& online,
                std::size_t size, const RelabelConfig& offline_cfg,
                const RelabelConfig& online_cfg, core::Rng& rng);

}  // namespace flap::data
