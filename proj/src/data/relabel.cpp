#include "flap/data/relabel.hpp"

#include <cmath>
#include <stdexcept>

namespace flap::data {

Transition make_transition(const Trajectory& traj, std::size_t t, std::size_t goal_index) {
  const std::size_t L = traj.length();
  if (t >= L) throw std::invalid_argument("make_transition: t out of range");
  if (goal_index <= t || goal_index > L) {
    throw std::invalid_argument("make_transition: goal index must be in (t, L]");
  }
  Transition tr;
  tr.obs = traj.observations[t];
  tr.next_obs = traj.observations[t + 1];
  tr.action = traj.actions[t];
  tr.goal_obs = traj.observations[goal_index];
  tr.done = (goal_index == t + 1);
  tr.reward = tr.done ? 0.0f : -1.0f;
  return tr;
}

namespace {

const Trajectory& pick_trajectory(const TrajectoryBuffer& buffer, core::Rng& rng) {
  if (buffer.empty()) throw std::invalid_argument("relabel_sample: empty buffer");
  for (int tries = 0; tries < 10000; ++tries) {
    const Trajectory& t = buffer[rng.uniform_index(buffer.size())];
    if (t.observations.size() >= 2 && t.length() >= 1) return t;  // length < 2 skipped
  }
  throw std::runtime_error("relabel_sample: no usable trajectory");
}

}  // namespace

Transition relabel_sample(const TrajectoryBuffer& buffer, const RelabelConfig& cfg,
                          core::Rng& rng) {
  const Trajectory& traj = pick_trajectory(buffer, rng);
  const std::size_t L = traj.length();
  const std::size_t t = rng.uniform_index(L);

  const bool ground_truth = rng.uniform() < cfg.ground_truth_fraction;
  if (ground_truth) {
    if (traj.commanded_goal.has_value()) {
      Transition tr;
      tr.obs = traj.observations[t];
      tr.next_obs = traj.observations[t + 1];
      tr.action = traj.actions[t];
      tr.goal_obs = *traj.commanded_goal;
      tr.done = false;  // a commanded goal is not an indexed observation
      tr.reward = -1.0f;
      return tr;
    }
    // Offline trajectories carry no commanded goal; the achieved final
    // observation stands in for it.
    return make_transition(traj, t, L);
  }

  std::size_t k;
  if (cfg.geometric_future_bias) {
    std::size_t d = 1;
    while (t + d < L && rng.uniform() >= cfg.geometric_p) ++d;
    k = t + d;
  } else {
    k = t + 1 + rng.uniform_index(L - t);  // uniform in [t+1, L]
  }
  return make_transition(traj, t, k);
}

std::size_t offline_share(std::size_t batch_size, double offline_fraction) {
  // round-half-up, fixed so counts are deterministic
  return static_cast<std::size_t>(std::floor(offline_fraction * static_cast<double>(batch_size) + 0.5));
}

std::size_t Batch::offline_count() const {
  std::size_t n = 0;
  for (const auto& t : transitions) n += t.provenance == Provenance::kOffline ? 1 : 0;
  return n;
}

std::size_t Batch::online_count() const { return transitions.size() - offline_count(); }

Batch mix_batch(const TrajectoryBuffer& offline, const TrajectoryBuffer& online,
                std::size_t size, const RelabelConfig& offline_cfg,
                const RelabelConfig& online_cfg, core::Rng& rng) {
  if (size == 0) throw std::invalid_argument("mix_batch: size must be positive");
  if (offline.empty()) throw std::invalid_argument("mix_batch: offline buffer empty");

  Batch batch;
  batch.transitions.reserve(size);

  std::size_t n_offline = offline_share(size);
  if (online.empty()) {
    n_offline = size;
    batch.offline_only_warning = true;
  }
  for (std::size_t i = 0; i < n_offline; ++i) {
    Transition t = relabel_sample(offline, offline_cfg, rng);
    t.provenance = Provenance::kOffline;
    batch.transitions.push_back(std::move(t));
  }
  for (std::size_t i = n_offline; i < size; ++i) {
    Transition t = relabel_sample(online, online_cfg, rng);
    t.provenance = Provenance::kOnline;
    batch.transitions.push_back(std::move(t));
  }
  return batch;
}

}  // namespace flap::data
