#include "flap/datagen/generator.hpp"

#include <cmath>
#include <stdexcept>

#include "flap/core/parallel.hpp"
#include "flap/data/dataset_file.hpp"
#include "flap/datagen/scripted.hpp"

namespace flap::datagen {

data::TrajectoryBuffer generate_offline_dataset(const DatasetConfig& cfg, bool parallel) {
  if (cfg.n_trajectories == 0) throw std::invalid_argument("datagen: n_trajectories must be > 0");
  if (cfg.target_scene_id < 0 || cfg.target_scene_id >= cfg.n_scenes) {
    throw std::invalid_argument("datagen: target_scene_id out of range");
  }

  std::vector<env::SceneTransform> scenes;
  scenes.reserve(static_cast<std::size_t>(cfg.n_scenes));
  for (int s = 0; s < cfg.n_scenes; ++s) scenes.push_back(env::SceneTransform::make(s, cfg.seed));

  const core::Rng root(cfg.seed);
  data::TrajectoryBuffer out(cfg.n_trajectories);

  core::for_each_index(cfg.n_trajectories, parallel, [&](std::size_t idx) {
    const int scene_id = static_cast<int>(idx % static_cast<std::size_t>(cfg.n_scenes));
    int tmpl_idx = static_cast<int>((idx / static_cast<std::size_t>(cfg.n_scenes)) %
                                    static_cast<std::size_t>(kNumTemplates));
    auto tmpl = static_cast<EpisodeTemplate>(tmpl_idx);
    if (cfg.holdout_drawer_in_target && scene_id == cfg.target_scene_id &&
        template_uses_drawer(tmpl)) {
      tmpl = static_cast<EpisodeTemplate>(tmpl_idx % 3);  // remap to pick-and-place
    }

    core::Rng rng = root.child("traj", static_cast<std::uint64_t>(idx));
    env::Env e;
    const env::TaskSpec task =
        env::make_task(env::TaskId::kA, scenes[static_cast<std::size_t>(scene_id)],
                       root.child("init", static_cast<std::uint64_t>(idx)).seed());
    e.reset(task, static_cast<std::uint64_t>(idx));
    out[idx] = script_episode(e, tmpl, rng, cfg.noise_std);
  });
  return out;
}

void generate_and_save(const DatasetConfig& cfg, const std::string& path, bool parallel) {
  const data::TrajectoryBuffer trajs = generate_offline_dataset(cfg, parallel);
  data::save_dataset(trajs, path, env::kObsDim, env::kActionDim);
}

bool has_drawer_interaction(const data::Trajectory& traj, const env::SceneTransform& scene,
                            double threshold) {
  double prev = 0.0;
  bool first = true;
  for (const auto& obs : traj.observations) {
    std::vector<double> od(obs.begin(), obs.end());
    const std::vector<double> raw = env::recover_raw_state(od, scene);
    const double frac = raw[4];
    if (!first && std::fabs(frac - prev) > threshold) return true;
    prev = frac;
    first = false;
  }
  return false;
}

}  // namespace flap::datagen
