#pragma once

#include <cstdint>
#include <string>

#include "flap/data/trajectory.hpp"
#include "flap/env/env.hpp"

namespace flap::datagen {

struct DatasetConfig {
  std::size_t n_trajectories = 2000;  // desk scale; 12000 at full scale
  int n_scenes = 6;
  int target_scene_id = 0;
  bool holdout_drawer_in_target = true;
  std::uint64_t seed = 1;
  double noise_std = 0.01;
};

// Scenes and templates are assigned round-robin; with the holdout enabled,
// target-scene drawer templates are remapped to pick-and-place so the target
// scene contains no drawer interaction at all.
data::TrajectoryBuffer generate_offline_dataset(const DatasetConfig& cfg, bool parallel = true);

void generate_and_save(const DatasetConfig& cfg, const std::string& path, bool parallel = true);

// True when any step of the trajectory changes the drawer fraction by more
// than the given threshold (raw state recovered via the scene inverse).
bool has_drawer_interaction(const data::Trajectory& traj, const env::SceneTransform& scene,
                            double threshold = 0.01);

}  // namespace flap::datagen
