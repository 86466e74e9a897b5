#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace flap::data {

// One episode: L+1 observations and L actions, stored as 32-bit floats
// (the storage precision of the dataset file format).
struct Trajectory {
  std::vector<std::vector<float>> observations;
  std::vector<std::vector<float>> actions;
  std::int32_t scene_id = 0;
  bool incomplete = false;
  // Commanded task goal for online episodes; offline data has none and
  // ground-truth relabeling degrades to the final achieved observation.
  std::optional<std::vector<float>> commanded_goal;

  std::size_t length() const { return actions.size(); }
};

inline void validate_trajectory(const Trajectory& t) {
  if (t.actions.empty()) throw std::invalid_argument("Trajectory: needs at least one action");
  if (t.observations.size() != t.actions.size() + 1) {
    throw std::invalid_argument("Trajectory: observations must be actions + 1");
  }
}

using TrajectoryBuffer = std::vector<Trajectory>;

}  // namespace flap::data
