#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "flap/core/linalg.hpp"
#include "flap/core/rng.hpp"

namespace flap::env {

// Workspace is [0,1]^2. The drawer is fixed against the top edge and slides
// along -y: handle sits at (kDrawerX, kHandleYClosed - kDrawerTravel * frac).
// Entities 0 and 1 are the movable objects, entity 2 is the obstacle; all
// three are graspable.
inline constexpr double kMaxStep = 0.05;
inline constexpr double kGraspRadius = 0.05;
inline constexpr double kHandleRadius = 0.05;
inline constexpr double kDrawerStep = 0.1;
inline constexpr double kDrawerCmdThreshold = 0.5;
inline constexpr double kDrawerX = 0.8;
inline constexpr double kHandleYClosed = 0.75;
inline constexpr double kDrawerTravel = 0.2;
// Region swept by the drawer body; any entity inside blocks drawer motion.
inline constexpr double kSweepX0 = 0.70, kSweepX1 = 0.90;
inline constexpr double kSweepY0 = 0.52, kSweepY1 = 0.78;

inline constexpr int kNumEntities = 3;
inline constexpr int kObstacleIndex = 2;
inline constexpr int kHeldNone = -1;

inline constexpr int kRawStateDim = 12;
inline constexpr int kNumNuisance = 4;
inline constexpr int kObsDim = kRawStateDim + kNumNuisance;
inline constexpr int kActionDim = 4;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double dist(const Vec2& a, const Vec2& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

struct WorldState {
  Vec2 gripper_pos;
  bool gripper_closed = false;
  int held_object = kHeldNone;  // kHeldNone or entity index
  double drawer_frac = 0.0;
  std::array<Vec2, 2> object_pos;
  Vec2 obstacle_pos;

  Vec2 entity(int i) const { return i < 2 ? object_pos[static_cast<std::size_t>(i)] : obstacle_pos; }
  void set_entity(int i, Vec2 p) {
    if (i < 2) {
      object_pos[static_cast<std::size_t>(i)] = p;
    } else {
      obstacle_pos = p;
    }
  }
};

inline Vec2 handle_pos(double drawer_frac) {
  return {kDrawerX, kHandleYClosed - kDrawerTravel * drawer_frac};
}

inline bool in_sweep_region(const Vec2& p) {
  return p.x >= kSweepX0 && p.x <= kSweepX1 && p.y >= kSweepY0 && p.y <= kSweepY1;
}

// Throws std::logic_error when a WorldState invariant is broken.
void validate_state(const WorldState& s);

// Drawer rule table: motion requires a strong axis command, an empty gripper
// at the handle, and no entity inside the sweep region.
bool drawer_move_allowed(const WorldState& s, double drawer_axis_cmd);

// Raw state vector layout (kRawStateDim entries):
//   [gx, gy, closed, held_code, drawer_frac, handle_y, o0x, o0y, o1x, o1y, obx, oby]
// held_code = (held_object + 1) / 3 so NONE,0,1,2 map to 0, 1/3, 2/3, 1.
std::vector<double> flatten_state(const WorldState& s);

struct ActionVector {
  double dx = 0.0;
  double dy = 0.0;
  double grip_cmd = 0.0;        // > 0 close, <= 0 open
  double drawer_axis_cmd = 0.0; // |cmd| > kDrawerCmdThreshold moves the drawer

  std::array<double, 4> to_array() const { return {dx, dy, grip_cmd, drawer_axis_cmd}; }
  static ActionVector from_span(std::span<const double> a) {
    return {a[0], a[1], a[2], a[3]};
  }
  // Norm-clamps the translation and boxes the scalar commands.
  ActionVector clamped() const;
};

// Per-scene observation nuisance: a well-conditioned linear mix of the raw
// state vector with constant offsets appended, standing in for camera pose
// and appearance variation. Invertible, so tests can recover the raw state.
struct SceneTransform {
  int scene_id = 0;
  core::MatD mix;       // kObsDim x kObsDim
  core::MatD inv_mix;
  std::array<double, kNumNuisance> nuisance_offsets{};

  static SceneTransform identity();
  static SceneTransform make(int scene_id, std::uint64_t dataset_seed);
};

using ObservationVector = std::vector<double>;

ObservationVector observe(const WorldState& s, const SceneTransform& scene);

// Inverse of observe up to the nuisance tail: returns the raw state vector.
std::vector<double> recover_raw_state(const ObservationVector& obs, const SceneTransform& scene);

enum class TaskId { kA, kB, kC };

struct TaskSpec {
  TaskId task_id = TaskId::kA;
  std::uint64_t init_sampler_seed = 0;
  WorldState goal_state;  // canonical goal template; per-episode goals come
                          // from Env::episode_goal()
  double success_tol = 0.05;
  int max_steps = 100;
  SceneTransform scene;
};

TaskSpec make_task(TaskId id, SceneTransform scene, std::uint64_t init_sampler_seed,
                   double success_tol = 0.05, int max_steps = 100);

// Success compares entity positions and the drawer fraction (scaled to
// workspace units by its travel); the gripper is ignored.
bool is_success(const WorldState& s, const WorldState& goal, double tol);

class Env {
 public:
  ObservationVector reset(const TaskSpec& task, std::uint64_t seed);
  ObservationVector step(const ActionVector& action);

  const WorldState& state() const { return state_; }
  const TaskSpec& task() const { return task_; }
  // Episode goal: the task's edits applied on top of this episode's initial
  // arrangement, so untouched entities court no spurious mismatch.
  const WorldState& episode_goal() const { return episode_goal_; }
  ObservationVector goal_observation() const { return observe(episode_goal_, task_.scene); }
  ObservationVector observation() const { return observe(state_, task_.scene); }

  int step_count() const { return step_count_; }
  bool episode_over() const { return step_count_ >= task_.max_steps; }
  bool succeeded() const { return is_success(state_, episode_goal_, task_.success_tol); }

 private:
  bool has_task_ = false;
  TaskSpec task_;
  WorldState state_;
  WorldState episode_goal_;
  int step_count_ = 0;
};

}  // namespace flap::env
