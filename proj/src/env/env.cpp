#include "flap/env/env.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace flap::env {

namespace {

bool in_workspace(const Vec2& p) { return p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0; }

Vec2 clamp_workspace(Vec2 p) {
  p.x = p.x < 0.0 ? 0.0 : (p.x > 1.0 ? 1.0 : p.x);
  p.y = p.y < 0.0 ? 0.0 : (p.y > 1.0 ? 1.0 : p.y);
  return p;
}

Vec2 sample_point(core::Rng& rng, double lo, double hi) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

// Rejection-samples a point at least min_sep away from the ones already
// placed; optionally outside the drawer sweep region.
Vec2 sample_entity(core::Rng& rng, const std::vector<Vec2>& placed, double min_sep,
                   bool avoid_sweep) {
  for (int tries = 0; tries < 1000; ++tries) {
    Vec2 p = sample_point(rng, 0.08, 0.92);
    if (avoid_sweep && in_sweep_region(p)) continue;
    bool ok = true;
    for (const Vec2& q : placed) {
      if (dist(p, q) < min_sep) {
        ok = false;
        break;
      }
    }
    if (ok) return p;
  }
  throw std::runtime_error("env: entity placement failed");
}

}  // namespace

void validate_state(const WorldState& s) {
  auto check_pos = [](const Vec2& p, const char* what) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !in_workspace(p)) {
      throw std::logic_error(std::string("WorldState invariant: ") + what + " outside workspace");
    }
  };
  check_pos(s.gripper_pos, "gripper_pos");
  for (int i = 0; i < kNumEntities; ++i) check_pos(s.entity(i), "entity");
  if (!(s.drawer_frac >= 0.0 && s.drawer_frac <= 1.0)) {
    throw std::logic_error("WorldState invariant: drawer_frac outside [0,1]");
  }
  if (s.held_object != kHeldNone) {
    if (s.held_object < 0 || s.held_object >= kNumEntities) {
      throw std::logic_error("WorldState invariant: held_object index out of range");
    }
    const Vec2 p = s.entity(s.held_object);
    if (p.x != s.gripper_pos.x || p.y != s.gripper_pos.y) {
      throw std::logic_error("WorldState invariant: held entity not at gripper");
    }
    if (!s.gripper_closed) {
      throw std::logic_error("WorldState invariant: held entity with open gripper");
    }
  }
}

bool drawer_move_allowed(const WorldState& s, double drawer_axis_cmd) {
  if (std::fabs(drawer_axis_cmd) <= kDrawerCmdThreshold) return false;
  if (s.held_object != kHeldNone) return false;
  if (dist(s.gripper_pos, handle_pos(s.drawer_frac)) > kHandleRadius) return false;
  for (int i = 0; i < kNumEntities; ++i) {
    if (in_sweep_region(s.entity(i))) return false;
  }
  return true;
}

std::vector<double> flatten_state(const WorldState& s) {
  std::vector<double> v(kRawStateDim);
  v[0] = s.gripper_pos.x;
  v[1] = s.gripper_pos.y;
  v[2] = s.gripper_closed ? 1.0 : 0.0;
  v[3] = static_cast<double>(s.held_object + 1) / 3.0;
  v[4] = s.drawer_frac;
  v[5] = handle_pos(s.drawer_frac).y;
  v[6] = s.object_pos[0].x;
  v[7] = s.object_pos[0].y;
  v[8] = s.object_pos[1].x;
  v[9] = s.object_pos[1].y;
  v[10] = s.obstacle_pos.x;
  v[11] = s.obstacle_pos.y;
  return v;
}

ActionVector ActionVector::clamped() const {
  ActionVector a = *this;
  const double norm = std::sqrt(a.dx * a.dx + a.dy * a.dy);
  if (norm > kMaxStep) {
    a.dx *= kMaxStep / norm;
    a.dy *= kMaxStep / norm;
  }
  a.grip_cmd = a.grip_cmd < -1.0 ? -1.0 : (a.grip_cmd > 1.0 ? 1.0 : a.grip_cmd);
  a.drawer_axis_cmd =
      a.drawer_axis_cmd < -1.0 ? -1.0 : (a.drawer_axis_cmd > 1.0 ? 1.0 : a.drawer_axis_cmd);
  return a;
}

SceneTransform SceneTransform::identity() {
  SceneTransform s;
  s.scene_id = -1;
  s.mix = core::MatD::identity(kObsDim);
  s.inv_mix = core::MatD::identity(kObsDim);
  s.nuisance_offsets = {0.0, 0.0, 0.0, 0.0};
  return s;
}

SceneTransform SceneTransform::make(int scene_id, std::uint64_t dataset_seed) {
  SceneTransform s;
  s.scene_id = scene_id;
  core::Rng rng = core::Rng(dataset_seed).child("scene", static_cast<std::uint64_t>(scene_id));
  // Row-scaled orthogonal: condition number bounded by 2.0 / 0.5 = 4.
  s.mix = core::random_scaled_orthogonal(kObsDim, rng, 0.5, 2.0);
  s.inv_mix = core::invert(s.mix);
  for (auto& o : s.nuisance_offsets) o = rng.uniform(-1.0, 1.0);
  return s;
}

ObservationVector observe(const WorldState& s, const SceneTransform& scene) {
  std::vector<double> raw = flatten_state(s);
  raw.reserve(kObsDim);
  for (double o : scene.nuisance_offsets) raw.push_back(o);
  if (static_cast<int>(raw.size()) != scene.mix.cols) {
    throw std::logic_error("observe: dimension mismatch");
  }
  return core::matvec(scene.mix, raw);
}

std::vector<double> recover_raw_state(const ObservationVector& obs, const SceneTransform& scene) {
  std::vector<double> full = core::matvec(scene.inv_mix, obs);
  full.resize(kRawStateDim);
  return full;
}

bool is_success(const WorldState& s, const WorldState& goal, double tol) {
  for (int i = 0; i < kNumEntities; ++i) {
    if (dist(s.entity(i), goal.entity(i)) > tol) return false;
  }
  return std::fabs(s.drawer_frac - goal.drawer_frac) * kDrawerTravel <= tol;
}

TaskSpec make_task(TaskId id, SceneTransform scene, std::uint64_t init_sampler_seed,
                   double success_tol, int max_steps) {
  TaskSpec t;
  t.task_id = id;
  t.init_sampler_seed = init_sampler_seed;
  t.success_tol = success_tol;
  t.max_steps = max_steps;
  t.scene = std::move(scene);

  // Canonical goal template. Per-episode goals are derived in Env::reset by
  // applying the same edits to the sampled initial arrangement.
  WorldState g;
  g.object_pos = {Vec2{0.25, 0.25}, Vec2{0.25, 0.75}};
  g.obstacle_pos = {0.45, 0.30};
  switch (id) {
    case TaskId::kA:
      g.gripper_pos = {0.25, 0.25};
      g.drawer_frac = 0.0;
      break;
    case TaskId::kB:
      g.gripper_pos = {0.25, 0.75};
      g.drawer_frac = 0.0;
      break;
    case TaskId::kC:
      g.drawer_frac = 1.0;
      g.gripper_pos = handle_pos(1.0);
      break;
  }
  t.goal_state = g;
  validate_state(t.goal_state);
  return t;
}

ObservationVector Env::reset(const TaskSpec& task, std::uint64_t seed) {
  task_ = task;
  has_task_ = true;
  step_count_ = 0;

  core::Rng rng = core::Rng(task.init_sampler_seed).child("reset", seed);

  WorldState s;
  s.gripper_pos = sample_point(rng, 0.10, 0.90);
  s.gripper_closed = false;
  s.held_object = kHeldNone;

  std::vector<Vec2> placed;
  switch (task.task_id) {
    case TaskId::kA:
      // Generic arrangement used for data collection: entities anywhere,
      // drawer at a random detent.
      s.drawer_frac = 0.1 * static_cast<double>(rng.uniform_index(11));
      for (int i = 0; i < kNumEntities; ++i) {
        Vec2 p = sample_entity(rng, placed, 0.12, /*avoid_sweep=*/false);
        placed.push_back(p);
        s.set_entity(i, p);
      }
      break;
    case TaskId::kB:
      s.drawer_frac = 0.1 * static_cast<double>(rng.uniform_index(11));
      for (int i = 0; i < kNumEntities; ++i) {
        Vec2 p = sample_entity(rng, placed, 0.12, /*avoid_sweep=*/true);
        placed.push_back(p);
        s.set_entity(i, p);
      }
      break;
    case TaskId::kC: {
      s.drawer_frac = 0.0;
      for (int i = 0; i < 2; ++i) {
        Vec2 p = sample_entity(rng, placed, 0.12, /*avoid_sweep=*/true);
        placed.push_back(p);
        s.set_entity(i, p);
      }
      // Obstacle parked in the middle of the drawer sweep.
      s.obstacle_pos = {rng.uniform(0.76, 0.84), rng.uniform(0.58, 0.72)};
      break;
    }
  }
  validate_state(s);
  state_ = s;

  episode_goal_ = s;
  episode_goal_.gripper_pos = task.goal_state.gripper_pos;
  episode_goal_.gripper_closed = false;
  episode_goal_.held_object = kHeldNone;
  switch (task.task_id) {
    case TaskId::kA:
      episode_goal_.object_pos[0] = task.goal_state.object_pos[0];
      break;
    case TaskId::kB:
      episode_goal_.object_pos[0] = task.goal_state.object_pos[0];
      episode_goal_.object_pos[1] = task.goal_state.object_pos[1];
      break;
    case TaskId::kC:
      episode_goal_.obstacle_pos = task.goal_state.obstacle_pos;
      episode_goal_.drawer_frac = task.goal_state.drawer_frac;
      break;
  }
  validate_state(episode_goal_);

  return observation();
}

ObservationVector Env::step(const ActionVector& action) {
  if (!has_task_) throw std::runtime_error("Env::step before reset");
  if (step_count_ >= task_.max_steps) {
    throw std::runtime_error("Env::step: episode over (max_steps reached)");
  }
  if (!std::isfinite(action.dx) || !std::isfinite(action.dy) || !std::isfinite(action.grip_cmd) ||
      !std::isfinite(action.drawer_axis_cmd)) {
    throw std::invalid_argument("Env::step: non-finite action");
  }

  const ActionVector a = action.clamped();
  WorldState& s = state_;

  s.gripper_pos = clamp_workspace({s.gripper_pos.x + a.dx, s.gripper_pos.y + a.dy});

  if (a.grip_cmd > 0.0) {
    s.gripper_closed = true;
    if (s.held_object == kHeldNone) {
      int best = kHeldNone;
      double best_d = kGraspRadius;
      for (int i = 0; i < kNumEntities; ++i) {
        const double d = dist(s.gripper_pos, s.entity(i));
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      s.held_object = best;
    }
  } else {
    s.gripper_closed = false;
    s.held_object = kHeldNone;
  }

  if (s.held_object != kHeldNone) s.set_entity(s.held_object, s.gripper_pos);

  if (drawer_move_allowed(s, a.drawer_axis_cmd)) {
    const double dir = a.drawer_axis_cmd > 0.0 ? 1.0 : -1.0;
    double f = s.drawer_frac + dir * kDrawerStep;
    s.drawer_frac = f < 0.0 ? 0.0 : (f > 1.0 ? 1.0 : f);
  }

  ++step_count_;
  validate_state(s);
  return observation();
}

}  // namespace flap::env
