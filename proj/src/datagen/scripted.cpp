#include "flap/datagen/scripted.hpp"

#include <cmath>

namespace flap::datagen {

using env::ActionVector;
using env::Vec2;
using env::WorldState;

env::ActionVector primitive_action(const WorldState& state, const PrimitiveScript& script) {
  ActionVector a;
  const Vec2 g = state.gripper_pos;

  auto move_toward = [&](const Vec2& target) {
    const double dx = target.x - g.x;
    const double dy = target.y - g.y;
    if (std::sqrt(dx * dx + dy * dy) <= script.tolerance) return;
    a.dx = dx;
    a.dy = dy;
  };

  switch (script.kind) {
    case PrimitiveKind::kReach:
      move_toward(script.target);
      a.grip_cmd = state.held_object != env::kHeldNone ? 1.0 : -1.0;
      break;
    case PrimitiveKind::kGrasp:
      move_toward(script.target);
      a.grip_cmd = env::dist(g, script.target) <= env::kGraspRadius * 0.8 ? 1.0 : -1.0;
      break;
    case PrimitiveKind::kPlace:
      move_toward(script.target);
      // Keep holding until on target, then open.
      a.grip_cmd = env::dist(g, script.target) <= script.tolerance ? -1.0 : 1.0;
      break;
    case PrimitiveKind::kSlideDrawer: {
      const Vec2 handle = env::handle_pos(state.drawer_frac);
      move_toward(handle);
      a.grip_cmd = -1.0;
      if (env::dist(g, handle) <= env::kHandleRadius * 0.8) {
        const double d = script.target_frac - state.drawer_frac;
        if (std::fabs(d) > 0.05) a.drawer_axis_cmd = d > 0.0 ? 1.0 : -1.0;
      }
      break;
    }
  }
  return a.clamped();
}

std::string template_name(EpisodeTemplate t) {
  switch (t) {
    case EpisodeTemplate::kPickPlaceObject0:
      return "pick_place_object0";
    case EpisodeTemplate::kPickPlaceObject1:
      return "pick_place_object1";
    case EpisodeTemplate::kPickPlaceObstacle:
      return "pick_place_obstacle";
    case EpisodeTemplate::kDrawerOpen:
      return "drawer_open";
    case EpisodeTemplate::kDrawerClose:
      return "drawer_close";
  }
  return "unknown";
}

namespace {

struct Phase {
  PrimitiveKind kind;
  int entity = -1;       // grasp subject
  Vec2 fixed_target;     // place target / reach target
  double target_frac = 0.0;
};

std::vector<Phase> build_phases(EpisodeTemplate tmpl, const WorldState& init, core::Rng& rng) {
  std::vector<Phase> phases;
  auto pick_place = [&](int entity) {
    const Vec2 target{rng.uniform(0.08, 0.92), rng.uniform(0.08, 0.92)};
    phases.push_back({PrimitiveKind::kReach, entity, {}, 0.0});
    phases.push_back({PrimitiveKind::kGrasp, entity, {}, 0.0});
    phases.push_back({PrimitiveKind::kPlace, entity, target, 0.0});
  };
  switch (tmpl) {
    case EpisodeTemplate::kPickPlaceObject0:
      pick_place(0);
      break;
    case EpisodeTemplate::kPickPlaceObject1:
      pick_place(1);
      break;
    case EpisodeTemplate::kPickPlaceObstacle:
      pick_place(env::kObstacleIndex);
      break;
    case EpisodeTemplate::kDrawerOpen:
      phases.push_back({PrimitiveKind::kReach, -1, env::handle_pos(init.drawer_frac), 0.0});
      phases.push_back({PrimitiveKind::kSlideDrawer, -1, {}, 1.0});
      break;
    case EpisodeTemplate::kDrawerClose:
      phases.push_back({PrimitiveKind::kReach, -1, env::handle_pos(init.drawer_frac), 0.0});
      phases.push_back({PrimitiveKind::kSlideDrawer, -1, {}, 0.0});
      break;
  }
  return phases;
}

// Current script for a phase, with targets refreshed from privileged state.
PrimitiveScript phase_script(const Phase& ph, const WorldState& s) {
  PrimitiveScript sc;
  sc.kind = ph.kind;
  sc.target_frac = ph.target_frac;
  switch (ph.kind) {
    case PrimitiveKind::kReach:
      sc.target = ph.entity >= 0 ? s.entity(ph.entity) : ph.fixed_target;
      sc.tolerance = 0.06;
      break;
    case PrimitiveKind::kGrasp:
      sc.target = s.entity(ph.entity);
      sc.tolerance = 0.01;
      break;
    case PrimitiveKind::kPlace:
      sc.target = ph.fixed_target;
      sc.tolerance = 0.02;
      break;
    case PrimitiveKind::kSlideDrawer:
      sc.target = env::handle_pos(s.drawer_frac);
      sc.tolerance = 0.01;
      break;
  }
  return sc;
}

bool phase_done(const Phase& ph, const WorldState& s) {
  switch (ph.kind) {
    case PrimitiveKind::kReach: {
      const Vec2 target = ph.entity >= 0 ? s.entity(ph.entity) : ph.fixed_target;
      return env::dist(s.gripper_pos, target) <= 0.06;
    }
    case PrimitiveKind::kGrasp:
      return s.held_object == ph.entity;
    case PrimitiveKind::kPlace:
      return s.held_object == env::kHeldNone &&
             env::dist(s.entity(ph.entity), ph.fixed_target) <= 0.03;
    case PrimitiveKind::kSlideDrawer:
      return std::fabs(s.drawer_frac - ph.target_frac) < 0.05;
  }
  return false;
}

}  // namespace

data::Trajectory script_episode(env::Env& e, EpisodeTemplate tmpl, core::Rng& rng,
                                double noise_std) {
  data::Trajectory traj;
  traj.scene_id = e.task().scene.scene_id;

  auto record_obs = [&](const env::ObservationVector& obs) {
    std::vector<float> o(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) o[i] = static_cast<float>(obs[i]);
    traj.observations.push_back(std::move(o));
  };
  record_obs(e.observation());

  std::vector<Phase> phases = build_phases(tmpl, e.state(), rng);
  std::size_t phase_idx = 0;
  int steps_in_phase = 0;

  while (phase_idx < phases.size() && !e.episode_over()) {
    const Phase& ph = phases[phase_idx];
    ActionVector a = primitive_action(e.state(), phase_script(ph, e.state()));
    a.dx += rng.normal() * noise_std;
    a.dy += rng.normal() * noise_std;
    a.grip_cmd += rng.normal() * noise_std;
    a.drawer_axis_cmd += rng.normal() * noise_std;
    a = a.clamped();

    const env::ObservationVector obs = e.step(a);
    record_obs(obs);
    const auto arr = a.to_array();
    traj.actions.push_back({static_cast<float>(arr[0]), static_cast<float>(arr[1]),
                            static_cast<float>(arr[2]), static_cast<float>(arr[3])});

    ++steps_in_phase;
    if (phase_done(ph, e.state())) {
      ++phase_idx;
      steps_in_phase = 0;
    } else if (steps_in_phase >= kPrimitiveTimeout) {
      traj.incomplete = true;  // stuck: keep the failed data, cut the episode
      break;
    }
  }
  if (traj.actions.empty()) {
    // Degenerate immediate completion; pad with one settle step so the
    // trajectory invariant (L >= 1) holds.
    const env::ObservationVector obs = e.step(ActionVector{});
    record_obs(obs);
    traj.actions.push_back({0.0f, 0.0f, -1.0f, 0.0f});
  }
  return traj;
}

}  // namespace flap::datagen
