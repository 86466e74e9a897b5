#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flap/core/rng.hpp"
#include "flap/data/trajectory.hpp"
#include "flap/env/env.hpp"

namespace flap::datagen {

enum class PrimitiveKind { kReach, kGrasp, kPlace, kSlideDrawer };

// One step of a scripted behavior. For kSlideDrawer the target is a drawer
// fraction; otherwise a 2D position. The sequencer refreshes targets from
// privileged state (entity poses, handle pose) every step.
struct PrimitiveScript {
  PrimitiveKind kind = PrimitiveKind::kReach;
  env::Vec2 target;
  double target_frac = 0.0;
  double tolerance = 0.02;
};

// Proportional controller toward the script target, clamped to action
// bounds; zero translation once within tolerance.
env::ActionVector primitive_action(const env::WorldState& state, const PrimitiveScript& script);

// Episode templates collected by the scripted policy. Pick-and-place doubles
// as the slide analog in this 2D world.
enum class EpisodeTemplate : int {
  kPickPlaceObject0 = 0,
  kPickPlaceObject1 = 1,
  kPickPlaceObstacle = 2,
  kDrawerOpen = 3,
  kDrawerClose = 4,
};

inline constexpr int kNumTemplates = 5;

inline bool template_uses_drawer(EpisodeTemplate t) {
  return t == EpisodeTemplate::kDrawerOpen || t == EpisodeTemplate::kDrawerClose;
}

std::string template_name(EpisodeTemplate t);

// Steps where a primitive makes no progress before the episode is flagged
// incomplete and cut short.
inline constexpr int kPrimitiveTimeout = 50;

// Runs the scripted policy on a freshly reset env. Actions carry Gaussian
// exploration noise; the stored actions are the clamped executed ones.
data::Trajectory script_episode(env::Env& e, EpisodeTemplate tmpl, core::Rng& rng,
                                double noise_std = 0.01);

}  // namespace flap::datagen
