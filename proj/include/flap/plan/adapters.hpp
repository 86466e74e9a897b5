#pragma once

#include "flap/aff/model.hpp"
#include "flap/gcrl/agent.hpp"
#include "flap/plan/mppi.hpp"

namespace flap::plan {

// Affordance decoder mean as plan dynamics.
class AffordanceDynamics final : public TransitionModel {
 public:
  explicit AffordanceDynamics(const aff::AffordanceModel& model) : model_(&model) {}
  int z_dim() const override { return model_->config().z_dim; }
  int u_dim() const override { return model_->config().u_dim; }
  void next(std::span<const float> z, std::span<const float> u,
            std::span<float> z_next) const override {
    const std::vector<float> out = model_->decode_mean(z, u);
    for (std::size_t i = 0; i < out.size(); ++i) z_next[i] = out[i];
  }

 private:
  const aff::AffordanceModel* model_;
};

// V(z, z') from the agent's value network.
class LatentPairValue final : public TransitionValue {
 public:
  explicit LatentPairValue(const gcrl::GcrlAgent& agent) : agent_(&agent) {}
  double value(std::span<const float> z_from, std::span<const float> z_to) const override {
    return agent_->value(z_from, z_to);
  }

 private:
  const gcrl::GcrlAgent* agent_;
};

}  // namespace flap::plan
