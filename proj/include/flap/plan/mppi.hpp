#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include "flap/core/rng.hpp"
#include "flap/data/trajectory.hpp"
#include "flap/enc/encoder.hpp"

namespace flap::plan {

// Latent-space dynamics used for plan rollouts; the affordance decoder mean
// in production, a stub in tests and the raw-space CVAE in the baseline.
class TransitionModel {
 public:
  virtual ~TransitionModel() = default;
  virtual int z_dim() const = 0;
  virtual int u_dim() const = 0;
  virtual void next(std::span<const float> z, std::span<const float> u,
                    std::span<float> z_next) const = 0;
};

// Estimated value of moving between adjacent subgoals.
class TransitionValue {
 public:
  virtual ~TransitionValue() = default;
  virtual double value(std::span<const float> z_from, std::span<const float> z_to) const = 0;
};

struct PlannerConfig {
  int n_subgoals = 4;  // K
  int n_samples = 1024;
  int n_iters = 5;
  std::vector<double> noise_schedule = {1.0, 0.5, 0.2, 0.1, 0.1};
  double eta1 = 1.0;
  double eta2 = 1.0;
  double eta3 = 0.1;
  double lambda = 1.0;  // MPPI temperature
  double v_min = -40.0;
  double v_max = -5.0;

  void validate() const;
};

struct CostTerms {
  double terminal_distance = 0.0;
  double hinge_low = 0.0;
  double hinge_high = 0.0;
  double prior_penalty = 0.0;
};

struct SubgoalPlan {
  std::vector<std::vector<float>> u_seq;  // K codes (best sequence ever scored)
  std::vector<std::vector<float>> z_seq;  // K latents; back() replaced by z_g
  double cost = 0.0;                      // scored before the replacement
  CostTerms cost_terms;
  // Optimizer state for inspection: the final importance-weighted mean
  // sequence (flat K x u_dim) and the best-ever cost after each iteration.
  std::vector<double> mean_seq;
  std::vector<double> best_cost_per_iter;
};

// z_k = model(z_{k-1}, u_k) for k = 1..K, deterministic decoder means.
std::vector<std::vector<float>> rollout(const TransitionModel& model, std::span<const float> z0,
                                        const std::vector<std::vector<float>>& u_seq);

// c = ||z_g - z_K|| + sum_k( eta1 (v_min - V_k)^+ + eta2 (V_k - v_max)^+
//                            - eta3 log p(u_k) ),  p = N(0, I).
double plan_cost(const TransitionModel& model, const TransitionValue& value,
                 const PlannerConfig& cfg, std::span<const float> z0, std::span<const float> z_g,
                 const std::vector<std::vector<float>>& u_seq, CostTerms* terms = nullptr);

SubgoalPlan mppi_plan(const TransitionModel& model, const TransitionValue& value,
                      const PlannerConfig& cfg, std::span<const float> z0,
                      std::span<const float> z_g, core::Rng& rng, bool parallel = true);

// V percentiles over >= min_pairs offline delta_t pairs; defaults 10th/90th.
std::pair<double, double> calibrate_value_bounds(const data::TrajectoryBuffer& buffer,
                                                 const TransitionValue& value,
                                                 const enc::StateEncoder& encoder, int delta_t,
                                                 core::Rng& rng, std::size_t n_pairs = 20000,
                                                 double lo_pct = 10.0, double hi_pct = 90.0,
                                                 std::size_t min_pairs = 100);

// Counts every mppi_plan call; the model-free baseline asserts it stays 0.
std::uint64_t plan_invocations();
void reset_plan_invocations();

}  // namespace flap::plan
