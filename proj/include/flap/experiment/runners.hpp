#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "flap/aff/model.hpp"
#include "flap/data/trajectory.hpp"
#include "flap/experiment/baselines.hpp"
#include "flap/experiment/checkpoint.hpp"
#include "flap/experiment/config.hpp"
#include "flap/experiment/metrics.hpp"
#include "flap/gcrl/agent.hpp"
#include "flap/tune/finetune.hpp"

namespace flap::experiment {

// All trainable components of one run. Copyable, so one pre-trained set can
// seed several fine-tuning baselines.
struct Models {
  gcrl::GcrlAgent agent;
  aff::AffordanceModel affordance;
  RawCvae raw_cvae;

  explicit Models(const RunConfig& cfg);
};

struct Calibration {
  double v_min = -40.0;
  double v_max = -5.0;
  double eps_cos = 0.97;     // reference value; config may override
  double reach_dist = 0.03;  // 5th percentile of same-state latent distance
};

// Conventional artifact locations under run.out_dir.
struct RunPaths {
  std::string dataset;
  std::string checkpoint;
  std::string pretrain_losses;
  std::string config_copy;
  std::string plan_dump;
  std::string plots_dir;
  std::string latents;

  std::string metrics(const std::string& method, std::uint64_t seed) const;
  std::string finetuned_checkpoint(const std::string& method) const;

  std::string out_dir;
};

RunPaths run_paths(const RunConfig& cfg);

env::SceneTransform target_scene(const RunConfig& cfg);
env::TaskSpec task_from_config(const RunConfig& cfg);
plan::PlannerConfig planner_config(const RunConfig& cfg, const Calibration& calib);
tune::FinetuneConfig finetune_config(const RunConfig& cfg, const Calibration& calib);

// Offline pre-training: joint encoder+IQL, then the affordance CVAE against
// the frozen encoder snapshot, then the raw-space CVAE for the baseline.
// Calibrates value bounds and latent thresholds from the offline buffer.
// Loss curves (one row per experiment.metrics_every steps) are written to
// loss_csv_path unless it is empty.
Calibration run_pretrain(const RunConfig& cfg, const data::TrajectoryBuffer& offline,
                         Models& models, const std::string& loss_csv_path);

Checkpoint make_checkpoint(const RunConfig& cfg, const Models& models, const Calibration& calib);
// Returns false (and warns on stderr) when the stored config hash differs.
bool restore_models(const Checkpoint& ckpt, const RunConfig& cfg, Models& models,
                    Calibration* calib);

// Subgoal planner for the given baseline; empty for model-free. The returned
// function is stateful (it owns its noise stream) and maps raw (obs, goal)
// pairs to latent subgoal plans.
tune::PlanFn make_planner_fn(BaselineKind kind, const Models& models, const Calibration& calib,
                             const RunConfig& cfg, core::Rng planner_rng);

struct FinetuneRunResult {
  std::vector<MetricsRow> rows;
  double final_success_rate = 0.0;  // deterministic eval after the last epoch
};

FinetuneRunResult run_finetune(const RunConfig& cfg, Models& models, const Calibration& calib,
                               BaselineKind kind, const data::TrajectoryBuffer& offline);

// Deterministic-policy evaluation; NaN (with a warning on stderr) when
// n_episodes is zero.
double run_eval(const RunConfig& cfg, const Models& models, const Calibration& calib,
                BaselineKind kind, int n_episodes);

}  // namespace flap::experiment
