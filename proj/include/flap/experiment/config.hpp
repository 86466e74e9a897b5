#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace flap::experiment {

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every tunable in one place, defaults at desk scale. Serialized as
// "[section]\nkey = value" text; unknown keys and out-of-range values are
// rejected at load.
struct RunConfig {
  struct Run {
    std::uint64_t seed = 1;
    std::string out_dir = "runs/out";
    int threads = 0;       // 0: library default
    bool parallel = true;  // serial reference path when false
    std::string method = "flap";  // flap | model_free | raw_planner
  } run;

  struct Env {
    std::string task = "C";
    double success_tol = 0.05;
    int max_steps = 100;
  } env;

  struct Datagen {
    int n_trajectories = 2000;
    int n_scenes = 6;
    int target_scene_id = 0;
    bool holdout_drawer_in_target = true;
    std::uint64_t seed = 1;
    double noise_std = 0.01;
  } datagen;

  struct Dataset {
    int batch_size = 128;
    double offline_fraction = 0.6;
    double gt_fraction_offline = 0.0;
    double gt_fraction_online = 0.3;
    bool geometric_future_bias = false;
  } dataset;

  struct Encoder {
    int z_dim = 16;
    int hidden = 128;
    double log_std_lo = -5.0;
    double log_std_hi = 2.0;
  } encoder;

  struct Gcrl {
    double gamma = 0.99;
    double tau_expectile = 0.7;
    double awr_temperature = 3.0;
    double awr_weight_clip = 100.0;
    double polyak_rate = 0.005;
    double alpha_vib = 0.01;
    double learning_rate = 3e-4;
    double policy_log_std_init = -1.0;
    int pretrain_steps = 3000;
  } gcrl;

  struct Affordance {
    int u_dim = 8;
    int delta_t = 25;
    double beta = 0.1;
    int hidden = 128;
    int steps = 2000;
    double learning_rate = 3e-4;
  } affordance;

  struct Planner {
    int n_subgoals = 4;
    int n_samples = 1024;
    int n_iters = 5;
    std::string noise_schedule = "1.0,0.5,0.2,0.1,0.1";
    double eta1 = 1.0;
    double eta2 = 1.0;
    double eta3 = 0.1;
    double lambda = 1.0;
    double vmin_percentile = 10.0;
    double vmax_percentile = 90.0;
  } planner;

  struct Finetune {
    int h = 0;                // 0: use affordance delta_t
    double eps_cos = 0.97;    // 0: use calibrated value
    double reach_dist = 0.0;  // 0: use calibrated value
    int episodes_per_epoch = 5;
    int n_epochs = 40;
    int grad_steps_per_epoch = 100;
    bool literal_reward_sign = false;
  } finetune;

  struct Experiment {
    int eval_episodes = 20;
    int metrics_every = 100;
    int raw_cvae_steps = 2000;
    std::string alpha_grid = "0.0,0.001,0.01,0.1,1.0,10.0";
  } experiment;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);
std::string serialize_config(const RunConfig& cfg);
void save_config(const RunConfig& cfg, const std::string& path);

// "section.key=value" command-line override.
void apply_override(RunConfig& cfg, const std::string& assignment);

// CRC32 of the canonical serialization; stored in checkpoints.
std::uint32_t config_hash(const RunConfig& cfg);

std::vector<double> parse_double_list(const std::string& csv);

}  // namespace flap::experiment
