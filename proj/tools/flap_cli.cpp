// Command-line entry point: data generation, pre-training, planning,
// fine-tuning, evaluation, the alpha ablation and plot emission.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "flap/core/parallel.hpp"
#include "flap/data/dataset_file.hpp"
#include "flap/datagen/generator.hpp"
#include "flap/experiment/plots.hpp"
#include "flap/experiment/runners.hpp"

namespace fs = std::filesystem;
using namespace flap;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::int64_t seed = -1;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Config file (ini-style)");
  cmd->add_option("--set", args.overrides, "Override: section.key=value")->take_all();
  cmd->add_option("--seed", args.seed, "Override run.seed");
  cmd->add_option("--out", args.out_dir, "Override run.out_dir");
}

experiment::RunConfig resolve_config(const CommonArgs& args) {
  experiment::RunConfig cfg;
  if (!args.config_path.empty()) cfg = experiment::load_config(args.config_path);
  for (const auto& o : args.overrides) experiment::apply_override(cfg, o);
  if (args.seed >= 0) cfg.run.seed = static_cast<std::uint64_t>(args.seed);
  if (!args.out_dir.empty()) cfg.run.out_dir = args.out_dir;
  core::set_thread_count(cfg.run.threads);
  return cfg;
}

void ensure_out_dir(const experiment::RunConfig& cfg) {
  fs::create_directories(cfg.run.out_dir);
  experiment::save_config(cfg, experiment::run_paths(cfg).config_copy);
}

data::TrajectoryBuffer load_offline(const experiment::RunConfig& cfg,
                                    const std::string& dataset_path) {
  const std::string path =
      dataset_path.empty() ? experiment::run_paths(cfg).dataset : dataset_path;
  data::DatasetHeader header;
  data::TrajectoryBuffer buf = data::load_dataset(path, &header);
  if (header.obs_dim != env::kObsDim || header.action_dim != env::kActionDim) {
    throw std::runtime_error("dataset dims (" + std::to_string(header.obs_dim) + "," +
                             std::to_string(header.action_dim) + ") do not match the environment");
  }
  return buf;
}

datagen::DatasetConfig datagen_config(const experiment::RunConfig& cfg) {
  datagen::DatasetConfig dc;
  dc.n_trajectories = static_cast<std::size_t>(cfg.datagen.n_trajectories);
  dc.n_scenes = cfg.datagen.n_scenes;
  dc.target_scene_id = cfg.datagen.target_scene_id;
  dc.holdout_drawer_in_target = cfg.datagen.holdout_drawer_in_target;
  dc.seed = cfg.datagen.seed;
  dc.noise_std = cfg.datagen.noise_std;
  return dc;
}

int cmd_gen_data(const CommonArgs& common, const std::string& dataset_path) {
  const experiment::RunConfig cfg = resolve_config(common);
  ensure_out_dir(cfg);
  const std::string path =
      dataset_path.empty() ? experiment::run_paths(cfg).dataset : dataset_path;
  datagen::generate_and_save(datagen_config(cfg), path, cfg.run.parallel);
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_pretrain(const CommonArgs& common, const std::string& dataset_path) {
  const experiment::RunConfig cfg = resolve_config(common);
  ensure_out_dir(cfg);
  const experiment::RunPaths paths = experiment::run_paths(cfg);
  const data::TrajectoryBuffer offline = load_offline(cfg, dataset_path);

  experiment::Models models(cfg);
  const experiment::Calibration calib =
      experiment::run_pretrain(cfg, offline, models, paths.pretrain_losses);
  experiment::save_checkpoint(experiment::make_checkpoint(cfg, models, calib), paths.checkpoint);
  std::cout << "wrote " << paths.checkpoint << " (v_min=" << calib.v_min
            << " v_max=" << calib.v_max << " eps_cos=" << calib.eps_cos
            << " reach_dist=" << calib.reach_dist << ")\n";
  return 0;
}

int cmd_plan(const CommonArgs& common, const std::string& checkpoint_path,
             const std::string& out_path) {
  const experiment::RunConfig cfg = resolve_config(common);
  const experiment::RunPaths paths = experiment::run_paths(cfg);
  const std::string ckpt_path = checkpoint_path.empty() ? paths.checkpoint : checkpoint_path;

  experiment::Models models(cfg);
  experiment::Calibration calib;
  experiment::restore_models(experiment::load_checkpoint(ckpt_path), cfg, models, &calib);

  const env::TaskSpec task = experiment::task_from_config(cfg);
  env::Env e;
  const env::ObservationVector obs_d = e.reset(task, cfg.run.seed);
  const env::ObservationVector goal_d = e.goal_observation();
  std::vector<float> obs(obs_d.begin(), obs_d.end());
  std::vector<float> goal(goal_d.begin(), goal_d.end());

  const tune::PlanFn planner = experiment::make_planner_fn(
      experiment::parse_baseline(cfg.run.method == "model_free" ? "flap" : cfg.run.method),
      models, calib, cfg, core::Rng(cfg.run.seed).child("plan_cli"));
  const plan::SubgoalPlan plan = planner(obs, goal);

  nlohmann::json j;
  j["cost"] = plan.cost;
  j["cost_terms"] = {{"terminal_distance", plan.cost_terms.terminal_distance},
                     {"hinge_low", plan.cost_terms.hinge_low},
                     {"hinge_high", plan.cost_terms.hinge_high},
                     {"prior_penalty", plan.cost_terms.prior_penalty}};
  j["u_seq"] = plan.u_seq;
  j["z_seq"] = plan.z_seq;
  const std::string out = out_path.empty() ? paths.plan_dump : out_path;
  fs::create_directories(fs::path(out).parent_path().empty() ? "." : fs::path(out).parent_path());
  std::ofstream f(out, std::ios::trunc);
  f << j.dump(2) << "\n";
  std::cout << "wrote " << out << " (cost=" << plan.cost << ")\n";
  return 0;
}

int cmd_finetune(const CommonArgs& common, const std::string& checkpoint_path,
                 const std::string& dataset_path, const std::string& method) {
  experiment::RunConfig cfg = resolve_config(common);
  if (!method.empty()) cfg.run.method = method;
  ensure_out_dir(cfg);
  const experiment::RunPaths paths = experiment::run_paths(cfg);
  const experiment::BaselineKind kind = experiment::parse_baseline(cfg.run.method);

  const data::TrajectoryBuffer offline = load_offline(cfg, dataset_path);
  experiment::Models models(cfg);
  experiment::Calibration calib;
  const std::string ckpt_path = checkpoint_path.empty() ? paths.checkpoint : checkpoint_path;
  experiment::restore_models(experiment::load_checkpoint(ckpt_path), cfg, models, &calib);

  const experiment::FinetuneRunResult res =
      experiment::run_finetune(cfg, models, calib, kind, offline);
  experiment::write_metrics_csv(res.rows, paths.metrics(cfg.run.method, cfg.run.seed));
  experiment::save_checkpoint(experiment::make_checkpoint(cfg, models, calib),
                              paths.finetuned_checkpoint(cfg.run.method));
  std::cout << "method=" << cfg.run.method << " final_eval_success=" << res.final_success_rate
            << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& common, const std::vector<std::string>& checkpoints,
             const std::string& method, int episodes) {
  experiment::RunConfig cfg = resolve_config(common);
  if (!method.empty()) cfg.run.method = method;
  const experiment::BaselineKind kind = experiment::parse_baseline(cfg.run.method);

  std::vector<std::string> paths = checkpoints;
  if (paths.empty()) paths.push_back(experiment::run_paths(cfg).checkpoint);

  const data::TrajectoryBuffer offline;  // eval needs no data
  (void)offline;
  std::vector<double> rates;
  for (const auto& p : paths) {
    experiment::Models models(cfg);
    experiment::Calibration calib;
    experiment::restore_models(experiment::load_checkpoint(p), cfg, models, &calib);
    const double rate = experiment::run_eval(cfg, models, calib, kind, episodes);
    rates.push_back(rate);
    std::cout << p << ": success_rate=" << rate << "\n";
  }
  if (rates.size() > 1) {
    double mean = 0.0;
    for (double r : rates) mean += r;
    mean /= static_cast<double>(rates.size());
    double var = 0.0;
    for (double r : rates) var += (r - mean) * (r - mean);
    var /= static_cast<double>(rates.size() - 1);
    std::cout << "mean=" << mean << " std=" << std::sqrt(var) << " over " << rates.size()
              << " checkpoints\n";
  }
  return 0;
}

int cmd_ablate_alpha(const CommonArgs& common, const std::string& dataset_path) {
  const experiment::RunConfig base = resolve_config(common);
  ensure_out_dir(base);
  const data::TrajectoryBuffer offline = load_offline(base, dataset_path);
  const std::vector<double> grid = experiment::parse_double_list(base.experiment.alpha_grid);

  for (const double alpha : grid) {
    experiment::RunConfig cfg = base;
    cfg.gcrl.alpha_vib = alpha;
    experiment::Models models(cfg);
    const experiment::Calibration calib = experiment::run_pretrain(cfg, offline, models, "");
    const experiment::FinetuneRunResult res =
        experiment::run_finetune(cfg, models, calib, experiment::BaselineKind::kFlap, offline);
    std::ostringstream name;
    name << cfg.run.out_dir << "/metrics_alpha_" << alpha << ".csv";
    experiment::write_metrics_csv(res.rows, name.str());
    std::cout << "alpha=" << alpha << " final_eval_success=" << res.final_success_rate << " -> "
              << name.str() << "\n";
  }
  return 0;
}

int cmd_plot(const CommonArgs& common, const std::vector<std::string>& metrics_files,
             const std::string& checkpoint_path, const std::string& dataset_path,
             int latent_samples) {
  const experiment::RunConfig cfg = resolve_config(common);
  const experiment::RunPaths paths = experiment::run_paths(cfg);
  fs::create_directories(paths.plots_dir);

  if (!metrics_files.empty()) {
    std::vector<experiment::MetricsRow> rows;
    for (const auto& f : metrics_files) {
      const auto r = experiment::read_metrics_csv(f);
      rows.insert(rows.end(), r.begin(), r.end());
    }
    const std::string svg = paths.plots_dir + "/success_rate.svg";
    experiment::plot_success_curves(rows, svg);
    std::cout << "wrote " << svg << "\n";
  }

  if (!checkpoint_path.empty()) {
    experiment::Models models(cfg);
    experiment::Calibration calib;
    experiment::restore_models(experiment::load_checkpoint(checkpoint_path), cfg, models, &calib);
    const data::TrajectoryBuffer offline = load_offline(cfg, dataset_path);
    experiment::dump_latents(offline, models.agent.encoder(),
                             static_cast<std::size_t>(latent_samples), cfg.run.seed,
                             paths.latents);
    std::cout << "wrote " << paths.latents << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FLAP pipeline: lossy-latent goal-conditioned RL with affordance planning"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string dataset_path, checkpoint_path, method, plan_out;
  std::vector<std::string> checkpoints, metrics_files;
  int episodes = 20;
  int latent_samples = 2000;

  auto* gen = app.add_subcommand("gen-data", "Generate the scripted offline dataset");
  add_common(gen, common);
  gen->add_option("--dataset", dataset_path, "Output dataset path");

  auto* pre = app.add_subcommand("pretrain", "Offline pre-training on the dataset");
  add_common(pre, common);
  pre->add_option("--dataset", dataset_path, "Dataset path");

  auto* plan_cmd = app.add_subcommand("plan", "Plan subgoals once and dump them as JSON");
  add_common(plan_cmd, common);
  plan_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint path");
  plan_cmd->add_option("--plan-out", plan_out, "Output JSON path");

  auto* fine = app.add_subcommand("finetune", "Online fine-tuning on the target task");
  add_common(fine, common);
  fine->add_option("--checkpoint", checkpoint_path, "Pre-trained checkpoint");
  fine->add_option("--dataset", dataset_path, "Dataset path");
  fine->add_option("--method", method, "flap | model_free | raw_planner");

  auto* ev = app.add_subcommand("eval", "Evaluate checkpoints with a deterministic policy");
  add_common(ev, common);
  ev->add_option("--checkpoint", checkpoints, "Checkpoint path(s)")->take_all();
  ev->add_option("--method", method, "flap | model_free | raw_planner");
  ev->add_option("--episodes", episodes, "Evaluation episodes");

  auto* ab = app.add_subcommand("ablate-alpha", "Sweep the VIB weight and emit metrics per value");
  add_common(ab, common);
  ab->add_option("--dataset", dataset_path, "Dataset path");

  auto* pl = app.add_subcommand("plot", "Emit SVG curves and latent dumps");
  add_common(pl, common);
  pl->add_option("--metrics", metrics_files, "Metrics CSV files")->take_all();
  pl->add_option("--checkpoint", checkpoint_path, "Checkpoint for latent dump");
  pl->add_option("--dataset", dataset_path, "Dataset for latent dump");
  pl->add_option("--latent-samples", latent_samples, "Latent dump rows");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(common, dataset_path);
    if (pre->parsed()) return cmd_pretrain(common, dataset_path);
    if (plan_cmd->parsed()) return cmd_plan(common, checkpoint_path, plan_out);
    if (fine->parsed()) return cmd_finetune(common, checkpoint_path, dataset_path, method);
    if (ev->parsed()) return cmd_eval(common, checkpoints, method, episodes);
    if (ab->parsed()) return cmd_ablate_alpha(common, dataset_path);
    if (pl->parsed()) {
      return cmd_plot(common, metrics_files, checkpoint_path, dataset_path, latent_samples);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
