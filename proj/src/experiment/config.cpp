#include "flap/experiment/config.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace flap::experiment {

namespace {

enum class FieldType { kInt, kU64, kDouble, kBool, kString };

struct FieldDef {
  const char* section;
  const char* key;
  FieldType type;
  void* ptr;
  double lo = 0.0;
  double hi = 0.0;  // lo == hi: unconstrained
};

std::vector<FieldDef> field_table(RunConfig& c) {
  return {
      {"run", "seed", FieldType::kU64, &c.run.seed},
      {"run", "out_dir", FieldType::kString, &c.run.out_dir},
      {"run", "threads", FieldType::kInt, &c.run.threads, 0, 1024},
      {"run", "parallel", FieldType::kBool, &c.run.parallel},
      {"run", "method", FieldType::kString, &c.run.method},

      {"env", "task", FieldType::kString, &c.env.task},
      {"env", "success_tol", FieldType::kDouble, &c.env.success_tol, 1e-6, 0.5},
      {"env", "max_steps", FieldType::kInt, &c.env.max_steps, 1, 100000},

      {"datagen", "n_trajectories", FieldType::kInt, &c.datagen.n_trajectories, 1, 10000000},
      {"datagen", "n_scenes", FieldType::kInt, &c.datagen.n_scenes, 1, 1000},
      {"datagen", "target_scene_id", FieldType::kInt, &c.datagen.target_scene_id, 0, 999},
      {"datagen", "holdout_drawer_in_target", FieldType::kBool, &c.datagen.holdout_drawer_in_target},
      {"datagen", "seed", FieldType::kU64, &c.datagen.seed},
      {"datagen", "noise_std", FieldType::kDouble, &c.datagen.noise_std, 0.0, 1.0},

      {"dataset", "batch_size", FieldType::kInt, &c.dataset.batch_size, 1, 65536},
      {"dataset", "offline_fraction", FieldType::kDouble, &c.dataset.offline_fraction, 0.0, 1.0},
      {"dataset", "gt_fraction_offline", FieldType::kDouble, &c.dataset.gt_fraction_offline, 0.0, 1.0},
      {"dataset", "gt_fraction_online", FieldType::kDouble, &c.dataset.gt_fraction_online, 0.0, 1.0},
      {"dataset", "geometric_future_bias", FieldType::kBool, &c.dataset.geometric_future_bias},

      {"encoder", "z_dim", FieldType::kInt, &c.encoder.z_dim, 1, 4096},
      {"encoder", "hidden", FieldType::kInt, &c.encoder.hidden, 1, 65536},
      {"encoder", "log_std_lo", FieldType::kDouble, &c.encoder.log_std_lo, -20.0, 0.0},
      {"encoder", "log_std_hi", FieldType::kDouble, &c.encoder.log_std_hi, 0.0, 20.0},

      {"gcrl", "gamma", FieldType::kDouble, &c.gcrl.gamma, 0.0, 0.999999},
      {"gcrl", "tau_expectile", FieldType::kDouble, &c.gcrl.tau_expectile, 0.500001, 0.999999},
      {"gcrl", "awr_temperature", FieldType::kDouble, &c.gcrl.awr_temperature, 1e-6, 1e6},
      {"gcrl", "awr_weight_clip", FieldType::kDouble, &c.gcrl.awr_weight_clip, 1e-6, 1e9},
      {"gcrl", "polyak_rate", FieldType::kDouble, &c.gcrl.polyak_rate, 1e-9, 1.0},
      {"gcrl", "alpha_vib", FieldType::kDouble, &c.gcrl.alpha_vib, 0.0, 1e6},
      {"gcrl", "learning_rate", FieldType::kDouble, &c.gcrl.learning_rate, 0.0, 1.0},
      {"gcrl", "policy_log_std_init", FieldType::kDouble, &c.gcrl.policy_log_std_init, -20.0, 20.0},
      {"gcrl", "pretrain_steps", FieldType::kInt, &c.gcrl.pretrain_steps, 0, 100000000},

      {"affordance", "u_dim", FieldType::kInt, &c.affordance.u_dim, 1, 4096},
      {"affordance", "delta_t", FieldType::kInt, &c.affordance.delta_t, 1, 100000},
      {"affordance", "beta", FieldType::kDouble, &c.affordance.beta, 0.0, 1e6},
      {"affordance", "hidden", FieldType::kInt, &c.affordance.hidden, 1, 65536},
      {"affordance", "steps", FieldType::kInt, &c.affordance.steps, 0, 100000000},
      {"affordance", "learning_rate", FieldType::kDouble, &c.affordance.learning_rate, 0.0, 1.0},

      {"planner", "n_subgoals", FieldType::kInt, &c.planner.n_subgoals, 1, 1024},
      {"planner", "n_samples", FieldType::kInt, &c.planner.n_samples, 1, 10000000},
      {"planner", "n_iters", FieldType::kInt, &c.planner.n_iters, 1, 10000},
      {"planner", "noise_schedule", FieldType::kString, &c.planner.noise_schedule},
      {"planner", "eta1", FieldType::kDouble, &c.planner.eta1, 0.0, 1e9},
      {"planner", "eta2", FieldType::kDouble, &c.planner.eta2, 0.0, 1e9},
      {"planner", "eta3", FieldType::kDouble, &c.planner.eta3, 0.0, 1e9},
      {"planner", "lambda", FieldType::kDouble, &c.planner.lambda, 1e-9, 1e9},
      {"planner", "vmin_percentile", FieldType::kDouble, &c.planner.vmin_percentile, 0.0, 100.0},
      {"planner", "vmax_percentile", FieldType::kDouble, &c.planner.vmax_percentile, 0.0, 100.0},

      {"finetune", "h", FieldType::kInt, &c.finetune.h, 0, 100000},
      {"finetune", "eps_cos", FieldType::kDouble, &c.finetune.eps_cos, -0.999999, 0.999999},
      {"finetune", "reach_dist", FieldType::kDouble, &c.finetune.reach_dist, 0.0, 1e6},
      {"finetune", "episodes_per_epoch", FieldType::kInt, &c.finetune.episodes_per_epoch, 1, 100000},
      {"finetune", "n_epochs", FieldType::kInt, &c.finetune.n_epochs, 0, 1000000},
      {"finetune", "grad_steps_per_epoch", FieldType::kInt, &c.finetune.grad_steps_per_epoch, 0, 1000000},
      {"finetune", "literal_reward_sign", FieldType::kBool, &c.finetune.literal_reward_sign},

      {"experiment", "eval_episodes", FieldType::kInt, &c.experiment.eval_episodes, 0, 1000000},
      {"experiment", "metrics_every", FieldType::kInt, &c.experiment.metrics_every, 1, 1000000},
      {"experiment", "raw_cvae_steps", FieldType::kInt, &c.experiment.raw_cvae_steps, 0, 100000000},
      {"experiment", "alpha_grid", FieldType::kString, &c.experiment.alpha_grid},
  };
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

void set_field(const FieldDef& f, const std::string& value) {
  const std::string full = std::string(f.section) + "." + f.key;
  switch (f.type) {
    case FieldType::kInt: {
      std::size_t pos = 0;
      long v = 0;
      try {
        v = std::stol(value, &pos);
      } catch (const std::exception&) {
        throw config_error("config: bad integer for " + full + ": '" + value + "'");
      }
      if (pos != value.size()) throw config_error("config: bad integer for " + full);
      if (f.lo != f.hi && (v < f.lo || v > f.hi)) {
        throw config_error("config: " + full + " out of range [" + std::to_string(f.lo) + ", " +
                           std::to_string(f.hi) + "]");
      }
      *static_cast<int*>(f.ptr) = static_cast<int>(v);
      break;
    }
    case FieldType::kU64: {
      try {
        *static_cast<std::uint64_t*>(f.ptr) = std::stoull(value);
      } catch (const std::exception&) {
        throw config_error("config: bad integer for " + full + ": '" + value + "'");
      }
      break;
    }
    case FieldType::kDouble: {
      double v = 0.0;
      try {
        v = std::stod(value);
      } catch (const std::exception&) {
        throw config_error("config: bad number for " + full + ": '" + value + "'");
      }
      if (!std::isfinite(v)) throw config_error("config: non-finite value for " + full);
      if (f.lo != f.hi && (v < f.lo || v > f.hi)) {
        throw config_error("config: " + full + " out of range [" + std::to_string(f.lo) + ", " +
                           std::to_string(f.hi) + "]");
      }
      *static_cast<double*>(f.ptr) = v;
      break;
    }
    case FieldType::kBool: {
      if (value == "true" || value == "1") {
        *static_cast<bool*>(f.ptr) = true;
      } else if (value == "false" || value == "0") {
        *static_cast<bool*>(f.ptr) = false;
      } else {
        throw config_error("config: bad bool for " + full + ": '" + value + "'");
      }
      break;
    }
    case FieldType::kString:
      *static_cast<std::string*>(f.ptr) = value;
      break;
  }
}

std::string field_to_string(const FieldDef& f) {
  char buf[64];
  switch (f.type) {
    case FieldType::kInt:
      return std::to_string(*static_cast<const int*>(f.ptr));
    case FieldType::kU64:
      return std::to_string(*static_cast<const std::uint64_t*>(f.ptr));
    case FieldType::kDouble:
      std::snprintf(buf, sizeof(buf), "%.17g", *static_cast<const double*>(f.ptr));
      return buf;
    case FieldType::kBool:
      return *static_cast<const bool*>(f.ptr) ? "true" : "false";
    case FieldType::kString:
      return *static_cast<const std::string*>(f.ptr);
  }
  return "";
}

void post_validate(const RunConfig& c) {
  if (c.datagen.target_scene_id >= c.datagen.n_scenes) {
    throw config_error("config: datagen.target_scene_id must be < n_scenes");
  }
  if (c.env.task != "A" && c.env.task != "B" && c.env.task != "C") {
    throw config_error("config: env.task must be A, B or C");
  }
  if (c.run.method != "flap" && c.run.method != "model_free" && c.run.method != "raw_planner") {
    throw config_error("config: run.method must be flap, model_free or raw_planner");
  }
  const auto sched = parse_double_list(c.planner.noise_schedule);
  if (static_cast<int>(sched.size()) != c.planner.n_iters) {
    throw config_error("config: planner.noise_schedule must have n_iters entries");
  }
  if (c.planner.vmin_percentile >= c.planner.vmax_percentile) {
    throw config_error("config: planner.vmin_percentile must be < vmax_percentile");
  }
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  auto fields = field_table(cfg);
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string s = trim(line);
    const auto comment = s.find('#');
    if (comment != std::string::npos) s = trim(s.substr(0, comment));
    if (s.empty()) continue;
    if (s.front() == '[' && s.back() == ']') {
      section = trim(s.substr(1, s.size() - 2));
      bool known = false;
      for (const auto& f : fields) {
        if (section == f.section) {
          known = true;
          break;
        }
      }
      if (!known) {
        throw config_error("config line " + std::to_string(line_no) + ": unknown section [" +
                           section + "]");
      }
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw config_error("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    bool found = false;
    for (const auto& f : fields) {
      if (section == f.section && key == f.key) {
        set_field(f, value);
        found = true;
        break;
      }
    }
    if (!found) {
      throw config_error("config line " + std::to_string(line_no) + ": unknown key '" + section +
                         "." + key + "'");
    }
  }
  post_validate(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
  RunConfig& mut = const_cast<RunConfig&>(cfg);
  auto fields = field_table(mut);
  std::ostringstream out;
  std::string section;
  for (const auto& f : fields) {
    if (section != f.section) {
      if (!section.empty()) out << "\n";
      section = f.section;
      out << "[" << section << "]\n";
    }
    out << f.key << " = " << field_to_string(f) << "\n";
  }
  return out.str();
}

void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw config_error("config: cannot write " + path);
  out << serialize_config(cfg);
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw config_error("--set expects section.key=value");
  const std::string full = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));
  const auto dot = full.find('.');
  if (dot == std::string::npos) throw config_error("--set expects section.key=value");
  const std::string section = full.substr(0, dot);
  const std::string key = full.substr(dot + 1);
  auto fields = field_table(cfg);
  for (const auto& f : fields) {
    if (section == f.section && key == f.key) {
      set_field(f, value);
      post_validate(cfg);
      return;
    }
  }
  throw config_error("--set: unknown key '" + full + "'");
}

std::uint32_t config_hash(const RunConfig& cfg) {
  const std::string s = serialize_config(cfg);
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::istringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string v = trim(item);
    if (v.empty()) continue;
    try {
      out.push_back(std::stod(v));
    } catch (const std::exception&) {
      throw config_error("config: bad list entry '" + v + "'");
    }
  }
  return out;
}

}  // namespace flap::experiment
