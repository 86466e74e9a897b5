#include "flap/plan/mppi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "flap/core/gaussian.hpp"
#include "flap/core/parallel.hpp"

namespace flap::plan {

namespace {
std::atomic<std::uint64_t> g_plan_invocations{0};
}

std::uint64_t plan_invocations() { return g_plan_invocations.load(); }
void reset_plan_invocations() { g_plan_invocations.store(0); }

void PlannerConfig::validate() const {
  if (n_subgoals < 1) throw std::invalid_argument("planner: K must be >= 1");
  if (n_samples < 1 || n_iters < 1) throw std::invalid_argument("planner: samples/iters");
  if (static_cast<int>(noise_schedule.size()) != n_iters) {
    throw std::invalid_argument("planner: noise schedule length must equal n_iters");
  }
  if (!(v_min < v_max)) throw std::invalid_argument("planner: requires v_min < v_max");
  if (!(v_max <= 0.0)) throw std::invalid_argument("planner: requires v_max <= 0");
  if (!(lambda > 0.0)) throw std::invalid_argument("planner: lambda must be positive");
}

std::vector<std::vector<float>> rollout(const TransitionModel& model, std::span<const float> z0,
                                        const std::vector<std::vector<float>>& u_seq) {
  std::vector<std::vector<float>> z_seq(u_seq.size());
  std::vector<float> cur(z0.begin(), z0.end());
  for (std::size_t k = 0; k < u_seq.size(); ++k) {
    z_seq[k].resize(static_cast<std::size_t>(model.z_dim()));
    model.next(cur, u_seq[k], z_seq[k]);
    cur = z_seq[k];
  }
  return z_seq;
}

namespace {

// Scores one flat candidate without allocating per-subgoal vectors.
double score_candidate(const TransitionModel& model, const TransitionValue& value,
                       const PlannerConfig& cfg, std::span<const float> z0,
                       std::span<const float> z_g, const float* u_flat, CostTerms* terms,
                       std::vector<float>& z_prev, std::vector<float>& z_cur) {
  const int zd = model.z_dim();
  const int ud = model.u_dim();
  CostTerms ct;
  z_prev.assign(z0.begin(), z0.end());
  z_cur.resize(static_cast<std::size_t>(zd));
  for (int k = 0; k < cfg.n_subgoals; ++k) {
    const std::span<const float> u(u_flat + static_cast<std::size_t>(k) * ud,
                                   static_cast<std::size_t>(ud));
    model.next(z_prev, u, z_cur);
    const double vk = value.value(z_prev, z_cur);
    ct.hinge_low += cfg.eta1 * std::max(cfg.v_min - vk, 0.0);
    ct.hinge_high += cfg.eta2 * std::max(vk - cfg.v_max, 0.0);
    ct.prior_penalty += -cfg.eta3 * core::standard_normal_log_density<float>(u);
    std::swap(z_prev, z_cur);
  }
  double dist2 = 0.0;
  for (int i = 0; i < zd; ++i) {
    const double d = static_cast<double>(z_g[static_cast<std::size_t>(i)]) -
                     static_cast<double>(z_prev[static_cast<std::size_t>(i)]);
    dist2 += d * d;
  }
  ct.terminal_distance = std::sqrt(dist2);
  if (terms != nullptr) *terms = ct;
  return ct.terminal_distance + ct.hinge_low + ct.hinge_high + ct.prior_penalty;
}

}  // namespace

double plan_cost(const TransitionModel& model, const TransitionValue& value,
                 const PlannerConfig& cfg, std::span<const float> z0, std::span<const float> z_g,
                 const std::vector<std::vector<float>>& u_seq, CostTerms* terms) {
  if (static_cast<int>(u_seq.size()) != cfg.n_subgoals) {
    throw std::invalid_argument("plan_cost: u_seq length must be K");
  }
  std::vector<float> flat;
  flat.reserve(u_seq.size() * static_cast<std::size_t>(model.u_dim()));
  for (const auto& u : u_seq) flat.insert(flat.end(), u.begin(), u.end());
  std::vector<float> za, zb;
  return score_candidate(model, value, cfg, z0, z_g, flat.data(), terms, za, zb);
}

SubgoalPlan mppi_plan(const TransitionModel& model, const TransitionValue& value,
                      const PlannerConfig& cfg, std::span<const float> z0,
                      std::span<const float> z_g, core::Rng& rng, bool parallel) {
  cfg.validate();
  g_plan_invocations.fetch_add(1);

  const int ud = model.u_dim();
  const std::size_t seq_len = static_cast<std::size_t>(cfg.n_subgoals) * ud;
  const std::size_t ns = static_cast<std::size_t>(cfg.n_samples);

  std::vector<double> mean_seq(seq_len, 0.0);
  std::vector<float> candidates(ns * seq_len);
  std::vector<double> costs(ns);

  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<float> best_seq(seq_len, 0.0f);
  std::vector<double> best_per_iter;
  best_per_iter.reserve(static_cast<std::size_t>(cfg.n_iters));

  for (int iter = 0; iter < cfg.n_iters; ++iter) {
    const double sigma = cfg.noise_schedule[static_cast<std::size_t>(iter)];
    // Candidate noise drawn serially; scoring writes slot-per-candidate, so
    // the serial and OpenMP paths agree bitwise.
    for (std::size_t j = 0; j < ns; ++j) {
      float* u = candidates.data() + j * seq_len;
      for (std::size_t d = 0; d < seq_len; ++d) {
        u[d] = static_cast<float>(mean_seq[d] + sigma * rng.normal());
      }
    }
    core::for_each_index(ns, parallel, [&](std::size_t j) {
      std::vector<float> za, zb;
      costs[j] = score_candidate(model, value, cfg, z0, z_g, candidates.data() + j * seq_len,
                                 nullptr, za, zb);
    });

    double iter_min = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < ns; ++j) iter_min = std::min(iter_min, costs[j]);
    if (!std::isfinite(iter_min)) throw std::runtime_error("mppi_plan: all candidate costs non-finite");

    for (std::size_t j = 0; j < ns; ++j) {
      if (costs[j] < best_cost) {
        best_cost = costs[j];
        const float* u = candidates.data() + j * seq_len;
        std::copy(u, u + seq_len, best_seq.begin());
      }
    }

    // Importance-weighted mean update: w_j = exp(-(c_j - c_min) / lambda).
    std::vector<double> new_mean(seq_len, 0.0);
    double w_sum = 0.0;
    for (std::size_t j = 0; j < ns; ++j) {
      if (!std::isfinite(costs[j])) continue;
      const double w = std::exp(-(costs[j] - iter_min) / cfg.lambda);
      w_sum += w;
      const float* u = candidates.data() + j * seq_len;
      for (std::size_t d = 0; d < seq_len; ++d) new_mean[d] += w * static_cast<double>(u[d]);
    }
    for (std::size_t d = 0; d < seq_len; ++d) mean_seq[d] = new_mean[d] / w_sum;
    best_per_iter.push_back(best_cost);
  }

  SubgoalPlan plan;
  plan.mean_seq = mean_seq;
  plan.best_cost_per_iter = std::move(best_per_iter);
  plan.u_seq.resize(static_cast<std::size_t>(cfg.n_subgoals));
  for (int k = 0; k < cfg.n_subgoals; ++k) {
    const float* u = best_seq.data() + static_cast<std::size_t>(k) * ud;
    plan.u_seq[static_cast<std::size_t>(k)].assign(u, u + ud);
  }
  plan.z_seq = rollout(model, z0, plan.u_seq);
  plan.cost = plan_cost(model, value, cfg, z0, z_g, plan.u_seq, &plan.cost_terms);
  // The executed plan ends at the commanded goal itself.
  plan.z_seq.back().assign(z_g.begin(), z_g.end());
  return plan;
}

std::pair<double, double> calibrate_value_bounds(const data::TrajectoryBuffer& buffer,
                                                 const TransitionValue& value,
                                                 const enc::StateEncoder& encoder, int delta_t,
                                                 core::Rng& rng, std::size_t n_pairs,
                                                 double lo_pct, double hi_pct,
                                                 std::size_t min_pairs) {
  if (buffer.empty()) throw std::invalid_argument("calibrate_value_bounds: empty buffer");
  std::vector<double> vals;
  vals.reserve(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const data::Trajectory& tr = buffer[rng.uniform_index(buffer.size())];
    const std::size_t L = tr.length();
    if (L < 1) continue;
    const std::size_t t = rng.uniform_index(L);
    const std::size_t tf = std::min(t + static_cast<std::size_t>(delta_t), L);
    const std::vector<float> za = encoder.encode_mean(tr.observations[t]);
    const std::vector<float> zb = encoder.encode_mean(tr.observations[tf]);
    vals.push_back(value.value(za, zb));
  }
  if (vals.size() < min_pairs) {
    throw std::runtime_error("calibrate_value_bounds: fewer than required pairs");
  }
  std::sort(vals.begin(), vals.end());
  auto pct = [&](double p) {
    const double idx = p / 100.0 * static_cast<double>(vals.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(lo + 1, vals.size() - 1);
    const double frac = idx - static_cast<double>(lo);
    return vals[lo] * (1.0 - frac) + vals[hi] * frac;
  };
  return {pct(lo_pct), pct(hi_pct)};
}

}  // namespace flap::plan
