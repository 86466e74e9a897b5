#include "flap/experiment/baselines.hpp"

#include <cmath>
#include <stdexcept>

#include "flap/aff/model.hpp"
#include "flap/core/batch_grad.hpp"
#include "flap/core/gaussian_graphs.hpp"

namespace flap::experiment {

BaselineKind parse_baseline(const std::string& name) {
  if (name == "model_free") return BaselineKind::kModelFree;
  if (name == "raw_planner") return BaselineKind::kRawSpacePlanner;
  if (name == "flap") return BaselineKind::kFlap;
  throw std::invalid_argument("unknown method '" + name + "'");
}

std::string baseline_name(BaselineKind k) {
  switch (k) {
    case BaselineKind::kModelFree:
      return "model_free";
    case BaselineKind::kRawSpacePlanner:
      return "raw_planner";
    case BaselineKind::kFlap:
      return "flap";
  }
  return "unknown";
}

RawCvae::RawCvae(int obs_dim, int u_dim, int hidden, double learning_rate)
    : obs_dim_(obs_dim),
      u_dim_(u_dim),
      q_("raw_cvae_encoder", 2 * obs_dim, hidden, u_dim, -5.0f, 2.0f),
      m_("raw_cvae_decoder", obs_dim + u_dim, hidden, obs_dim, -5.0f, 2.0f),
      opt_q_(q_.params().size(), static_cast<float>(learning_rate)),
      opt_m_(m_.params().size(), static_cast<float>(learning_rate)) {}

void RawCvae::init(core::Rng rng) {
  q_.init(rng.child("raw_cvae_encoder"));
  m_.init(rng.child("raw_cvae_decoder"));
}

std::vector<float> RawCvae::decode_mean(std::span<const float> obs,
                                        std::span<const float> u) const {
  std::vector<float> in(obs.size() + u.size());
  for (std::size_t i = 0; i < obs.size(); ++i) in[i] = obs[i];
  for (std::size_t i = 0; i < u.size(); ++i) in[obs.size() + i] = u[i];
  std::vector<float> mean(static_cast<std::size_t>(obs_dim_));
  std::vector<float> log_std(static_cast<std::size_t>(obs_dim_));
  m_.forward_plain(in, mean, log_std);
  return mean;
}

double RawCvae::train_step(const data::TrajectoryBuffer& buffer, int delta_t,
                           std::size_t batch_size, core::Rng& rng, bool parallel) {
  struct Pair {
    const std::vector<float>* a;
    const std::vector<float>* b;
  };
  std::vector<Pair> pairs(batch_size);
  std::vector<float> noise(batch_size * static_cast<std::size_t>(u_dim_));
  for (std::size_t i = 0; i < batch_size; ++i) {
    const aff::PairSample p = aff::sample_pair(buffer, delta_t, rng);
    pairs[i] = {&buffer[p.traj].observations[p.t], &buffer[p.traj].observations[p.t_future]};
  }
  for (auto& x : noise) x = static_cast<float>(rng.normal());

  std::vector<core::GradTarget<float>> targets = {
      {&q_.params(), &g_q_},
      {&m_.params(), &g_m_},
  };

  const double total = core::batch_mean_loss_grad<float>(
      batch_size, targets, parallel,
      [&](core::Tape<float>& t, const std::vector<int>& handles, std::size_t i) {
        auto o = t.leaf(*pairs[i].a);
        auto op = t.leaf(*pairs[i].b);
        auto qo = q_.forward(t, handles[0], t.concat(o, op));
        const std::span<const float> nu(noise.data() + i * static_cast<std::size_t>(u_dim_),
                                        static_cast<std::size_t>(u_dim_));
        auto u = core::reparam(t, qo.mean, qo.log_std, nu);
        auto mo = m_.forward(t, handles[1], t.concat(o, u));
        auto nll = t.scale(core::gaussian_log_prob_var(t, op, mo.mean, mo.log_std), -1.0f);
        auto prior = core::kl_std_normal_var(t, qo.mean, qo.log_std);
        return t.add(nll, t.scale(prior, static_cast<float>(beta_)));
      });
  if (!std::isfinite(total)) throw std::runtime_error("raw cvae: non-finite loss");
  opt_q_.step(q_.params().flat(), g_q_);
  opt_m_.step(m_.params().flat(), g_m_);
  return total;
}

}  // namespace flap::experiment
