#include "flap/aff/model.hpp"

#include <cmath>
#include <stdexcept>

#include "flap/core/batch_grad.hpp"

namespace flap::aff {

PairSample sample_pair(const data::TrajectoryBuffer& buffer, int delta_t, core::Rng& rng) {
  if (buffer.empty()) throw std::invalid_argument("sample_pair: empty buffer");
  if (delta_t <= 0) throw std::invalid_argument("sample_pair: delta_t must be positive");
  for (int tries = 0; tries < 10000; ++tries) {
    const std::size_t ti = rng.uniform_index(buffer.size());
    const data::Trajectory& tr = buffer[ti];
    const std::size_t L = tr.length();
    if (L < 1) continue;
    PairSample p;
    p.traj = ti;
    p.t = rng.uniform_index(L);  // future index always > t
    p.t_future = p.t + static_cast<std::size_t>(delta_t);
    if (p.t_future > L) {
      p.t_future = L;
      p.truncated = true;
    }
    return p;
  }
  throw std::runtime_error("sample_pair: no usable trajectory");
}

AffordanceModel::AffordanceModel(const AffordanceConfig& cfg)
    : cfg_(cfg),
      q_("affordance_encoder", 2 * cfg.z_dim, cfg.hidden, cfg.u_dim, cfg.log_std_lo,
         cfg.log_std_hi),
      m_("affordance_decoder", cfg.z_dim + cfg.u_dim, cfg.hidden, cfg.z_dim, cfg.log_std_lo,
         cfg.log_std_hi),
      opt_q_(q_.params().size(), static_cast<float>(cfg.learning_rate)),
      opt_m_(m_.params().size(), static_cast<float>(cfg.learning_rate)) {}

void AffordanceModel::init(core::Rng rng) {
  q_.init(rng.child("affordance_encoder"));
  m_.init(rng.child("affordance_decoder"));
}

enc::GaussianLatent AffordanceModel::infer_code(std::span<const float> z,
                                                std::span<const float> z_prime) const {
  std::vector<float> in(z.size() + z_prime.size());
  for (std::size_t i = 0; i < z.size(); ++i) in[i] = z[i];
  for (std::size_t i = 0; i < z_prime.size(); ++i) in[z.size() + i] = z_prime[i];
  enc::GaussianLatent gl;
  gl.mean.resize(static_cast<std::size_t>(cfg_.u_dim));
  gl.log_std.resize(static_cast<std::size_t>(cfg_.u_dim));
  q_.forward_plain(in, gl.mean, gl.log_std);
  return gl;
}

enc::GaussianLatent AffordanceModel::decode(std::span<const float> z,
                                            std::span<const float> u) const {
  std::vector<float> in(z.size() + u.size());
  for (std::size_t i = 0; i < z.size(); ++i) in[i] = z[i];
  for (std::size_t i = 0; i < u.size(); ++i) in[z.size() + i] = u[i];
  enc::GaussianLatent gl;
  gl.mean.resize(static_cast<std::size_t>(cfg_.z_dim));
  gl.log_std.resize(static_cast<std::size_t>(cfg_.z_dim));
  m_.forward_plain(in, gl.mean, gl.log_std);
  return gl;
}

std::vector<float> AffordanceModel::decode_mean(std::span<const float> z,
                                                std::span<const float> u) const {
  return decode(z, u).mean;
}

std::vector<float> AffordanceModel::sample_reachable(std::span<const float> z,
                                                     core::Rng& rng) const {
  std::vector<float> u(static_cast<std::size_t>(cfg_.u_dim));
  for (auto& x : u) x = static_cast<float>(rng.normal());
  return decode_mean(z, u);
}

namespace {

struct PairLatents {
  std::vector<float> mu_s, ls_s, mu_sp, ls_sp;
};

PairLatents encode_pair(const enc::StateEncoder& encoder, std::span<const float> obs_t,
                        std::span<const float> obs_future) {
  PairLatents p;
  const enc::GaussianLatent a = encoder.encode(obs_t);
  const enc::GaussianLatent b = encoder.encode(obs_future);
  p.mu_s = a.mean;
  p.ls_s = a.log_std;
  p.mu_sp = b.mean;
  p.ls_sp = b.log_std;
  return p;
}

}  // namespace

ElboReport AffordanceModel::train_step(const data::TrajectoryBuffer& buffer,
                                       const enc::StateEncoder& encoder, std::size_t batch_size,
                                       core::Rng& rng, bool parallel) {
  if (batch_size == 0) throw std::invalid_argument("affordance train_step: empty batch");
  const std::size_t zd = static_cast<std::size_t>(cfg_.z_dim);
  const std::size_t ud = static_cast<std::size_t>(cfg_.u_dim);

  // Pairs, encodings and noise prepared serially; blocks stay rng-free.
  std::vector<PairLatents> lat(batch_size);
  std::vector<float> noise((2 * zd + ud) * batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    const PairSample p = sample_pair(buffer, cfg_.delta_t, rng);
    const data::Trajectory& tr = buffer[p.traj];
    lat[i] = encode_pair(encoder, tr.observations[p.t], tr.observations[p.t_future]);
  }
  for (auto& x : noise) x = static_cast<float>(rng.normal());

  CvaeNets<float> nets{&q_, &m_};
  std::vector<core::GradTarget<float>> targets = {
      {&q_.params(), &g_q_},
      {&m_.params(), &g_m_},
  };

  std::vector<ElboValues> values(batch_size);
  const double total = core::batch_mean_loss_grad<float>(
      batch_size, targets, parallel,
      [&](core::Tape<float>& t, const std::vector<int>& handles, std::size_t i) {
        CvaeHandles h{handles[0], handles[1]};
        CvaeSample<float> s;
        s.mu_s = lat[i].mu_s;
        s.ls_s = lat[i].ls_s;
        s.mu_sp = lat[i].mu_sp;
        s.ls_sp = lat[i].ls_sp;
        const float* np = noise.data() + i * (2 * zd + ud);
        s.noise_z = {np, zd};
        s.noise_zp = {np + zd, zd};
        s.noise_u = {np + 2 * zd, ud};
        return build_elbo_sample_loss(t, h, nets, s, cfg_.beta, &values[i]);
      });

  ElboReport rep;
  rep.total = total;
  for (const auto& v : values) {
    rep.reconstruction_kl += v.reconstruction_kl;
    rep.prior_kl += v.prior_kl;
  }
  rep.reconstruction_kl /= static_cast<double>(batch_size);
  rep.prior_kl /= static_cast<double>(batch_size);

  if (!std::isfinite(rep.total)) {
    throw std::runtime_error("affordance train_step: non-finite ELBO loss");
  }

  opt_q_.step(q_.params().flat(), g_q_);
  opt_m_.step(m_.params().flat(), g_m_);
  return rep;
}

ElboReport AffordanceModel::elbo_loss(std::span<const float> obs_t,
                                      std::span<const float> obs_future,
                                      const enc::StateEncoder& encoder, core::Rng& rng) const {
  const std::size_t zd = static_cast<std::size_t>(cfg_.z_dim);
  const std::size_t ud = static_cast<std::size_t>(cfg_.u_dim);
  const PairLatents lat = encode_pair(encoder, obs_t, obs_future);
  std::vector<float> noise(2 * zd + ud);
  for (auto& x : noise) x = static_cast<float>(rng.normal());

  core::Tape<float> t;
  CvaeNets<float> nets{&q_, &m_};
  CvaeHandles h = bind_cvae<float>(t, nets, nullptr, nullptr);
  CvaeSample<float> s;
  s.mu_s = lat.mu_s;
  s.ls_s = lat.ls_s;
  s.mu_sp = lat.mu_sp;
  s.ls_sp = lat.ls_sp;
  s.noise_z = {noise.data(), zd};
  s.noise_zp = {noise.data() + zd, zd};
  s.noise_u = {noise.data() + 2 * zd, ud};
  ElboValues vals;
  auto var = build_elbo_sample_loss(t, h, nets, s, cfg_.beta, &vals);
  ElboReport rep;
  rep.total = static_cast<double>(t.scalar(var));
  rep.reconstruction_kl = vals.reconstruction_kl;
  rep.prior_kl = vals.prior_kl;
  return rep;
}

}  // namespace flap::aff
