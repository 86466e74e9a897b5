#pragma once

#include <span>

#include "flap/core/nets.hpp"
#include "flap/core/tape.hpp"

namespace flap::aff {

template <class Real>
struct CvaeNets {
  const core::GaussianNet<Real>* encoder = nullptr;  // q(u | z, z')
  const core::GaussianNet<Real>* decoder = nullptr;  // m(z' | z, u)
};

struct CvaeHandles {
  int enc = -1, dec = -1;
};

template <class Real>
CvaeHandles bind_cvae(core::Tape<Real>& t, const CvaeNets<Real>& nets, Real* g_enc, Real* g_dec) {
  CvaeHandles h;
  h.enc = t.bind(nets.encoder->params(), g_enc);
  h.dec = t.bind(nets.decoder->params(), g_dec);
  return h;
}

// One training pair: the state encoder's output distributions for s and
// s+dt, plus the reparameterization noise. The state encoder itself stays
// outside the tape (its gradients are blocked in this phase).
template <class Real>
struct CvaeSample {
  std::span<const Real> mu_s, ls_s;    // phi(z | s)
  std::span<const Real> mu_sp, ls_sp;  // phi(z' | s')
  std::span<const Real> noise_z, noise_zp, noise_u;
};

struct ElboValues {
  double reconstruction_kl = 0.0;  // KL(m(.|z,u) || phi(.|s'))
  double prior_kl = 0.0;           // KL(q(.|z,z') || N(0,I))
};

// Eq.-style ELBO loss: KL(m || phi') + beta * KL(q || p(u)), single
// reparameterized draw each for z, z' and u. Returns the scalar total.
template <class Real>
typename core::Tape<Real>::Var build_elbo_sample_loss(core::Tape<Real>& t, const CvaeHandles& h,
                                                      const CvaeNets<Real>& nets,
                                                      const CvaeSample<Real>& s, double beta,
                                                      ElboValues* out = nullptr) {
  const std::size_t zd = s.mu_s.size();

  std::vector<Real> zv(zd), zpv(zd);
  for (std::size_t i = 0; i < zd; ++i) {
    zv[i] = s.mu_s[i] + std::exp(s.ls_s[i]) * s.noise_z[i];
    zpv[i] = s.mu_sp[i] + std::exp(s.ls_sp[i]) * s.noise_zp[i];
  }
  auto z = t.leaf(zv);
  auto zp = t.leaf(zpv);

  auto qo = nets.encoder->forward(t, h.enc, t.concat(z, zp));
  auto u = t.add(qo.mean, t.mul(t.exp_(qo.log_std), t.leaf(s.noise_u)));
  auto mo = nets.decoder->forward(t, h.dec, t.concat(z, u));

  // KL(N(mu0, s0) || N(mu1, s1)) per dim:
  //   ls1 - ls0 + (exp(2 ls0) + (mu0 - mu1)^2) / (2 exp(2 ls1)) - 1/2
  auto mu1 = t.leaf(s.mu_sp);
  auto ls1 = t.leaf(s.ls_sp);
  auto num = t.add(t.exp_(t.scale(mo.log_std, Real(2))), t.square(t.sub(mo.mean, mu1)));
  auto inv2v1 = t.scale(t.exp_(t.scale(ls1, Real(-2))), Real(0.5));
  auto per_dim = t.add_const(t.add(t.sub(ls1, mo.log_std), t.mul(num, inv2v1)), Real(-0.5));
  auto recon_kl = t.sum(per_dim);

  auto q_inner = t.add(t.square(qo.mean), t.exp_(t.scale(qo.log_std, Real(2))));
  q_inner = t.sub(q_inner, t.add_const(t.scale(qo.log_std, Real(2)), Real(1)));
  auto prior_kl = t.scale(t.sum(q_inner), Real(0.5));

  if (out != nullptr) {
    out->reconstruction_kl = static_cast<double>(t.scalar(recon_kl));
    out->prior_kl = static_cast<double>(t.scalar(prior_kl));
  }
  return t.add(recon_kl, t.scale(prior_kl, static_cast<Real>(beta)));
}

}  // namespace flap::aff
