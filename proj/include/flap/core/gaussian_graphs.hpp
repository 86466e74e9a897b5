#pragma once

#include <span>

#include "flap/core/gaussian.hpp"
#include "flap/core/tape.hpp"

namespace flap::core {

// On-tape building blocks for diagonal-Gaussian objectives.

// mean + exp(log_std) * noise, differentiable through the reparameterization.
template <class Real>
typename Tape<Real>::Var reparam(Tape<Real>& t, typename Tape<Real>::Var mean,
                                 typename Tape<Real>::Var log_std, std::span<const Real> noise) {
  auto n = t.leaf(noise);
  return t.add(mean, t.mul(t.exp_(log_std), n));
}

// KL(N(mu, s) || N(0, I)) = 0.5 * sum(mu^2 + exp(2 ls) - 1 - 2 ls)
template <class Real>
typename Tape<Real>::Var kl_std_normal_var(Tape<Real>& t, typename Tape<Real>::Var mean,
                                           typename Tape<Real>::Var log_std) {
  auto inner = t.add(t.square(mean), t.exp_(t.scale(log_std, Real(2))));
  inner = t.sub(inner, t.add_const(t.scale(log_std, Real(2)), Real(1)));
  return t.scale(t.sum(inner), Real(0.5));
}

// log N(x; mean, diag(exp(log_std)^2))
template <class Real>
typename Tape<Real>::Var gaussian_log_prob_var(Tape<Real>& t, typename Tape<Real>::Var x,
                                               typename Tape<Real>::Var mean,
                                               typename Tape<Real>::Var log_std) {
  const int d = t.len(x);
  auto diff = t.sub(x, mean);
  auto norm = t.mul(diff, t.exp_(t.scale(log_std, Real(-1))));
  auto quad = t.scale(t.sum(t.square(norm)), Real(-0.5));
  auto logdet = t.scale(t.sum(log_std), Real(-1));
  return t.add_const(t.add(quad, logdet),
                     Real(-0.5) * static_cast<Real>(d) * static_cast<Real>(kLog2Pi));
}

}  // namespace flap::core
