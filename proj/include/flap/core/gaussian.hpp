#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

namespace flap::core {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// KL( N(mu, diag(exp(ls)^2)) || N(0, I) ), closed form.
template <class Real>
double kl_to_standard_normal(std::span<const Real> mean, std::span<const Real> log_std) {
  if (mean.size() != log_std.size()) throw std::invalid_argument("kl: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double mu = static_cast<double>(mean[i]);
    const double ls = static_cast<double>(log_std[i]);
    const double var = std::exp(2.0 * ls);
    acc += 0.5 * (mu * mu + var - 1.0 - 2.0 * ls);
  }
  return acc;
}

// KL( N(mu0, s0^2) || N(mu1, s1^2) ) for diagonal Gaussians.
template <class Real>
double kl_diag_gaussians(std::span<const Real> mu0, std::span<const Real> ls0,
                         std::span<const Real> mu1, std::span<const Real> ls1) {
  if (mu0.size() != ls0.size() || mu0.size() != mu1.size() || mu0.size() != ls1.size()) {
    throw std::invalid_argument("kl: size mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < mu0.size(); ++i) {
    const double a0 = static_cast<double>(ls0[i]);
    const double a1 = static_cast<double>(ls1[i]);
    const double d = static_cast<double>(mu0[i]) - static_cast<double>(mu1[i]);
    const double v0 = std::exp(2.0 * a0);
    const double v1 = std::exp(2.0 * a1);
    acc += a1 - a0 + (v0 + d * d) / (2.0 * v1) - 0.5;
  }
  return acc;
}

// log N(x; 0, I)
template <class Real>
double standard_normal_log_density(std::span<const Real> x) {
  double ss = 0.0;
  for (const Real v : x) ss += static_cast<double>(v) * static_cast<double>(v);
  return -0.5 * ss - 0.5 * static_cast<double>(x.size()) * kLog2Pi;
}

// log N(x; mean, diag(exp(ls)^2))
template <class Real>
double gaussian_log_density(std::span<const Real> x, std::span<const Real> mean,
                            std::span<const Real> log_std) {
  double acc = -0.5 * static_cast<double>(x.size()) * kLog2Pi;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double ls = static_cast<double>(log_std[i]);
    const double d = (static_cast<double>(x[i]) - static_cast<double>(mean[i])) / std::exp(ls);
    acc += -0.5 * d * d - ls;
  }
  return acc;
}

}  // namespace flap::core
