// Shared independent oracles for the test suites: central finite differences
// over ParamBlock entries and Monte-Carlo estimates for the Gaussian KLs.
// These must stay independent of the implementation paths they check.
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "flap/core/params.hpp"
#include "flap/core/rng.hpp"

namespace flap::test {

// Central finite difference d(loss)/d(theta_i) for every parameter in the
// block; loss_fn must re-evaluate the full loss from current parameters.
inline std::vector<double> finite_difference_grad(core::ParamBlock<double>& pb,
                                                  const std::function<double()>& loss_fn,
                                                  double h = 1e-5) {
  std::vector<double> grad(pb.size());
  double* theta = pb.data();
  for (std::size_t i = 0; i < pb.size(); ++i) {
    const double orig = theta[i];
    theta[i] = orig + h;
    const double up = loss_fn();
    theta[i] = orig - h;
    const double down = loss_fn();
    theta[i] = orig;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

// Largest relative error between analytic and finite-difference gradients,
// with an absolute floor so near-zero entries do not blow up the ratio.
inline double max_rel_error(const std::vector<double>& analytic,
                            const std::vector<double>& fd, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::fabs(analytic[i]), std::fabs(fd[i]), floor});
    worst = std::max(worst, std::fabs(analytic[i] - fd[i]) / denom);
  }
  return worst;
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// E_x[f(x)] with x_i ~ N(mean_i, exp(ls_i)^2), sample-mean and its standard
// error; the generic workhorse behind the KL cross-checks.
inline MonteCarloEstimate mc_expectation_gaussian(
    const std::vector<double>& mean, const std::vector<double>& log_std, std::size_t n_samples,
    core::Rng& rng, const std::function<double(const std::vector<double>&)>& f) {
  std::vector<double> x(mean.size());
  double acc = 0.0, acc2 = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = mean[i] + std::exp(log_std[i]) * rng.normal();
    }
    const double v = f(x);
    acc += v;
    acc2 += v * v;
  }
  MonteCarloEstimate est;
  est.mean = acc / static_cast<double>(n_samples);
  const double var = acc2 / static_cast<double>(n_samples) - est.mean * est.mean;
  est.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(n_samples));
  return est;
}

// KL(N(mu0, s0) || N(mu1, s1)) as a Monte-Carlo estimate of the log ratio.
inline MonteCarloEstimate mc_kl_diag_gaussians(const std::vector<double>& mu0,
                                               const std::vector<double>& ls0,
                                               const std::vector<double>& mu1,
                                               const std::vector<double>& ls1,
                                               std::size_t n_samples, core::Rng& rng) {
  auto log_density = [](const std::vector<double>& x, const std::vector<double>& mu,
                        const std::vector<double>& ls) {
    double acc = -0.5 * static_cast<double>(x.size()) * std::log(2.0 * 3.14159265358979323846);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = (x[i] - mu[i]) / std::exp(ls[i]);
      acc += -0.5 * d * d - ls[i];
    }
    return acc;
  };
  return mc_expectation_gaussian(mu0, ls0, n_samples, rng, [&](const std::vector<double>& x) {
    return log_density(x, mu0, ls0) - log_density(x, mu1, ls1);
  });
}

}  // namespace flap::test
