#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace flap::core {

// Adam with bias correction over a flat parameter array.
template <class Real>
class Adam {
 public:
  Adam(std::size_t n, Real lr, Real beta1 = Real(0.9), Real beta2 = Real(0.999),
       Real eps = Real(1e-8))
      : m_(n, Real(0)), v_(n, Real(0)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

  void step(std::span<Real> params, std::span<const Real> grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) {
      throw std::invalid_argument("Adam::step: size mismatch");
    }
    ++t_;
    const Real bc1 = Real(1) - static_cast<Real>(std::pow(static_cast<double>(b1_), t_));
    const Real bc2 = Real(1) - static_cast<Real>(std::pow(static_cast<double>(b2_), t_));
    for (std::size_t i = 0; i < m_.size(); ++i) {
      m_[i] = b1_ * m_[i] + (Real(1) - b1_) * grad[i];
      v_[i] = b2_ * v_[i] + (Real(1) - b2_) * grad[i] * grad[i];
      const Real mhat = m_[i] / bc1;
      const Real vhat = v_[i] / bc2;
      params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }

  void set_lr(Real lr) { lr_ = lr; }
  long steps() const { return t_; }

 private:
  std::vector<Real> m_, v_;
  long t_ = 0;
  Real lr_, b1_, b2_, eps_;
};

}  // namespace flap::core
