#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "flap/core/params.hpp"
#include "flap/core/rng.hpp"
#include "flap/core/tape.hpp"

namespace flap::core {

// Plain forward kernels shared by the tape and inference paths. Keeping one
// loop order makes tape forward and plain forward bitwise identical.
template <class Real>
void affine_fwd(std::span<const Real> W, std::span<const Real> b, std::span<const Real> x,
                std::span<Real> y) {
  const int out = static_cast<int>(b.size());
  const int in = static_cast<int>(x.size());
  for (int r = 0; r < out; ++r) {
    Real acc = b[static_cast<std::size_t>(r)];
    const Real* wr = W.data() + static_cast<std::size_t>(r) * in;
    for (int c = 0; c < in; ++c) acc += wr[c] * x[static_cast<std::size_t>(c)];
    y[static_cast<std::size_t>(r)] = acc;
  }
}

template <class Real>
void relu_inplace(std::span<Real> x) {
  for (Real& v : x) v = v > Real(0) ? v : Real(0);
}

template <class Real>
Real clamp_val(Real x, Real lo, Real hi) {
  return x < lo ? lo : (x > hi ? hi : x);
}

template <class Real>
struct MlpScratch {
  std::vector<Real> h0, h1;
};

// Two ReLU hidden layers with mean / log-std heads; the building block for
// the state encoder and both CVAE heads. log_std is clamped on output.
template <class Real>
class GaussianNet {
 public:
  GaussianNet(std::string name, int in_dim, int hidden, int out_dim, Real log_std_lo,
              Real log_std_hi)
      : pb_(std::move(name)), in_(in_dim), hidden_(hidden), out_(out_dim), ls_lo_(log_std_lo),
        ls_hi_(log_std_hi) {
    l0w_ = pb_.add("l0.w", hidden, in_dim);
    l0b_ = pb_.add("l0.b", hidden, 1);
    l1w_ = pb_.add("l1.w", hidden, hidden);
    l1b_ = pb_.add("l1.b", hidden, 1);
    muw_ = pb_.add("mean.w", out_dim, hidden);
    mub_ = pb_.add("mean.b", out_dim, 1);
    lsw_ = pb_.add("log_std.w", out_dim, hidden);
    lsb_ = pb_.add("log_std.b", out_dim, 1);
  }

  void init(Rng rng) {
    pb_.init_he(l0w_, rng);
    pb_.init_he(l1w_, rng);
    pb_.init_normal(muw_, rng, 0.01);
    pb_.init_normal(lsw_, rng, 0.01);
  }

  struct TapeOut {
    typename Tape<Real>::Var mean;
    typename Tape<Real>::Var log_std;
  };

  TapeOut forward(Tape<Real>& t, int pbh, typename Tape<Real>::Var x) const {
    auto h0 = t.relu(t.affine(pbh, l0w_, l0b_, x));
    auto h1 = t.relu(t.affine(pbh, l1w_, l1b_, h0));
    auto mu = t.affine(pbh, muw_, mub_, h1);
    auto ls = t.clamp(t.affine(pbh, lsw_, lsb_, h1), ls_lo_, ls_hi_);
    return {mu, ls};
  }

  void forward_plain(std::span<const Real> x, std::span<Real> mean, std::span<Real> log_std,
                     MlpScratch<Real>& s) const {
    s.h0.resize(static_cast<std::size_t>(hidden_));
    s.h1.resize(static_cast<std::size_t>(hidden_));
    affine_fwd<Real>(pb_.values(l0w_), pb_.values(l0b_), x, s.h0);
    relu_inplace<Real>(s.h0);
    affine_fwd<Real>(pb_.values(l1w_), pb_.values(l1b_), s.h0, s.h1);
    relu_inplace<Real>(s.h1);
    affine_fwd<Real>(pb_.values(muw_), pb_.values(mub_), s.h1, mean);
    affine_fwd<Real>(pb_.values(lsw_), pb_.values(lsb_), s.h1, log_std);
    for (Real& v : log_std) v = clamp_val(v, ls_lo_, ls_hi_);
  }

  void forward_plain(std::span<const Real> x, std::span<Real> mean, std::span<Real> log_std) const {
    MlpScratch<Real> s;
    forward_plain(x, mean, log_std, s);
  }

  ParamBlock<Real>& params() { return pb_; }
  const ParamBlock<Real>& params() const { return pb_; }
  int in_dim() const { return in_; }
  int out_dim() const { return out_; }
  Real log_std_lo() const { return ls_lo_; }
  Real log_std_hi() const { return ls_hi_; }

 private:
  ParamBlock<Real> pb_;
  int l0w_, l0b_, l1w_, l1b_, muw_, mub_, lsw_, lsb_;
  int in_, hidden_, out_;
  Real ls_lo_, ls_hi_;
};

// Two ReLU hidden layers with a single linear output (Q and V heads).
template <class Real>
class ScalarNet {
 public:
  ScalarNet(std::string name, int in_dim, int hidden)
      : pb_(std::move(name)), in_(in_dim), hidden_(hidden) {
    l0w_ = pb_.add("l0.w", hidden, in_dim);
    l0b_ = pb_.add("l0.b", hidden, 1);
    l1w_ = pb_.add("l1.w", hidden, hidden);
    l1b_ = pb_.add("l1.b", hidden, 1);
    hw_ = pb_.add("head.w", 1, hidden);
    hb_ = pb_.add("head.b", 1, 1);
  }

  void init(Rng rng) {
    pb_.init_he(l0w_, rng);
    pb_.init_he(l1w_, rng);
    pb_.init_normal(hw_, rng, 0.01);
  }

  typename Tape<Real>::Var forward(Tape<Real>& t, int pbh, typename Tape<Real>::Var x) const {
    auto h0 = t.relu(t.affine(pbh, l0w_, l0b_, x));
    auto h1 = t.relu(t.affine(pbh, l1w_, l1b_, h0));
    return t.affine(pbh, hw_, hb_, h1);
  }

  Real forward_plain(std::span<const Real> x, MlpScratch<Real>& s) const {
    s.h0.resize(static_cast<std::size_t>(hidden_));
    s.h1.resize(static_cast<std::size_t>(hidden_));
    affine_fwd<Real>(pb_.values(l0w_), pb_.values(l0b_), x, s.h0);
    relu_inplace<Real>(s.h0);
    affine_fwd<Real>(pb_.values(l1w_), pb_.values(l1b_), s.h0, s.h1);
    relu_inplace<Real>(s.h1);
    Real y;
    affine_fwd<Real>(pb_.values(hw_), pb_.values(hb_), s.h1, std::span<Real>(&y, 1));
    return y;
  }

  Real forward_plain(std::span<const Real> x) const {
    MlpScratch<Real> s;
    return forward_plain(x, s);
  }

  ParamBlock<Real>& params() { return pb_; }
  const ParamBlock<Real>& params() const { return pb_; }
  int in_dim() const { return in_; }

 private:
  ParamBlock<Real> pb_;
  int l0w_, l0b_, l1w_, l1b_, hw_, hb_;
  int in_, hidden_;
};

// Gaussian policy: MLP action mean plus a state-independent learned log-std
// vector, clamped like the encoder heads.
template <class Real>
class PolicyNet {
 public:
  PolicyNet(std::string name, int in_dim, int hidden, int action_dim, Real log_std_lo,
            Real log_std_hi, Real log_std_init)
      : pb_(std::move(name)), in_(in_dim), hidden_(hidden), act_(action_dim), ls_lo_(log_std_lo),
        ls_hi_(log_std_hi) {
    l0w_ = pb_.add("l0.w", hidden, in_dim);
    l0b_ = pb_.add("l0.b", hidden, 1);
    l1w_ = pb_.add("l1.w", hidden, hidden);
    l1b_ = pb_.add("l1.b", hidden, 1);
    muw_ = pb_.add("mean.w", action_dim, hidden);
    mub_ = pb_.add("mean.b", action_dim, 1);
    ls_ = pb_.add("log_std", action_dim, 1);
    pb_.fill(ls_, log_std_init);
  }

  void init(Rng rng) {
    pb_.init_he(l0w_, rng);
    pb_.init_he(l1w_, rng);
    pb_.init_normal(muw_, rng, 0.01);
  }

  struct TapeOut {
    typename Tape<Real>::Var mean;
    typename Tape<Real>::Var log_std;
  };

  TapeOut forward(Tape<Real>& t, int pbh, typename Tape<Real>::Var x) const {
    auto h0 = t.relu(t.affine(pbh, l0w_, l0b_, x));
    auto h1 = t.relu(t.affine(pbh, l1w_, l1b_, h0));
    auto mu = t.affine(pbh, muw_, mub_, h1);
    auto ls = t.clamp(t.param(pbh, ls_), ls_lo_, ls_hi_);
    return {mu, ls};
  }

  void forward_plain(std::span<const Real> x, std::span<Real> mean, std::span<Real> log_std,
                     MlpScratch<Real>& s) const {
    s.h0.resize(static_cast<std::size_t>(hidden_));
    s.h1.resize(static_cast<std::size_t>(hidden_));
    affine_fwd<Real>(pb_.values(l0w_), pb_.values(l0b_), x, s.h0);
    relu_inplace<Real>(s.h0);
    affine_fwd<Real>(pb_.values(l1w_), pb_.values(l1b_), s.h0, s.h1);
    relu_inplace<Real>(s.h1);
    affine_fwd<Real>(pb_.values(muw_), pb_.values(mub_), s.h1, mean);
    const auto ls = pb_.values(ls_);
    for (std::size_t i = 0; i < log_std.size(); ++i) {
      log_std[i] = clamp_val(ls[i], ls_lo_, ls_hi_);
    }
  }

  ParamBlock<Real>& params() { return pb_; }
  const ParamBlock<Real>& params() const { return pb_; }
  int in_dim() const { return in_; }
  int action_dim() const { return act_; }

 private:
  ParamBlock<Real> pb_;
  int l0w_, l0b_, l1w_, l1b_, muw_, mub_, ls_;
  int in_, hidden_, act_;
  Real ls_lo_, ls_hi_;
};

}  // namespace flap::core
