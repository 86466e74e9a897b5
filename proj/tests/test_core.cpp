#include <doctest.h>

#include <cmath>

#include "flap/core/adam.hpp"
#include "flap/core/batch_grad.hpp"
#include "flap/core/gaussian.hpp"
#include "flap/core/linalg.hpp"
#include "flap/core/nets.hpp"
#include "flap/core/parallel.hpp"
#include "flap/core/rng.hpp"
#include "flap/core/tape.hpp"
#include "oracles.hpp"

using namespace flap;

TEST_SUITE_BEGIN("core");

TEST_CASE("rng: deterministic and child streams independent") {
  core::Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  core::Rng parent(7);
  core::Rng c1 = parent.child("stream");
  core::Rng c1_again = parent.child("stream");
  core::Rng c2 = parent.child("other");
  CHECK(c1.next_u64() == c1_again.next_u64());
  CHECK(c1.next_u64() != c2.next_u64());

  // creating children does not perturb the parent's own stream
  core::Rng p1(9), p2(9);
  (void)p1.child("x");
  CHECK(p1.next_u64() == p2.next_u64());
}

TEST_CASE("rng: normal moments") {
  core::Rng rng(3);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum2 += x * x;
  }
  CHECK(std::fabs(sum / n) < 0.01);
  CHECK(std::fabs(sum2 / n - 1.0) < 0.02);
}

TEST_CASE("rng: uniform_index bounds") {
  core::Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    CHECK(rng.uniform_index(7) < 7);
  }
}

TEST_CASE("partition_blocks covers the range in order") {
  const auto blocks = core::partition_blocks(10, 4);
  REQUIRE(blocks.size() == 4);
  std::size_t at = 0;
  for (const auto& b : blocks) {
    CHECK(b.begin == at);
    at = b.end;
  }
  CHECK(at == 10);
  CHECK(core::partition_blocks(3, 8).size() == 3);
  CHECK(core::partition_blocks(0, 8).empty());
}

TEST_CASE("linalg: inverse and conditioning of scene mixes") {
  core::Rng rng(11);
  const core::MatD m = core::random_scaled_orthogonal(16, rng, 0.5, 2.0);
  const core::MatD inv = core::invert(m);
  std::vector<double> x(16);
  for (auto& v : x) v = rng.uniform(-1, 1);
  const auto y = core::matvec(m, x);
  const auto back = core::matvec(inv, y);
  for (int i = 0; i < 16; ++i) CHECK(std::fabs(back[i] - x[i]) < 1e-9);

  // rows are scaled orthonormal: row norms bound the singular values
  double lo = 1e9, hi = 0.0;
  for (int r = 0; r < 16; ++r) {
    double n2 = 0.0;
    for (int c = 0; c < 16; ++c) n2 += m.at(r, c) * m.at(r, c);
    lo = std::min(lo, std::sqrt(n2));
    hi = std::max(hi, std::sqrt(n2));
  }
  CHECK(hi / lo <= 4.0 + 1e-9);
}

namespace {

// Exercises every tape op in one graph; double precision for the oracle.
core::Tape<double>::Var composite_graph(core::Tape<double>& t, int pbh,
                                        const std::vector<double>& x0) {
  auto x = t.leaf(x0);
  auto y = t.affine(pbh, 0, 1, x);  // W x + b
  auto r = t.relu(y);
  auto th = t.tanh_(t.scale(y, 0.3));
  auto e = t.exp_(t.clamp(y, -1.5, 1.2));
  auto lg = t.log_(t.add_const(t.square(y), 1.0));
  auto sq = t.sqrt_(t.add_const(t.square(th), 0.5));
  auto mixed = t.add(t.mul(r, e), t.sub(lg, sq));
  auto cat = t.concat(mixed, th);
  auto cat3 = t.concat(t.param(pbh, 2), r, th);
  auto s1 = t.sum(cat);
  auto s2 = t.dot(mixed, th);
  auto s3 = t.sum(t.square(cat3));
  auto m = t.min2(s1, s2);
  auto dt = t.sum(t.detach(mixed));
  return t.add(t.add(m, t.scale(s3, 0.25)), t.add(s2, dt));
}

}  // namespace

TEST_CASE("tape: gradients of the composite graph match finite differences") {
  core::Rng rng(17);
  core::ParamBlock<double> pb("test");
  pb.add("w", 5, 4);
  pb.add("b", 5, 1);
  pb.add("free", 5, 1);
  for (std::size_t i = 0; i < pb.size(); ++i) pb.data()[i] = rng.normal() * 0.7;
  std::vector<double> x0(4);
  for (auto& v : x0) v = rng.normal();

  std::vector<double> grad(pb.size(), 0.0);
  core::Tape<double> tape;
  const int h = tape.bind(pb, grad.data());
  tape.backward(composite_graph(tape, h, x0));

  const auto fd = test::finite_difference_grad(pb, [&]() {
    core::Tape<double> tt;
    const int th = tt.bind(pb, nullptr);
    return tt.scalar(composite_graph(tt, th, x0));
  });
  CHECK(test::max_rel_error(grad, fd) < 1e-6);
}

TEST_CASE("nets: tape forward equals plain forward bitwise") {
  core::Rng rng(23);
  core::GaussianNet<float> g("g", 6, 16, 3, -5.0f, 2.0f);
  g.init(rng.child("g"));
  std::vector<float> x(6);
  for (auto& v : x) v = static_cast<float>(rng.normal());

  core::Tape<float> t;
  const int h = t.bind(g.params(), nullptr);
  const auto out = g.forward(t, h, t.leaf(x));
  std::vector<float> mean(3), ls(3);
  g.forward_plain(x, mean, ls);
  for (int i = 0; i < 3; ++i) {
    CHECK(t.value(out.mean)[static_cast<std::size_t>(i)] == mean[static_cast<std::size_t>(i)]);
    CHECK(t.value(out.log_std)[static_cast<std::size_t>(i)] == ls[static_cast<std::size_t>(i)]);
  }

  core::ScalarNet<float> s("s", 6, 16);
  s.init(rng.child("s"));
  core::Tape<float> t2;
  const int h2 = t2.bind(s.params(), nullptr);
  const auto v = s.forward(t2, h2, t2.leaf(x));
  CHECK(t2.scalar(v) == s.forward_plain(x));
}

TEST_CASE("batch_grad: serial and parallel paths agree bitwise") {
  core::Rng rng(31);
  core::GaussianNet<float> g("g", 4, 8, 2, -5.0f, 2.0f);
  g.init(rng);
  std::vector<std::vector<float>> xs(37);
  for (auto& x : xs) {
    x.resize(4);
    for (auto& v : x) v = static_cast<float>(rng.normal());
  }

  auto run = [&](bool parallel) {
    std::vector<float> grad;
    std::vector<core::GradTarget<float>> targets = {{&g.params(), &grad}};
    const double loss = core::batch_mean_loss_grad<float>(
        xs.size(), targets, parallel,
        [&](core::Tape<float>& t, const std::vector<int>& h, std::size_t i) {
          auto out = g.forward(t, h[0], t.leaf(xs[i]));
          return t.add(t.sum(t.square(out.mean)), t.sum(t.exp_(out.log_std)));
        });
    return std::make_pair(loss, grad);
  };
  const auto [loss_s, grad_s] = run(false);
  const auto [loss_p, grad_p] = run(true);
  CHECK(loss_s == loss_p);
  REQUIRE(grad_s.size() == grad_p.size());
  for (std::size_t i = 0; i < grad_s.size(); ++i) CHECK(grad_s[i] == grad_p[i]);
}

TEST_CASE("adam: minimizes a quadratic") {
  core::ParamBlock<float> pb("p");
  pb.add("x", 4, 1);
  auto x = pb.values(0);
  x[0] = 2.0f;
  x[1] = -3.0f;
  x[2] = 0.5f;
  x[3] = 1.0f;
  core::Adam<float> opt(pb.size(), 0.05f);
  std::vector<float> grad(4);
  for (int step = 0; step < 500; ++step) {
    for (int i = 0; i < 4; ++i) grad[static_cast<std::size_t>(i)] = 2.0f * x[static_cast<std::size_t>(i)];
    opt.step(pb.flat(), grad);
  }
  for (int i = 0; i < 4; ++i) CHECK(std::fabs(x[static_cast<std::size_t>(i)]) < 1e-3);
}

TEST_CASE("gaussian: closed-form helpers") {
  std::vector<double> mu{1.0}, ls{0.0}, mu0{0.0}, ls0{0.0};
  CHECK(core::kl_to_standard_normal<double>(mu, ls) == doctest::Approx(0.5));
  CHECK(core::kl_diag_gaussians<double>(mu, ls, mu0, ls0) == doctest::Approx(0.5));
  std::vector<double> zero{0.0, 0.0};
  CHECK(core::standard_normal_log_density<double>(zero) ==
        doctest::Approx(-std::log(2.0 * 3.14159265358979323846)));
}

TEST_SUITE_END();
