#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "flap/core/parallel.hpp"
#include "flap/core/params.hpp"
#include "flap/core/tape.hpp"

namespace flap::core {

template <class Real>
struct GradTarget {
  const ParamBlock<Real>* pb = nullptr;
  std::vector<Real>* grad = nullptr;  // null: forward-only binding
};

// Mean loss and parameter gradients over a batch of independent per-sample
// graphs. The batch is split into kGradBlocks fixed blocks; each block
// accumulates into its own buffers which are then merged in block order, so
// the result is bitwise identical for any thread count, including the plain
// serial path used as the reference in tests.
//
// build(tape, handles, item) must construct the item's scalar loss; handles
// are the tape bindings in the same order as targets.
inline constexpr std::size_t kGradBlocks = 8;

template <class Real, class BuildFn>
double batch_mean_loss_grad(std::size_t n_items, std::span<const GradTarget<Real>> targets,
                            bool parallel, BuildFn&& build) {
  for (const auto& t : targets) {
    if (t.grad != nullptr) t.grad->assign(t.pb->size(), Real(0));
  }
  if (n_items == 0) return 0.0;

  const auto blocks = partition_blocks(n_items, kGradBlocks);
  const std::size_t nb = blocks.size();
  const Real inv_n = Real(1) / static_cast<Real>(n_items);

  std::vector<double> block_loss(nb, 0.0);
  std::vector<std::vector<std::vector<Real>>> block_grads(nb);

  for_each_block(nb, parallel, [&](std::size_t b) {
    Tape<Real> tape;
    auto& grads = block_grads[b];
    grads.resize(targets.size());
    std::vector<int> handles(targets.size());
    for (std::size_t t = 0; t < targets.size(); ++t) {
      Real* sink = nullptr;
      if (targets[t].grad != nullptr) {
        grads[t].assign(targets[t].pb->size(), Real(0));
        sink = grads[t].data();
      }
      handles[t] = tape.bind(*targets[t].pb, sink);
    }
    double loss = 0.0;
    for (std::size_t i = blocks[b].begin; i < blocks[b].end; ++i) {
      tape.reset();
      auto var = build(tape, handles, i);
      loss += static_cast<double>(tape.scalar(var));
      tape.backward(var, inv_n);
    }
    block_loss[b] = loss;
  });

  double total = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    total += block_loss[b];
    for (std::size_t t = 0; t < targets.size(); ++t) {
      if (targets[t].grad == nullptr) continue;
      auto& dst = *targets[t].grad;
      const auto& src = block_grads[b][t];
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
  return total / static_cast<double>(n_items);
}

}  // namespace flap::core
