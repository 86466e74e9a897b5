#pragma once

#include <string>
#include <vector>

#include "flap/data/trajectory.hpp"
#include "flap/enc/encoder.hpp"
#include "flap/experiment/metrics.hpp"

namespace flap::experiment {

// Success-rate-vs-epoch curves, one per method, with +-1 sample-std shading
// across seeds. Plain hand-rolled SVG; plots are derived artifacts, the CSV
// stays the source of truth.
void plot_success_curves(const std::vector<MetricsRow>& rows, const std::string& svg_path);

// Encoded latent means for externally produced embeddings (one row per
// sampled observation: scene_id, t, z...).
void dump_latents(const data::TrajectoryBuffer& trajs, const enc::StateEncoder& encoder,
                  std::size_t n_samples, std::uint64_t seed, const std::string& csv_path);

}  // namespace flap::experiment
