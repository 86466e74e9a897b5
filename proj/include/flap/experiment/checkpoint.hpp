#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flap/core/params.hpp"

namespace flap::experiment {

class checkpoint_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Versioned named-parameter archive. Tensors are "<block>/<tensor>" named
// float32 arrays with per-tensor CRC32; scalars (calibration values) are
// stored as 1x1 tensors. load(save(x)) is bit-exact.
struct Checkpoint {
  std::uint32_t config_hash = 0;

  struct Entry {
    std::string name;
    std::int32_t rows = 0;
    std::int32_t cols = 0;
    std::vector<float> values;
  };
  std::vector<Entry> entries;

  void add_block(const core::ParamBlock<float>& pb);
  void add_scalar(const std::string& name, double value);

  // Restores a block's tensors by name; throws when a tensor is missing or
  // shaped differently.
  void restore_block(core::ParamBlock<float>& pb) const;
  double scalar(const std::string& name) const;
  bool has(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);

// Throws checkpoint_error on missing file, version mismatch or corruption.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace flap::experiment
