#pragma once

#include <stdexcept>
#include <string>

#include "flap/data/trajectory.hpp"

namespace flap::data {

class format_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetHeader {
  int version = 1;
  int obs_dim = 0;
  int action_dim = 0;
  std::size_t n_records = 0;
};

// File layout: one text manifest line
//   FLAPDS <version> <obs_dim> <action_dim> <n_records>\n
// followed by binary records of little-endian fields:
//   u32 scene_id, u32 flags, u32 L,
//   (L+1)*obs_dim f32 observations, L*action_dim f32 actions,
//   u32 CRC32 over the record bytes above.
// Round trips are bit-exact; corruption is reported with the record index.
void save_dataset(const TrajectoryBuffer& trajs, const std::string& path, int obs_dim,
                  int action_dim);

DatasetHeader peek_dataset_header(const std::string& path);

TrajectoryBuffer load_dataset(const std::string& path, DatasetHeader* header = nullptr);

}  // namespace flap::data
