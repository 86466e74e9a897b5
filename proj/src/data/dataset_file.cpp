#include "flap/data/dataset_file.hpp"

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace flap::data {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

std::uint32_t get_u32(const char* p) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(p[0])) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(p[1])) << 8) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(p[2])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(p[3])) << 24);
}

float get_f32(const char* p) { return std::bit_cast<float>(get_u32(p)); }

std::uint32_t crc_of(const std::string& bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

constexpr std::uint32_t kIncompleteFlag = 1u;

}  // namespace

void save_dataset(const TrajectoryBuffer& trajs, const std::string& path, int obs_dim,
                  int action_dim) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path);

  out << "FLAPDS 1 " << obs_dim << " " << action_dim << " " << trajs.size() << "\n";

  std::string rec;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const Trajectory& t = trajs[i];
    validate_trajectory(t);
    rec.clear();
    put_u32(rec, static_cast<std::uint32_t>(t.scene_id));
    put_u32(rec, t.incomplete ? kIncompleteFlag : 0u);
    put_u32(rec, static_cast<std::uint32_t>(t.length()));
    for (const auto& obs : t.observations) {
      if (static_cast<int>(obs.size()) != obs_dim) {
        throw std::invalid_argument("save_dataset: observation dim mismatch in record " +
                                    std::to_string(i));
      }
      for (float f : obs) put_f32(rec, f);
    }
    for (const auto& act : t.actions) {
      if (static_cast<int>(act.size()) != action_dim) {
        throw std::invalid_argument("save_dataset: action dim mismatch in record " +
                                    std::to_string(i));
      }
      for (float f : act) put_f32(rec, f);
    }
    const std::uint32_t crc = crc_of(rec);
    put_u32(rec, crc);
    out.write(rec.data(), static_cast<std::streamsize>(rec.size()));
  }
  if (!out) throw std::runtime_error("save_dataset: write failed for " + path);
}

DatasetHeader peek_dataset_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw format_error("load_dataset: missing manifest line");
  std::istringstream ls(line);
  std::string magic;
  DatasetHeader h;
  ls >> magic >> h.version >> h.obs_dim >> h.action_dim >> h.n_records;
  if (!ls || magic != "FLAPDS") throw format_error("load_dataset: bad manifest line");
  if (h.version != 1) {
    throw format_error("load_dataset: unsupported version " + std::to_string(h.version));
  }
  if (h.obs_dim <= 0 || h.action_dim <= 0) throw format_error("load_dataset: bad dims");
  return h;
}

TrajectoryBuffer load_dataset(const std::string& path, DatasetHeader* header) {
  const DatasetHeader h = peek_dataset_header(path);
  if (header != nullptr) *header = h;

  std::ifstream in(path, std::ios::binary);
  std::string line;
  std::getline(in, line);  // manifest, already validated

  TrajectoryBuffer trajs;
  trajs.reserve(h.n_records);
  std::string buf;
  for (std::size_t rec = 0; rec < h.n_records; ++rec) {
    const auto fail = [rec](const std::string& what) {
      throw format_error("load_dataset: record " + std::to_string(rec) + ": " + what);
    };

    char head[12];
    if (!in.read(head, 12)) fail("truncated header");
    const std::uint32_t scene_id = get_u32(head);
    const std::uint32_t flags = get_u32(head + 4);
    const std::uint32_t L = get_u32(head + 8);
    if (L == 0 || L > (1u << 24)) fail("implausible length");

    const std::size_t payload =
        (static_cast<std::size_t>(L) + 1) * h.obs_dim * 4 + static_cast<std::size_t>(L) * h.action_dim * 4;
    buf.resize(12 + payload);
    std::memcpy(buf.data(), head, 12);
    if (!in.read(buf.data() + 12, static_cast<std::streamsize>(payload))) fail("truncated blob");

    char crc_bytes[4];
    if (!in.read(crc_bytes, 4)) fail("missing checksum");
    if (get_u32(crc_bytes) != crc_of(buf)) fail("checksum failure");

    Trajectory t;
    t.scene_id = static_cast<std::int32_t>(scene_id);
    t.incomplete = (flags & kIncompleteFlag) != 0;
    const char* p = buf.data() + 12;
    t.observations.resize(L + 1);
    for (auto& obs : t.observations) {
      obs.resize(static_cast<std::size_t>(h.obs_dim));
      for (int d = 0; d < h.obs_dim; ++d, p += 4) obs[static_cast<std::size_t>(d)] = get_f32(p);
    }
    t.actions.resize(L);
    for (auto& act : t.actions) {
      act.resize(static_cast<std::size_t>(h.action_dim));
      for (int d = 0; d < h.action_dim; ++d, p += 4) act[static_cast<std::size_t>(d)] = get_f32(p);
    }
    trajs.push_back(std::move(t));
  }
  return trajs;
}

}  // namespace flap::data
