#include "flap/experiment/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace flap::experiment {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const char* p) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(p[0])) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(p[1])) << 8) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(p[2])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(p[3])) << 24);
}

}  // namespace

void Checkpoint::add_block(const core::ParamBlock<float>& pb) {
  for (const auto& t : pb.tensors()) {
    Entry e;
    e.name = pb.name() + "/" + t.name;
    e.rows = t.rows;
    e.cols = t.cols;
    const float* data = pb.data() + t.offset;
    e.values.assign(data, data + t.size());
    entries.push_back(std::move(e));
  }
}

void Checkpoint::add_scalar(const std::string& name, double value) {
  Entry e;
  e.name = name;
  e.rows = 1;
  e.cols = 1;
  e.values = {static_cast<float>(value)};
  entries.push_back(std::move(e));
}

void Checkpoint::restore_block(core::ParamBlock<float>& pb) const {
  for (const auto& t : pb.tensors()) {
    const std::string name = pb.name() + "/" + t.name;
    const Entry* found = nullptr;
    for (const auto& e : entries) {
      if (e.name == name) {
        found = &e;
        break;
      }
    }
    if (found == nullptr) throw checkpoint_error("checkpoint: missing tensor " + name);
    if (found->rows != t.rows || found->cols != t.cols) {
      throw checkpoint_error("checkpoint: shape mismatch for " + name);
    }
    auto dst = pb.values(static_cast<int>(&t - pb.tensors().data()));
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = found->values[i];
  }
}

double Checkpoint::scalar(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) {
      if (e.values.size() != 1) throw checkpoint_error("checkpoint: " + name + " is not scalar");
      return static_cast<double>(e.values[0]);
    }
  }
  throw checkpoint_error("checkpoint: missing scalar " + name);
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return true;
  }
  return false;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw checkpoint_error("checkpoint: cannot open " + path + " for writing");
  out << "FLAPCKPT 1 " << ckpt.config_hash << " " << ckpt.entries.size() << "\n";
  std::string payload;
  for (const auto& e : ckpt.entries) {
    out << e.name << " " << e.rows << " " << e.cols << "\n";
    payload.clear();
    for (float f : e.values) put_u32(payload, std::bit_cast<std::uint32_t>(f));
    const auto crc = static_cast<std::uint32_t>(crc32(
        0L, reinterpret_cast<const Bytef*>(payload.data()), static_cast<uInt>(payload.size())));
    put_u32(payload, crc);
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  }
  if (!out) throw checkpoint_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw checkpoint_error("checkpoint: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw checkpoint_error("checkpoint: missing manifest");
  std::istringstream ls(line);
  std::string magic;
  int version = 0;
  std::uint64_t hash = 0;
  std::size_t n = 0;
  ls >> magic >> version >> hash >> n;
  if (!ls || magic != "FLAPCKPT") throw checkpoint_error("checkpoint: bad manifest in " + path);
  if (version != 1) {
    throw checkpoint_error("checkpoint: unsupported version " + std::to_string(version));
  }

  Checkpoint ckpt;
  ckpt.config_hash = static_cast<std::uint32_t>(hash);
  ckpt.entries.reserve(n);
  std::string payload;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw checkpoint_error("checkpoint: truncated tensor header");
    std::istringstream hs(line);
    Checkpoint::Entry e;
    hs >> e.name >> e.rows >> e.cols;
    if (!hs || e.rows <= 0 || e.cols <= 0) {
      throw checkpoint_error("checkpoint: bad tensor header for entry " + std::to_string(i));
    }
    const std::size_t bytes = static_cast<std::size_t>(e.rows) * e.cols * 4;
    payload.resize(bytes);
    if (!in.read(payload.data(), static_cast<std::streamsize>(bytes))) {
      throw checkpoint_error("checkpoint: truncated tensor " + e.name);
    }
    char crc_bytes[4];
    if (!in.read(crc_bytes, 4)) throw checkpoint_error("checkpoint: missing CRC for " + e.name);
    const auto crc = static_cast<std::uint32_t>(crc32(
        0L, reinterpret_cast<const Bytef*>(payload.data()), static_cast<uInt>(payload.size())));
    if (crc != get_u32(crc_bytes)) {
      throw checkpoint_error("checkpoint: checksum failure in tensor " + e.name);
    }
    e.values.resize(static_cast<std::size_t>(e.rows) * e.cols);
    for (std::size_t j = 0; j < e.values.size(); ++j) {
      e.values[j] = std::bit_cast<float>(get_u32(payload.data() + j * 4));
    }
    ckpt.entries.push_back(std::move(e));
  }
  return ckpt;
}

}  // namespace flap::experiment
