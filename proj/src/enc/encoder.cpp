#include "flap/enc/encoder.hpp"

#include <stdexcept>

namespace flap::enc {

std::vector<float> sample_latent(const GaussianLatent& gl, std::span<const float> noise) {
  if (noise.size() != gl.mean.size()) throw std::invalid_argument("sample_latent: noise dim");
  std::vector<float> z(gl.mean.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = gl.mean[i] + std::exp(gl.log_std[i]) * noise[i];
  }
  return z;
}

GaussianLatent StateEncoder::encode(std::span<const float> obs) const {
  if (static_cast<int>(obs.size()) != cfg_.obs_dim) {
    throw std::invalid_argument("encode: observation dim mismatch");
  }
  for (float v : obs) {
    if (!std::isfinite(v)) throw std::invalid_argument("encode: non-finite observation");
  }
  GaussianLatent gl;
  gl.mean.resize(static_cast<std::size_t>(cfg_.z_dim));
  gl.log_std.resize(static_cast<std::size_t>(cfg_.z_dim));
  net_.forward_plain(obs, gl.mean, gl.log_std);
  return gl;
}

std::vector<float> StateEncoder::encode_mean(std::span<const float> obs) const {
  return encode(obs).mean;
}

std::vector<float> StateEncoder::encode_sample(std::span<const float> obs, core::Rng& rng) const {
  const GaussianLatent gl = encode(obs);
  std::vector<float> noise(gl.mean.size());
  for (auto& n : noise) n = static_cast<float>(rng.normal());
  return sample_latent(gl, noise);
}

}  // namespace flap::enc
