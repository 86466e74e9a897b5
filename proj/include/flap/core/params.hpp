#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "flap/core/rng.hpp"

namespace flap::core {

// Named parameter tensors packed into one flat array. The flat layout keeps
// optimizer steps, Polyak averaging, freeze checks (byte compare), and
// checkpoint serialization trivial.
template <class Real>
class ParamBlock {
 public:
  struct Tensor {
    std::string name;
    std::int32_t rows = 0;
    std::int32_t cols = 0;
    std::size_t offset = 0;
    std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
  };

  explicit ParamBlock(std::string name) : name_(std::move(name)) {}

  // Rows x cols tensor; a vector is rows x 1. Must be called before any
  // pointer into data() is taken.
  int add(std::string name, int rows, int cols) {
    Tensor t;
    t.name = std::move(name);
    t.rows = rows;
    t.cols = cols;
    t.offset = data_.size();
    data_.resize(data_.size() + t.size(), Real(0));
    tensors_.push_back(std::move(t));
    return static_cast<int>(tensors_.size()) - 1;
  }

  std::span<Real> values(int t) {
    const Tensor& ts = tensors_.at(static_cast<std::size_t>(t));
    return {data_.data() + ts.offset, ts.size()};
  }
  std::span<const Real> values(int t) const {
    const Tensor& ts = tensors_.at(static_cast<std::size_t>(t));
    return {data_.data() + ts.offset, ts.size()};
  }

  const Tensor& tensor(int t) const { return tensors_.at(static_cast<std::size_t>(t)); }
  std::span<const Tensor> tensors() const { return tensors_; }

  std::size_t size() const { return data_.size(); }
  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  std::span<Real> flat() { return data_; }
  std::span<const Real> flat() const { return data_; }

  const std::string& name() const { return name_; }

  void init_normal(int t, Rng& rng, double stddev) {
    for (Real& v : values(t)) v = static_cast<Real>(rng.normal() * stddev);
  }

  // He initialization for layers followed by a rectifier.
  void init_he(int t, Rng& rng) {
    const Tensor& ts = tensor(t);
    init_normal(t, rng, std::sqrt(2.0 / static_cast<double>(ts.cols)));
  }

  void fill(int t, Real v) {
    for (Real& x : values(t)) x = v;
  }

  // Copies values from another block with identical layout (target networks).
  void copy_from(const ParamBlock& other) {
    if (other.size() != size()) throw std::invalid_argument("ParamBlock::copy_from: layout mismatch");
    data_ = other.data_;
  }

  // tgt <- (1 - rate) * tgt + rate * src
  void polyak_from(const ParamBlock& src, Real rate) {
    if (src.size() != size()) throw std::invalid_argument("ParamBlock::polyak_from: layout mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) {
      data_[i] = (Real(1) - rate) * data_[i] + rate * src.data_[i];
    }
  }

 private:
  std::string name_;
  std::vector<Tensor> tensors_;
  std::vector<Real> data_;
};

}  // namespace flap::core
