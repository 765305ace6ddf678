#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "a3ctp/rng.hpp"

namespace a3ctp {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a NaN or infinity shows up in an activation, loss or update.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline size_t shape_volume(const std::vector<size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const std::vector<size_t>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// Dense row-major array of doubles.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<size_t> shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(shape_volume(shape_), fill) {}

  Tensor(std::vector<size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_volume(shape_))
      throw ShapeError("Tensor: " + std::to_string(data_.size()) + " values for shape " +
                       shape_string(shape_));
  }

  const std::vector<size_t>& shape() const { return shape_; }
  size_t rank() const { return shape_.size(); }
  size_t size() const { return data_.size(); }
  size_t rows() const { return shape_.empty() ? 1 : shape_[0]; }
  size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }
  double& at(size_t r, size_t c) { return data_[r * cols() + c]; }
  double at(size_t r, size_t c) const { return data_[r * cols() + c]; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool operator==(const Tensor&) const = default;

 private:
  std::vector<size_t> shape_;
  std::vector<double> data_;
};

// Weights are stored [fan_out, fan_in]; bias is [fan_out].
struct Layer {
  std::string name;
  Tensor weights;
  Tensor bias;

  size_t fan_in() const { return weights.cols(); }
  size_t fan_out() const { return weights.rows(); }

  bool operator==(const Layer&) const = default;
};

// Ordered collection of named dense layers plus an update counter. Iteration
// order is insertion order, which is also the serialization order.
class ParamSet {
 public:
  ParamSet() = default;

  Layer& add_layer(std::string name, size_t fan_in, size_t fan_out) {
    if (find(name)) throw std::invalid_argument("ParamSet: duplicate layer '" + name + "'");
    layers_.push_back(Layer{std::move(name), Tensor({fan_out, fan_in}), Tensor({fan_out})});
    return layers_.back();
  }

  void add_layer(Layer layer) {
    if (find(layer.name)) throw std::invalid_argument("ParamSet: duplicate layer '" + layer.name + "'");
    if (layer.weights.rank() != 2 || layer.bias.rank() != 1 ||
        layer.bias.size() != layer.weights.rows())
      throw ShapeError("ParamSet: layer '" + layer.name + "' has inconsistent shapes");
    layers_.push_back(std::move(layer));
  }

  size_t num_layers() const { return layers_.size(); }
  Layer& layer(size_t i) { return layers_.at(i); }
  const Layer& layer(size_t i) const { return layers_.at(i); }
  std::span<Layer> layers() { return layers_; }
  std::span<const Layer> layers() const { return layers_; }

  const Layer* find(std::string_view name) const {
    for (const auto& l : layers_)
      if (l.name == name) return &l;
    return nullptr;
  }

  size_t index_of(std::string_view name) const {
    for (size_t i = 0; i < layers_.size(); ++i)
      if (layers_[i].name == name) return i;
    throw std::out_of_range("ParamSet: no layer named '" + std::string(name) + "'");
  }

  size_t num_params() const {
    size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
  }

  uint64_t version() const { return version_; }
  void set_version(uint64_t v) { version_ = v; }
  void bump_version() { ++version_; }

  bool same_shape(const ParamSet& other) const {
    if (layers_.size() != other.layers_.size()) return false;
    for (size_t i = 0; i < layers_.size(); ++i) {
      if (layers_[i].name != other.layers_[i].name) return false;
      if (layers_[i].weights.shape() != other.layers_[i].weights.shape()) return false;
      if (layers_[i].bias.shape() != other.layers_[i].bias.shape()) return false;
    }
    return true;
  }

  void require_same_shape(const ParamSet& other, std::string_view what) const {
    if (!same_shape(other)) throw ShapeError(std::string(what) + ": parameter shapes differ");
  }

  ParamSet zeros_like() const {
    ParamSet out;
    for (const auto& l : layers_) out.add_layer(l.name, l.fan_in(), l.fan_out());
    return out;
  }

  // Uniform in +-1/sqrt(fan_in) for weights and biases.
  void init_uniform(Rng& rng) {
    for (auto& l : layers_) init_layer_uniform(l, rng);
  }

  static void init_layer_uniform(Layer& l, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.fan_in()));
    for (double& w : l.weights.values()) w = rng.uniform(-bound, bound);
    for (double& b : l.bias.values()) b = rng.uniform(-bound, bound);
  }

  // Visits every scalar in manifest order (weights then bias, layer by layer).
  template <class F>
  void for_each_value(F&& f) {
    for (auto& l : layers_) {
      for (double& v : l.weights.values()) f(v);
      for (double& v : l.bias.values()) f(v);
    }
  }
  template <class F>
  void for_each_value(F&& f) const {
    for (const auto& l : layers_) {
      for (double v : l.weights.values()) f(v);
      for (double v : l.bias.values()) f(v);
    }
  }

  // Flat access by manifest position; used by finite-difference checks.
  double& flat(size_t index) {
    for (auto& l : layers_) {
      if (index < l.weights.size()) return l.weights[index];
      index -= l.weights.size();
      if (index < l.bias.size()) return l.bias[index];
      index -= l.bias.size();
    }
    throw std::out_of_range("ParamSet::flat: index out of range");
  }
  double flat(size_t index) const { return const_cast<ParamSet*>(this)->flat(index); }

  double squared_norm() const {
    double s = 0.0;
    for_each_value([&](double v) { s += v * v; });
    return s;
  }

  void scale(double s) {
    for_each_value([&](double& v) { v *= s; });
  }

  void fill(double v) {
    for_each_value([&](double& x) { x = v; });
  }

  // this += s * other
  void add_scaled(const ParamSet& other, double s) {
    require_same_shape(other, "ParamSet::add_scaled");
    for (size_t i = 0; i < layers_.size(); ++i) {
      auto dw = layers_[i].weights.values();
      auto sw = other.layers_[i].weights.values();
      for (size_t k = 0; k < dw.size(); ++k) dw[k] += s * sw[k];
      auto db = layers_[i].bias.values();
      auto sb = other.layers_[i].bias.values();
      for (size_t k = 0; k < db.size(); ++k) db[k] += s * sb[k];
    }
  }

  bool all_finite() const {
    for (const auto& l : layers_)
      if (!l.weights.all_finite() || !l.bias.all_finite()) return false;
    return true;
  }

  // Entry equality, ignoring the version counter.
  bool same_values(const ParamSet& other) const { return layers_ == other.layers_; }

  bool operator==(const ParamSet&) const = default;

 private:
  std::vector<Layer> layers_;
  uint64_t version_ = 0;
};

}  // namespace a3ctp
