#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "a3ctp/tensor.hpp"

namespace a3ctp {

enum class Activation { identity, tanh, relu };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
  }
  return "?";
}

inline Activation parse_activation(std::string_view s) {
  if (s == "identity") return Activation::identity;
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  throw std::invalid_argument("unknown activation '" + std::string(s) + "'");
}

// `hidden` is applied after every layer in the range except the last one,
// which is activated only when `activate_output` is set.
struct ActivationSpec {
  Activation hidden = Activation::tanh;
  bool activate_output = false;
};

// Contiguous run of layers inside a ParamSet treated as one chain.
struct LayerRange {
  size_t first = 0;
  size_t count = std::numeric_limits<size_t>::max();

  size_t resolved_count(const ParamSet& p) const {
    if (first > p.num_layers()) throw std::out_of_range("LayerRange: first past end");
    return std::min(count, p.num_layers() - first);
  }
};

struct MlpCache {
  uint64_t params_version = 0;
  std::vector<std::vector<size_t>> weight_shapes;
  LayerRange range;
  ActivationSpec spec;
  // inputs[k] is the input of layer k in the range; outputs[k] its activated output.
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> outputs;
};

struct MlpForward {
  std::vector<double> output;
  MlpCache cache;
};

namespace detail {

inline double activate(Activation a, double x) {
  switch (a) {
    case Activation::identity: return x;
    case Activation::tanh: return std::tanh(x);
    case Activation::relu: return x > 0.0 ? x : 0.0;
  }
  return x;
}

// Derivative expressed through the activated output y.
inline double activation_slope(Activation a, double y) {
  switch (a) {
    case Activation::identity: return 1.0;
    case Activation::tanh: return 1.0 - y * y;
    case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

inline Activation activation_for(const ActivationSpec& spec, size_t k, size_t count) {
  if (k + 1 < count) return spec.hidden;
  return spec.activate_output ? spec.hidden : Activation::identity;
}

}  // namespace detail

inline MlpForward forward_mlp(const ParamSet& params, std::span<const double> input,
                              ActivationSpec spec = {}, LayerRange range = {}) {
  const size_t count = range.resolved_count(params);
  if (count == 0) throw std::invalid_argument("forward_mlp: empty layer range");

  MlpForward fwd;
  MlpCache& cache = fwd.cache;
  cache.params_version = params.version();
  cache.range = LayerRange{range.first, count};
  cache.spec = spec;
  cache.inputs.reserve(count);
  cache.outputs.reserve(count);

  std::vector<double> x(input.begin(), input.end());
  for (size_t k = 0; k < count; ++k) {
    const Layer& layer = params.layer(range.first + k);
    if (x.size() != layer.fan_in())
      throw ShapeError("forward_mlp: layer '" + layer.name + "' expects " +
                       std::to_string(layer.fan_in()) + " inputs, got " + std::to_string(x.size()));
    const Activation act = detail::activation_for(spec, k, count);
    const size_t n_in = layer.fan_in();
    std::vector<double> y(layer.fan_out());
    for (size_t o = 0; o < y.size(); ++o) {
      const double* w = layer.weights.data() + o * n_in;
      double s = layer.bias[o];
      for (size_t i = 0; i < n_in; ++i) s += w[i] * x[i];
      y[o] = detail::activate(act, s);
      if (!std::isfinite(y[o]))
        throw NumericError("forward_mlp: non-finite activation in layer '" + layer.name + "'");
    }
    cache.weight_shapes.push_back(layer.weights.shape());
    cache.inputs.push_back(std::move(x));
    cache.outputs.push_back(y);
    x = std::move(y);
  }
  fwd.output = std::move(x);
  return fwd;
}

// Accumulates d(loss)/d(param) into `grads` (which must be shaped like
// `params`) and returns d(loss)/d(input).
inline std::vector<double> backward_mlp_accumulate(const ParamSet& params, const MlpCache& cache,
                                                   std::span<const double> output_grad,
                                                   ParamSet& grads) {
  const size_t count = cache.inputs.size();
  if (count == 0 || cache.params_version != params.version() ||
      cache.range.first + count > params.num_layers())
    throw std::logic_error("backward_mlp: cache does not belong to these parameters");
  for (size_t k = 0; k < count; ++k)
    if (params.layer(cache.range.first + k).weights.shape() != cache.weight_shapes[k])
      throw std::logic_error("backward_mlp: cache does not belong to these parameters");
  if (!params.same_shape(grads)) throw ShapeError("backward_mlp: gradient buffer shape mismatch");
  if (output_grad.size() != cache.outputs.back().size())
    throw ShapeError("backward_mlp: output gradient has wrong length");

  std::vector<double> delta(output_grad.begin(), output_grad.end());
  for (size_t k = count; k-- > 0;) {
    const size_t li = cache.range.first + k;
    const Layer& layer = params.layer(li);
    Layer& g = grads.layer(li);
    const Activation act = detail::activation_for(cache.spec, k, count);
    const auto& y = cache.outputs[k];
    const auto& x = cache.inputs[k];
    const size_t n_in = layer.fan_in();

    for (size_t o = 0; o < delta.size(); ++o) delta[o] *= detail::activation_slope(act, y[o]);

    std::vector<double> upstream(n_in, 0.0);
    for (size_t o = 0; o < delta.size(); ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      g.bias[o] += d;
      double* gw = g.weights.data() + o * n_in;
      const double* w = layer.weights.data() + o * n_in;
      for (size_t i = 0; i < n_in; ++i) {
        gw[i] += d * x[i];
        upstream[i] += d * w[i];
      }
    }
    delta = std::move(upstream);
  }
  return delta;
}

struct MlpBackward {
  ParamSet grads;
  std::vector<double> input_grad;
};

inline MlpBackward backward_mlp(const ParamSet& params, const MlpCache& cache,
                                std::span<const double> output_grad) {
  MlpBackward out{params.zeros_like(), {}};
  out.input_grad = backward_mlp_accumulate(params, cache, output_grad, out.grads);
  return out;
}

}  // namespace a3ctp
