#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "spatchgan/errors.hpp"
#include "spatchgan/layers.hpp"
#include "spatchgan/log.hpp"
#include "spatchgan/resize.hpp"
#include "spatchgan/tensor.hpp"

namespace spatchgan {

struct GeneratorConfig {
  int base_channels = 64;
  int num_residual_blocks = 6;
  int downsample_steps = 3;  // residual trunk runs at input size / 2^steps
  int image_channels = 3;
  bool backward_layer_norm = false;  // norm flavor inside the low-res generator
};

namespace detail {

/// Inputs are nominally in [-1, 1]. Deviations up to 1e-3 are clamped
/// silently (decode rounding), larger ones are clamped with a warning, and
/// anything beyond 0.1 is treated as a wiring bug.
template <typename T>
void enforce_input_range(Tensor4<T>& x, const char* where) {
  T worst = T(0);
  for (const T& v : x.v) {
    const T excess = std::abs(v) - T(1);
    if (excess > worst) worst = excess;
  }
  if (worst <= T(0)) return;
  if (worst > T(0.1))
    throw NumericsError(std::string(where) + ": input exceeds [-1, 1] by " +
                        std::to_string(static_cast<double>(worst)));
  if (worst > T(1e-3))
    log_warn(std::string(where) + ": clamping input that exceeds [-1, 1] by " +
             std::to_string(static_cast<double>(worst)));
  for (T& v : x.v) v = std::clamp(v, T(-1), T(1));
}

}  // namespace detail

/// Full-resolution translator: 3x3 convs throughout, strided downsampling
/// with instance norm, residual trunk at 1/8 scale, nearest-neighbor
/// upsampling with layer norm, tanh output.
template <typename T>
class ForwardGenerator {
 public:
  ForwardGenerator(const GeneratorConfig& cfg, int height, int width)
      : cfg_(cfg), h_(height), w_(width) {
    const int div = 1 << cfg.downsample_steps;
    if (height <= 0 || width <= 0 || height % div != 0 || width % div != 0)
      throw ShapeError("generator: input size must be a positive multiple of " +
                       std::to_string(div) + ", received " + std::to_string(height) + "x" +
                       std::to_string(width));
    net_.template add<Conv2d<T>>("stem/conv", cfg.image_channels, cfg.base_channels, 3, 1, 1);
    net_.template add<InstanceNorm<T>>("stem/norm", cfg.base_channels);
    net_.template add<ReLU<T>>("stem/act");
    int c = cfg.base_channels;
    for (int i = 1; i <= cfg.downsample_steps; ++i) {
      const std::string tag = "down" + std::to_string(i);
      net_.template add<Conv2d<T>>(tag + "/conv", c, 2 * c, 3, 2, 1);
      net_.template add<InstanceNorm<T>>(tag + "/norm", 2 * c);
      net_.template add<ReLU<T>>(tag + "/act");
      c *= 2;
    }
    trunk_channels_ = c;
    for (int i = 1; i <= cfg.num_residual_blocks; ++i)
      net_.template add<ResidualBlock<T>>("res" + std::to_string(i), c);
    for (int i = 1; i <= cfg.downsample_steps; ++i) {
      const std::string tag = "up" + std::to_string(i);
      net_.template add<UpsampleNearest2x<T>>(tag + "/resize");
      net_.template add<Conv2d<T>>(tag + "/conv", c, c / 2, 3, 1, 1);
      net_.template add<LayerNorm<T>>(tag + "/norm", c / 2);
      net_.template add<ReLU<T>>(tag + "/act");
      c /= 2;
    }
    net_.template add<Conv2d<T>>("out/conv", c, cfg.image_channels, 3, 1, 1);
    net_.template add<Tanh<T>>("out/act");
  }

  void init(std::mt19937& rng) { net_.init(rng); }

  /// Inference entry point; applies the input range policy.
  Tensor4<T> translate(const Tensor4<T>& x) {
    Tensor4<T> in = x;
    detail::enforce_input_range(in, "translate");
    return forward(in, false);
  }

  Tensor4<T> forward(const Tensor4<T>& x, bool train) {
    require_shape(x, -1, h_, w_, cfg_.image_channels, "forward generator");
    return net_.forward(x, train);
  }

  Tensor4<T> backward(const Tensor4<T>& gy) { return net_.backward(gy); }

  void collect_params(std::vector<ParamRef<T>>& out, const std::string& prefix = "gen_fwd") {
    net_.collect_params(out, prefix);
  }
  void collect_state(std::vector<StateRef<T>>& out, const std::string& prefix = "gen_fwd") {
    net_.collect_state(out, prefix);
  }

  const GeneratorConfig& config() const { return cfg_; }
  int height() const { return h_; }
  int width() const { return w_; }
  int trunk_channels() const { return trunk_channels_; }

 private:
  GeneratorConfig cfg_;
  int h_, w_;
  int trunk_channels_ = 0;
  Sequential<T> net_;
};

/// Low-resolution reconstructor for the weak cycle: a stem, the same count of
/// residual blocks as the forward generator at the same trunk width, and a
/// tanh projection. No resampling layers.
template <typename T>
class BackwardGenerator {
 public:
  BackwardGenerator(const GeneratorConfig& cfg, int low_height, int low_width)
      : cfg_(cfg), h_(low_height), w_(low_width) {
    if (low_height <= 0 || low_width <= 0)
      throw ShapeError("backward generator: low-res size must be positive, received " +
                       std::to_string(low_height) + "x" + std::to_string(low_width));
    const int c = cfg.base_channels << cfg.downsample_steps;
    trunk_channels_ = c;
    net_.template add<Conv2d<T>>("stem/conv", cfg.image_channels, c, 3, 1, 1);
    if (cfg.backward_layer_norm)
      net_.template add<LayerNorm<T>>("stem/norm", c);
    else
      net_.template add<InstanceNorm<T>>("stem/norm", c);
    net_.template add<ReLU<T>>("stem/act");
    for (int i = 1; i <= cfg.num_residual_blocks; ++i)
      net_.template add<ResidualBlock<T>>("res" + std::to_string(i), c, cfg.backward_layer_norm);
    net_.template add<Conv2d<T>>("out/conv", c, cfg.image_channels, 3, 1, 1);
    net_.template add<Tanh<T>>("out/act");
  }

  void init(std::mt19937& rng) { net_.init(rng); }

  /// Inference entry point; validates the low resolution and input range.
  Tensor4<T> reconstruct_low(const Tensor4<T>& y_low) {
    Tensor4<T> in = y_low;
    detail::enforce_input_range(in, "reconstruct_low");
    return forward(in, false);
  }

  Tensor4<T> forward(const Tensor4<T>& x, bool train) {
    require_shape(x, -1, h_, w_, cfg_.image_channels, "backward generator");
    return net_.forward(x, train);
  }

  Tensor4<T> backward(const Tensor4<T>& gy) { return net_.backward(gy); }

  void collect_params(std::vector<ParamRef<T>>& out, const std::string& prefix = "gen_bwd") {
    net_.collect_params(out, prefix);
  }
  void collect_state(std::vector<StateRef<T>>& out, const std::string& prefix = "gen_bwd") {
    net_.collect_state(out, prefix);
  }

  const GeneratorConfig& config() const { return cfg_; }
  int height() const { return h_; }
  int width() const { return w_; }
  int trunk_channels() const { return trunk_channels_; }

 private:
  GeneratorConfig cfg_;
  int h_, w_;
  int trunk_channels_ = 0;
  Sequential<T> net_;
};

/// Total element count across a parameter collection.
template <typename T>
size_t param_count(const std::vector<ParamRef<T>>& refs) {
  size_t total = 0;
  for (const auto& r : refs) total += r.param->value.size();
  return total;
}

}  // namespace spatchgan
