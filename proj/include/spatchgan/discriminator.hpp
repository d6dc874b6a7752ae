#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "spatchgan/errors.hpp"
#include "spatchgan/feature_stats.hpp"
#include "spatchgan/layers.hpp"
#include "spatchgan/tensor.hpp"

namespace spatchgan {

enum class DiscVariant { SPatchGAN, MultiscalePatchGAN };

inline const char* variant_name(DiscVariant v) {
  return v == DiscVariant::SPatchGAN ? "spatchgan" : "patchgan";
}

struct DiscriminatorConfig {
  int num_scales = 4;
  int base_channels = 64;
  int channel_cap = 512;
  int mlp_layers = 3;  // total FC layers per head, final one linear
  int sn_power_iters = 1;
  std::vector<StatKind> enabled_stats{StatKind::Mean, StatKind::Max, StatKind::Stddev};
  DiscVariant variant = DiscVariant::SPatchGAN;
  int image_channels = 3;
  // The reference design normalizes discriminator weights spectrally and
  // nothing else; this opt-in adds instance norm after backbone convolutions
  // for ablations.
  bool use_instance_norm = false;

  int num_stats() const { return static_cast<int>(enabled_stats.size()); }

  /// Side length divisor required of inputs.
  int size_divisor() const { return 4 << num_scales; }

  void validate() const {
    if (num_scales < 1) throw ConfigError("discriminator: num_scales must be >= 1");
    if (enabled_stats.empty()) throw ConfigError("discriminator: at least one statistic required");
    for (size_t i = 0; i < enabled_stats.size(); ++i)
      for (size_t j = i + 1; j < enabled_stats.size(); ++j)
        if (enabled_stats[i] == enabled_stats[j])
          throw ConfigError(std::string("discriminator: duplicate statistic '") +
                            stat_name(enabled_stats[i]) + "'");
    if (base_channels < 1) throw ConfigError("discriminator: base_channels must be >= 1");
    if (channel_cap < base_channels)
      throw ConfigError("discriminator: channel_cap must be >= base_channels");
    if (mlp_layers < 1) throw ConfigError("discriminator: mlp_layers must be >= 1");
    if (sn_power_iters < 1) throw ConfigError("discriminator: sn_power_iters must be >= 1");
    if (image_channels < 1) throw ConfigError("discriminator: image_channels must be >= 1");
  }

  /// Feature width at 1-based scale m: doubles per scale, capped.
  int scale_channels(int m) const { return std::min(base_channels << (m - 1), channel_cap); }
};

/// Identifies one discriminator output head. SPatchGAN heads carry a
/// (scale, statistic) pair; baseline heads are whole-network patch maps.
struct HeadLabel {
  int scale = 1;  // 1-based
  StatKind stat = StatKind::Mean;
  bool has_stat = true;
  std::string str() const {
    std::string s = "scale" + std::to_string(scale);
    if (has_stat) s += std::string("/") + stat_name(stat);
    return s;
  }
};

/// Per-sample scalar outputs of every head, labeled. For patch-map heads the
/// stored value is the mean over patches (diagnostic reduction; training
/// losses consume the raw maps instead).
template <typename T>
struct DisOutputGrid {
  int batch = 0;
  std::vector<HeadLabel> labels;
  std::vector<T> values;  // [batch, heads] row-major

  int heads() const { return static_cast<int>(labels.size()); }
  T& at(int b, int h) { return values[static_cast<size_t>(b) * labels.size() + h]; }
  const T& at(int b, int h) const { return values[static_cast<size_t>(b) * labels.size() + h]; }
  T head_mean(int h) const {
    T s = T(0);
    for (int b = 0; b < batch; ++b) s += at(b, h);
    return batch ? s / T(batch) : T(0);
  }
};

/// Common surface of both discriminator variants. Heads are returned as
/// tensors so losses can weight every element: [B,1,1,1] scalars for
/// SPatchGAN, [B,ph,pw,1] patch maps for the baseline.
template <typename T>
class DiscriminatorBase {
 public:
  virtual ~DiscriminatorBase() = default;
  virtual std::vector<Tensor4<T>> forward_heads(const Tensor4<T>& x, bool train) = 0;
  /// Accumulates parameter gradients; returns gradient w.r.t. the input.
  virtual Tensor4<T> backward_heads(const std::vector<Tensor4<T>>& gheads) = 0;
  virtual const std::vector<HeadLabel>& head_labels() const = 0;
  virtual void init(std::mt19937& rng) = 0;
  virtual void collect_params(std::vector<ParamRef<T>>& out) = 0;
  virtual void collect_state(std::vector<StateRef<T>>& out) = 0;
  virtual const DiscriminatorConfig& config() const = 0;
  virtual int input_height() const = 0;
  virtual int input_width() const = 0;
};

/// Statistical-feature discriminator: a shared strided backbone yields one
/// feature map per scale; each scale gets two 1x1 adaptation convolutions,
/// per-channel statistics, and one small MLP per statistic. Every weight is
/// spectrally normalized and every hidden activation is leaky (slope 0.2);
/// head outputs stay linear for the least-squares objective.
template <typename T>
class SPatchDiscriminator : public DiscriminatorBase<T> {
 public:
  SPatchDiscriminator(const DiscriminatorConfig& cfg, int height, int width) : cfg_(cfg) {
    cfg_.validate();
    const int div = cfg_.size_divisor();
    if (height <= 0 || width <= 0 || height % div != 0 || width % div != 0)
      throw ConfigError("discriminator: " + std::to_string(height) + "x" + std::to_string(width) +
                        " input needs sides divisible by " + std::to_string(div) +
                        " for " + std::to_string(cfg_.num_scales) + " scales (valid: " +
                        std::to_string(div) + ", " + std::to_string(2 * div) + ", " +
                        std::to_string(3 * div) + ", ...)");
    h_ = height;
    w_ = width;
    const int M = cfg_.num_scales;
    const int N = cfg_.num_stats();

    const int c1 = cfg_.scale_channels(1);
    stem_ = std::make_unique<Sequential<T>>();
    add_conv(*stem_, "conv1", cfg_.image_channels, c1, 4, 2, 1);
    add_conv(*stem_, "conv2", c1, c1, 4, 2, 1);

    for (int m = 2; m <= M; ++m) {
      auto down = std::make_unique<Sequential<T>>();
      add_conv(*down, "conv", cfg_.scale_channels(m - 1), cfg_.scale_channels(m), 4, 2, 1);
      downs_.push_back(std::move(down));
    }
    for (int m = 1; m <= M; ++m) {
      const int c = cfg_.scale_channels(m);
      auto adapt = std::make_unique<Sequential<T>>();
      add_conv(*adapt, "conv1", c, c, 1, 1, 0);
      add_conv(*adapt, "conv2", c, c, 1, 1, 0);
      adapts_.push_back(std::move(adapt));
    }
    mlps_.resize(M);
    for (int m = 1; m <= M; ++m) {
      const int c = cfg_.scale_channels(m);
      for (int n = 0; n < N; ++n) {
        auto mlp = std::make_unique<Sequential<T>>();
        for (int l = 1; l < cfg_.mlp_layers; ++l) {
          auto* fc = mlp->template add<Dense<T>>("fc" + std::to_string(l), c, c, true);
          fc->spectral_norm().power_iters = cfg_.sn_power_iters;
          mlp->template add<LeakyReLU<T>>("act" + std::to_string(l), T(0.2));
        }
        auto* head = mlp->template add<Dense<T>>("fc" + std::to_string(cfg_.mlp_layers), c, 1, true);
        head->spectral_norm().power_iters = cfg_.sn_power_iters;
        mlps_[m - 1].push_back(std::move(mlp));
        labels_.push_back({m, cfg_.enabled_stats[n], true});
      }
    }
    amaps_.resize(M);
    stat_caches_.assign(M, std::vector<StatCache<T>>(N));
  }

  void init(std::mt19937& rng) override {
    stem_->init(rng);
    for (auto& d : downs_) d->init(rng);
    for (auto& a : adapts_) a->init(rng);
    for (auto& row : mlps_)
      for (auto& m : row) m->init(rng);
  }

  std::vector<Tensor4<T>> forward_heads(const Tensor4<T>& x, bool train) override {
    compute_adapted(x, train);
    const int M = cfg_.num_scales;
    const int N = cfg_.num_stats();
    std::vector<Tensor4<T>> heads;
    heads.reserve(static_cast<size_t>(M) * N);
    for (int m = 0; m < M; ++m)
      for (int n = 0; n < N; ++n) {
        Tensor4<T> s = stat_forward(amaps_[m], cfg_.enabled_stats[n], &stat_caches_[m][n]);
        heads.push_back(mlps_[m][n]->forward(s, train));
      }
    return heads;
  }

  Tensor4<T> backward_heads(const std::vector<Tensor4<T>>& gheads) override {
    const int M = cfg_.num_scales;
    const int N = cfg_.num_stats();
    if (static_cast<int>(gheads.size()) != M * N)
      throw ShapeError("discriminator backward: expected " + std::to_string(M * N) +
                       " head gradients, received " + std::to_string(gheads.size()));
    std::vector<Tensor4<T>> gf(M);
    for (int m = M - 1; m >= 0; --m) {
      Tensor4<T> ga = Tensor4<T>::zeros_like(amaps_[m]);
      for (int n = 0; n < N; ++n) {
        Tensor4<T> gs = mlps_[m][n]->backward(gheads[static_cast<size_t>(m) * N + n]);
        stat_backward(amaps_[m], stat_caches_[m][n], gs, ga);
      }
      accumulate(gf[m], adapts_[m]->backward(ga));
      if (m > 0) accumulate(gf[m - 1], downs_[m - 1]->backward(gf[m]));
    }
    return stem_->backward(gf[0]);
  }

  const std::vector<HeadLabel>& head_labels() const override { return labels_; }
  const DiscriminatorConfig& config() const override { return cfg_; }
  int input_height() const override { return h_; }
  int input_width() const override { return w_; }

  /// Adapted per-scale feature maps (the tensors the statistics see).
  std::vector<Tensor4<T>> adapted_features(const Tensor4<T>& x, bool train = false) {
    compute_adapted(x, train);
    return amaps_;
  }

  /// Head MLP for (1-based scale, 0-based stat index).
  Sequential<T>& mlp(int scale, int stat_index) { return *mlps_[scale - 1][stat_index]; }

  void collect_params(std::vector<ParamRef<T>>& out) override {
    stem_->collect_params(out, "disc/scale1/stem");
    for (int m = 2; m <= cfg_.num_scales; ++m)
      downs_[m - 2]->collect_params(out, "disc/scale" + std::to_string(m) + "/down");
    for (int m = 1; m <= cfg_.num_scales; ++m) {
      adapts_[m - 1]->collect_params(out, "disc/scale" + std::to_string(m) + "/adapt");
    }
    for (int m = 1; m <= cfg_.num_scales; ++m)
      for (int n = 0; n < cfg_.num_stats(); ++n)
        mlps_[m - 1][n]->collect_params(out, std::string("disc/mlp/") +
                                                 stat_name(cfg_.enabled_stats[n]) + "/scale" +
                                                 std::to_string(m));
  }

  void collect_state(std::vector<StateRef<T>>& out) override {
    stem_->collect_state(out, "disc/scale1/stem");
    for (int m = 2; m <= cfg_.num_scales; ++m)
      downs_[m - 2]->collect_state(out, "disc/scale" + std::to_string(m) + "/down");
    for (int m = 1; m <= cfg_.num_scales; ++m)
      adapts_[m - 1]->collect_state(out, "disc/scale" + std::to_string(m) + "/adapt");
    for (int m = 1; m <= cfg_.num_scales; ++m)
      for (int n = 0; n < cfg_.num_stats(); ++n)
        mlps_[m - 1][n]->collect_state(out, std::string("disc/mlp/") +
                                                stat_name(cfg_.enabled_stats[n]) + "/scale" +
                                                std::to_string(m));
  }

 private:
  void add_conv(Sequential<T>& seq, const std::string& name, int cin, int cout, int k, int stride,
                int pad) {
    auto* conv = seq.template add<Conv2d<T>>(name, cin, cout, k, stride, pad, true);
    conv->spectral_norm().power_iters = cfg_.sn_power_iters;
    if (cfg_.use_instance_norm) seq.template add<InstanceNorm<T>>(name + "_norm", cout);
    seq.template add<LeakyReLU<T>>(name + "_act", T(0.2));
  }

  void compute_adapted(const Tensor4<T>& x, bool train) {
    require_shape(x, -1, h_, w_, cfg_.image_channels, "discriminator");
    Tensor4<T> f = stem_->forward(x, train);
    for (int m = 0; m < cfg_.num_scales; ++m) {
      if (m > 0) f = downs_[m - 1]->forward(f, train);
      amaps_[m] = adapts_[m]->forward(f, train);
      validate_feature_map(amaps_[m], m + 1);
    }
  }

  static void accumulate(Tensor4<T>& dst, Tensor4<T>&& src) {
    if (dst.v.empty()) {
      dst = std::move(src);
      return;
    }
    for (size_t i = 0; i < dst.v.size(); ++i) dst.v[i] += src.v[i];
  }

  DiscriminatorConfig cfg_;
  int h_ = 0, w_ = 0;
  std::unique_ptr<Sequential<T>> stem_;
  std::vector<std::unique_ptr<Sequential<T>>> downs_;   // scales 2..M
  std::vector<std::unique_ptr<Sequential<T>>> adapts_;  // scales 1..M
  std::vector<std::vector<std::unique_ptr<Sequential<T>>>> mlps_;
  std::vector<HeadLabel> labels_;
  std::vector<Tensor4<T>> amaps_;
  std::vector<std::vector<StatCache<T>>> stat_caches_;
};

/// Ablation baseline: three independent patch classifiers on the input at
/// full, half, and quarter side length (area 1, 1/4, 1/16). Each emits a
/// per-patch map; losses average over all patches of all three maps.
template <typename T>
class MultiscalePatchGAN : public DiscriminatorBase<T> {
 public:
  MultiscalePatchGAN(const DiscriminatorConfig& cfg, int height, int width) : cfg_(cfg) {
    cfg_.validate();
    if (height < 32 || width < 32 || height % 4 != 0 || width % 4 != 0)
      throw ConfigError("patchgan baseline: input must be at least 32x32 with sides divisible "
                        "by 4, received " +
                        std::to_string(height) + "x" + std::to_string(width));
    h_ = height;
    w_ = width;
    const int b = cfg_.base_channels;
    const int top = std::min(8 * b, cfg_.channel_cap);
    for (int i = 1; i <= 3; ++i) {
      auto net = std::make_unique<Sequential<T>>();
      add_conv(*net, "conv1", cfg_.image_channels, b, 4, 2, 1);
      add_conv(*net, "conv2", b, 2 * b, 4, 2, 1);
      add_conv(*net, "conv3", 2 * b, 4 * b, 4, 2, 1);
      add_conv(*net, "conv4", 4 * b, top, 3, 1, 1);
      auto* out = net->template add<Conv2d<T>>("out", top, 1, 1, 1, 0, true);
      out->spectral_norm().power_iters = cfg_.sn_power_iters;
      nets_.push_back(std::move(net));
      labels_.push_back({i, StatKind::Mean, false});
    }
  }

  void init(std::mt19937& rng) override {
    for (auto& n : nets_) n->init(rng);
  }

  std::vector<Tensor4<T>> forward_heads(const Tensor4<T>& x, bool train) override {
    require_shape(x, -1, h_, w_, cfg_.image_channels, "discriminator");
    std::vector<Tensor4<T>> heads;
    heads.push_back(nets_[0]->forward(x, train));
    Tensor4<T> half = pool1_.forward(x, train);
    heads.push_back(nets_[1]->forward(half, train));
    Tensor4<T> quarter = pool2_.forward(half, train);
    heads.push_back(nets_[2]->forward(quarter, train));
    return heads;
  }

  Tensor4<T> backward_heads(const std::vector<Tensor4<T>>& gheads) override {
    if (gheads.size() != 3)
      throw ShapeError("patchgan backward: expected 3 head gradients, received " +
                       std::to_string(gheads.size()));
    Tensor4<T> gq = nets_[2]->backward(gheads[2]);
    Tensor4<T> gh = nets_[1]->backward(gheads[1]);
    {
      Tensor4<T> up = pool2_.backward(gq);
      for (size_t i = 0; i < gh.v.size(); ++i) gh.v[i] += up.v[i];
    }
    Tensor4<T> gx = nets_[0]->backward(gheads[0]);
    Tensor4<T> up = pool1_.backward(gh);
    for (size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += up.v[i];
    return gx;
  }

  const std::vector<HeadLabel>& head_labels() const override { return labels_; }
  const DiscriminatorConfig& config() const override { return cfg_; }
  int input_height() const override { return h_; }
  int input_width() const override { return w_; }

  void collect_params(std::vector<ParamRef<T>>& out) override {
    for (size_t i = 0; i < nets_.size(); ++i)
      nets_[i]->collect_params(out, "disc/net" + std::to_string(i + 1));
  }
  void collect_state(std::vector<StateRef<T>>& out) override {
    for (size_t i = 0; i < nets_.size(); ++i)
      nets_[i]->collect_state(out, "disc/net" + std::to_string(i + 1));
  }

 private:
  void add_conv(Sequential<T>& seq, const std::string& name, int cin, int cout, int k, int stride,
                int pad) {
    auto* conv = seq.template add<Conv2d<T>>(name, cin, cout, k, stride, pad, true);
    conv->spectral_norm().power_iters = cfg_.sn_power_iters;
    seq.template add<LeakyReLU<T>>(name + "_act", T(0.2));
  }

  DiscriminatorConfig cfg_;
  int h_ = 0, w_ = 0;
  std::vector<std::unique_ptr<Sequential<T>>> nets_;
  std::vector<HeadLabel> labels_;
  AvgPool2x<T> pool1_, pool2_;
};

template <typename T>
std::unique_ptr<DiscriminatorBase<T>> build_discriminator(const DiscriminatorConfig& cfg,
                                                          int height, int width) {
  if (cfg.variant == DiscVariant::MultiscalePatchGAN)
    return std::make_unique<MultiscalePatchGAN<T>>(cfg, height, width);
  return std::make_unique<SPatchDiscriminator<T>>(cfg, height, width);
}

/// Eval-mode forward reduced to one labeled scalar per sample and head.
template <typename T>
DisOutputGrid<T> discriminate(DiscriminatorBase<T>& d, const Tensor4<T>& images) {
  std::vector<Tensor4<T>> heads = d.forward_heads(images, false);
  DisOutputGrid<T> grid;
  grid.batch = images.n;
  grid.labels = d.head_labels();
  grid.values.assign(static_cast<size_t>(grid.batch) * grid.labels.size(), T(0));
  for (size_t h = 0; h < heads.size(); ++h) {
    const Tensor4<T>& t = heads[h];
    const size_t stride = t.sample_stride();
    for (int b = 0; b < t.n; ++b) {
      T s = T(0);
      for (size_t j = 0; j < stride; ++j) s += t.v[b * stride + j];
      grid.at(b, static_cast<int>(h)) = s / static_cast<T>(stride);
    }
  }
  for (const T& v : grid.values)
    if (!std::isfinite(static_cast<double>(v)))
      throw NumericsError("discriminator output is not finite");
  return grid;
}

}  // namespace spatchgan
