#pragma once

#include <algorithm>
#include <cstring>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "spatchgan/param.hpp"
#include "spatchgan/rng.hpp"
#include "spatchgan/spectral_norm.hpp"
#include "spatchgan/tensor.hpp"

namespace spatchgan {

/// Common interface for trainable layers. forward caches whatever backward
/// needs; backward accumulates parameter gradients (+=) and returns the
/// gradient w.r.t. its input. One forward per backward, in matching order.
template <typename T>
class LayerBase {
 public:
  virtual ~LayerBase() = default;
  virtual Tensor4<T> forward(const Tensor4<T>& x, bool train) = 0;
  virtual Tensor4<T> backward(const Tensor4<T>& gy) = 0;
  virtual void init(std::mt19937& /*rng*/) {}
  virtual void collect_params(std::vector<ParamRef<T>>& /*out*/, const std::string& /*prefix*/) {}
  virtual void collect_state(std::vector<StateRef<T>>& /*out*/, const std::string& /*prefix*/) {}
};

namespace detail {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Gathers conv patches: out is [oh*ow, k*k*cin] row-major.
template <typename T>
void im2col(const Tensor4<T>& x, int sample, int k, int stride, int pad, int oh, int ow,
            T* xcol) {
  const int cin = x.c;
  const int patch = k * k * cin;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      T* row = xcol + (static_cast<size_t>(oy) * ow + ox) * patch;
      for (int ky = 0; ky < k; ++ky) {
        const int iy = oy * stride - pad + ky;
        for (int kx = 0; kx < k; ++kx) {
          const int ix = ox * stride - pad + kx;
          T* dst = row + (static_cast<size_t>(ky) * k + kx) * cin;
          if (iy >= 0 && iy < x.h && ix >= 0 && ix < x.w) {
            std::memcpy(dst, x.pixel(sample, iy, ix), sizeof(T) * cin);
          } else {
            std::fill(dst, dst + cin, T(0));
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* xcol, int sample, int k, int stride, int pad, int oh, int ow,
                Tensor4<T>& gx) {
  const int cin = gx.c;
  const int patch = k * k * cin;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const T* row = xcol + (static_cast<size_t>(oy) * ow + ox) * patch;
      for (int ky = 0; ky < k; ++ky) {
        const int iy = oy * stride - pad + ky;
        if (iy < 0 || iy >= gx.h) continue;
        for (int kx = 0; kx < k; ++kx) {
          const int ix = ox * stride - pad + kx;
          if (ix < 0 || ix >= gx.w) continue;
          T* dst = gx.pixel(sample, iy, ix);
          const T* src = row + (static_cast<size_t>(ky) * k + kx) * cin;
          for (int ch = 0; ch < cin; ++ch) dst[ch] += src[ch];
        }
      }
    }
  }
}

}  // namespace detail

/// 2-D convolution, NHWC, square kernel, symmetric zero padding. Weight is
/// stored as [k*k*cin, cout] so im2col output multiplies it directly.
/// Optionally spectrally normalized (one power iteration per training-mode
/// forward, estimates persisted as layer state).
template <typename T>
class Conv2d : public LayerBase<T> {
 public:
  Conv2d(int cin, int cout, int k, int stride, int pad, bool use_sn = false,
         ParamKind kind = ParamKind::ConvWeight)
      : cin_(cin), cout_(cout), k_(k), stride_(stride), pad_(pad), use_sn_(use_sn), kind_(kind) {
    weight_.resize(static_cast<size_t>(k * k * cin) * cout);
    weight_.kind = kind;
    bias_.resize(cout);
    bias_.kind = ParamKind::Bias;
    if (use_sn_) sn_.resize(cout_, k_ * k_ * cin_);
  }

  void init(std::mt19937& rng) override {
    fill_normal<T>(rng, weight_.value.data(), weight_.value.size(), T(0.02));
    std::fill(bias_.value.begin(), bias_.value.end(), T(0));
    if (use_sn_) sn_.init(cout_, k_ * k_ * cin_, rng, &weight_.value);
  }

  Tensor4<T> forward(const Tensor4<T>& x, bool train) override {
    if (x.c != cin_)
      throw ShapeError("conv: expected " + std::to_string(cin_) + " input channels, received " +
                       std::to_string(x.c));
    x_ = x;
    const int oh = out_dim(x.h), ow = out_dim(x.w);
    Tensor4<T> y(x.n, oh, ow, cout_);
    const std::vector<T>* w = &weight_.value;
    if (use_sn_) {
      sn_.apply(weight_.value, what_, train);
      w = &what_;
    }
    const int patch = k_ * k_ * cin_;
    xcol_.resize(static_cast<size_t>(oh) * ow * patch);
    ConstMatMap<T> wm(w->data(), patch, cout_);
    for (int i = 0; i < x.n; ++i) {
      detail::im2col(x, i, k_, stride_, pad_, oh, ow, xcol_.data());
      ConstMatMap<T> xm(xcol_.data(), static_cast<size_t>(oh) * ow, patch);
      MatMap<T> ym(y.data() + i * y.sample_stride(), static_cast<size_t>(oh) * ow, cout_);
      ym.noalias() = xm * wm;
      ym.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias_.value.data(),
                                                                            cout_);
    }
    return y;
  }

  Tensor4<T> backward(const Tensor4<T>& gy) override {
    const int oh = gy.h, ow = gy.w;
    const int patch = k_ * k_ * cin_;
    const size_t pos = static_cast<size_t>(oh) * ow;
    Tensor4<T> gx(x_.n, x_.h, x_.w, cin_);
    gweff_.assign(weight_.size(), T(0));
    MatMap<T> gwm(gweff_.data(), patch, cout_);
    const std::vector<T>* w = use_sn_ ? &what_ : &weight_.value;
    ConstMatMap<T> wm(w->data(), patch, cout_);
    gxcol_.resize(pos * patch);
    for (int i = 0; i < x_.n; ++i) {
      detail::im2col(x_, i, k_, stride_, pad_, oh, ow, xcol_.data());
      ConstMatMap<T> xm(xcol_.data(), pos, patch);
      ConstMatMap<T> gym(gy.data() + i * gy.sample_stride(), pos, cout_);
      gwm.noalias() += xm.transpose() * gym;
      MatMap<T> gxm(gxcol_.data(), pos, patch);
      gxm.noalias() = gym * wm.transpose();
      detail::col2im_add(gxcol_.data(), i, k_, stride_, pad_, oh, ow, gx);
      Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>(bias_.grad.data(), cout_).noalias() +=
          gym.colwise().sum().transpose();
    }
    if (use_sn_) {
      sn_.backward(gweff_, what_, gwtmp_);
      for (size_t j = 0; j < weight_.size(); ++j) weight_.grad[j] += gwtmp_[j];
    } else {
      for (size_t j = 0; j < weight_.size(); ++j) weight_.grad[j] += gweff_[j];
    }
    return gx;
  }

  void collect_params(std::vector<ParamRef<T>>& out, const std::string& prefix) override {
    out.push_back({prefix + "/weight", &weight_});
    out.push_back({prefix + "/bias", &bias_});
  }

  void collect_state(std::vector<StateRef<T>>& out, const std::string& prefix) override {
    if (use_sn_) sn_.collect_state(out, prefix);
  }

  int out_dim(int in) const { return (in + 2 * pad_ - k_) / stride_ + 1; }

  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }
  SpectralNorm<T>& spectral_norm() { return sn_; }
  bool spectrally_normalized() const { return use_sn_; }

 private:
  int cin_, cout_, k_, stride_, pad_;
  bool use_sn_;
  ParamKind kind_;
  Param<T> weight_, bias_;
  SpectralNorm<T> sn_;
  Tensor4<T> x_;
  std::vector<T> what_, xcol_, gxcol_, gweff_, gwtmp_;
};

/// Fully connected layer over rank-2 tensors [n,1,1,c].
template <typename T>
class Dense : public LayerBase<T> {
 public:
  Dense(int in, int out, bool use_sn = false) : in_(in), out_(out), use_sn_(use_sn) {
    weight_.resize(static_cast<size_t>(in) * out);
    weight_.kind = ParamKind::FcWeight;
    bias_.resize(out);
    bias_.kind = ParamKind::Bias;
    if (use_sn_) sn_.resize(out_, in_);
  }

  void init(std::mt19937& rng) override {
    fill_normal<T>(rng, weight_.value.data(), weight_.value.size(), T(0.02));
    std::fill(bias_.value.begin(), bias_.value.end(), T(0));
    if (use_sn_) sn_.init(out_, in_, rng, &weight_.value);
  }

  Tensor4<T> forward(const Tensor4<T>& x, bool train) override {
    if (x.h != 1 || x.w != 1 || x.c != in_)
      throw ShapeError("dense: expected [n,1,1," + std::to_string(in_) + "], received " +
                       x.shape_str());
    x_ = x;
    const std::vector<T>* w = &weight_.value;
    if (use_sn_) {
      sn_.apply(weight_.value, what_, train);
      w = &what_;
    }
    Tensor4<T> y(x.n, 1, 1, out_);
    ConstMatMap<T> xm(x.data(), x.n, in_);
    ConstMatMap<T> wm(w->data(), in_, out_);
    MatMap<T> ym(y.data(), x.n, out_);
    ym.noalias() = xm * wm;
    ym.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias_.value.data(),
                                                                          out_);
    return y;
  }

  Tensor4<T> backward(const Tensor4<T>& gy) override {
    Tensor4<T> gx(x_.n, 1, 1, in_);
    gweff_.assign(weight_.size(), T(0));
    ConstMatMap<T> xm(x_.data(), x_.n, in_);
    ConstMatMap<T> gym(gy.data(), gy.n, out_);
    MatMap<T> gwm(gweff_.data(), in_, out_);
    gwm.noalias() = xm.transpose() * gym;
    const std::vector<T>* w = use_sn_ ? &what_ : &weight_.value;
    ConstMatMap<T> wm(w->data(), in_, out_);
    MatMap<T> gxm(gx.data(), gx.n, in_);
    gxm.noalias() = gym * wm.transpose();
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>(bias_.grad.data(), out_).noalias() +=
        gym.colwise().sum().transpose();
    if (use_sn_) {
      sn_.backward(gweff_, what_, gwtmp_);
      for (size_t j = 0; j < weight_.size(); ++j) weight_.grad[j] += gwtmp_[j];
    } else {
      for (size_t j = 0; j < weight_.size(); ++j) weight_.grad[j] += gweff_[j];
    }
    return gx;
  }

  void collect_params(std::vector<ParamRef<T>>& out, const std::string& prefix) override {
    out.push_back({prefix + "/weight", &weight_});
    out.push_back({prefix + "/bias", &bias_});
  }

  void collect_state(std::vector<StateRef<T>>& out, const std::string& prefix) override {
    if (use_sn_) sn_.collect_state(out, prefix);
  }

  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }
  SpectralNorm<T>& spectral_norm() { return sn_; }

 private:
  int in_, out_;
  bool use_sn_;
  Param<T> weight_, bias_;
  SpectralNorm<T> sn_;
  Tensor4<T> x_;
  std::vector<T> what_, gweff_, gwtmp_;
};

/// Instance normalization: per (sample, channel) statistics over H*W,
/// uncorrected variance, learned per-channel gain and bias.
template <typename T>
class InstanceNorm : public LayerBase<T> {
 public:
  explicit InstanceNorm(int channels, T eps = T(1e-5)) : c_(channels), eps_(eps) {
    gamma_.resize(channels);
    gamma_.kind = ParamKind::NormGain;
    beta_.resize(channels);
    beta_.kind = ParamKind::NormBias;
    std::fill(gamma_.value.begin(), gamma_.value.end(), T(1));
  }

  Tensor4<T> forward(const Tensor4<T>& x, bool /*train*/) override {
    const int hw = x.h * x.w;
    xhat_ = Tensor4<T>(x.n, x.h, x.w, x.c);
    istd_.assign(static_cast<size_t>(x.n) * x.c, T(0));
    Tensor4<T> y(x.n, x.h, x.w, x.c);
    for (int i = 0; i < x.n; ++i) {
      for (int ch = 0; ch < x.c; ++ch) {
        T mean = T(0);
        for (int p = 0; p < hw; ++p) mean += x.v[(i * static_cast<size_t>(hw) + p) * x.c + ch];
        mean /= T(hw);
        T var = T(0);
        for (int p = 0; p < hw; ++p) {
          const T d = x.v[(i * static_cast<size_t>(hw) + p) * x.c + ch] - mean;
          var += d * d;
        }
        var /= T(hw);
        const T istd = T(1) / std::sqrt(var + eps_);
        istd_[static_cast<size_t>(i) * x.c + ch] = istd;
        for (int p = 0; p < hw; ++p) {
          const size_t idx = (i * static_cast<size_t>(hw) + p) * x.c + ch;
          const T xh = (x.v[idx] - mean) * istd;
          xhat_.v[idx] = xh;
          y.v[idx] = gamma_.value[ch] * xh + beta_.value[ch];
        }
      }
    }
    return y;
  }

  Tensor4<T> backward(const Tensor4<T>& gy) override {
    const int hw = gy.h * gy.w;
    Tensor4<T> gx(gy.n, gy.h, gy.w, gy.c);
    for (int i = 0; i < gy.n; ++i) {
      for (int ch = 0; ch < gy.c; ++ch) {
        T sum_t = T(0), sum_tx = T(0);
        for (int p = 0; p < hw; ++p) {
          const size_t idx = (i * static_cast<size_t>(hw) + p) * gy.c + ch;
          const T g = gy.v[idx];
          gamma_.grad[ch] += g * xhat_.v[idx];
          beta_.grad[ch] += g;
          const T t = g * gamma_.value[ch];
          sum_t += t;
          sum_tx += t * xhat_.v[idx];
        }
        const T m1 = sum_t / T(hw), m2 = sum_tx / T(hw);
        const T istd = istd_[static_cast<size_t>(i) * gy.c + ch];
        for (int p = 0; p < hw; ++p) {
          const size_t idx = (i * static_cast<size_t>(hw) + p) * gy.c + ch;
          const T t = gy.v[idx] * gamma_.value[ch];
          gx.v[idx] = istd * (t - m1 - xhat_.v[idx] * m2);
        }
      }
    }
    return gx;
  }

  void collect_params(std::vector<ParamRef<T>>& out, const std::string& prefix) override {
    out.push_back({prefix + "/gamma", &gamma_});
    out.push_back({prefix + "/beta", &beta_});
  }

 private:
  int c_;
  T eps_;
  Param<T> gamma_, beta_;
  Tensor4<T> xhat_;
  std::vector<T> istd_;
};

/// Layer normalization over (H, W, C) per sample, per-channel affine.
template <typename T>
class LayerNorm : public LayerBase<T> {
 public:
  explicit LayerNorm(int channels, T eps = T(1e-5)) : c_(channels), eps_(eps) {
    gamma_.resize(channels);
    gamma_.kind = ParamKind::NormGain;
    beta_.resize(channels);
    beta_.kind = ParamKind::NormBias;
    std::fill(gamma_.value.begin(), gamma_.value.end(), T(1));
  }

  Tensor4<T> forward(const Tensor4<T>& x, bool /*train*/) override {
    const size_t stride = x.sample_stride();
    xhat_ = Tensor4<T>(x.n, x.h, x.w, x.c);
    istd_.assign(x.n, T(0));
    Tensor4<T> y(x.n, x.h, x.w, x.c);
    for (int i = 0; i < x.n; ++i) {
      const T* xi = x.data() + i * stride;
      T mean = T(0);
      for (size_t p = 0; p < stride; ++p) mean += xi[p];
      mean /= T(stride);
      T var = T(0);
      for (size_t p = 0; p < stride; ++p) {
        const T d = xi[p] - mean;
        var += d * d;
      }
      var /= T(stride);
      const T istd = T(1) / std::sqrt(var + eps_);
      istd_[i] = istd;
      for (size_t p = 0; p < stride; ++p) {
        const T xh = (xi[p] - mean) * istd;
        xhat_.v[i * stride + p] = xh;
        y.v[i * stride + p] = gamma_.value[p % x.c] * xh + beta_.value[p % x.c];
      }
    }
    return y;
  }

  Tensor4<T> backward(const Tensor4<T>& gy) override {
    const size_t stride = gy.sample_stride();
    Tensor4<T> gx(gy.n, gy.h, gy.w, gy.c);
    for (int i = 0; i < gy.n; ++i) {
      T sum_t = T(0), sum_tx = T(0);
      for (size_t p = 0; p < stride; ++p) {
        const size_t idx = i * stride + p;
        const int ch = static_cast<int>(p % gy.c);
        gamma_.grad[ch] += gy.v[idx] * xhat_.v[idx];
        beta_.grad[ch] += gy.v[idx];
        const T t = gy.v[idx] * gamma_.value[ch];
        sum_t += t;
        sum_tx += t * xhat_.v[idx];
      }
      const T m1 = sum_t / T(stride), m2 = sum_tx / T(stride);
      for (size_t p = 0; p < stride; ++p) {
        const size_t idx = i * stride + p;
        const T t = gy.v[idx] * gamma_.value[p % gy.c];
        gx.v[idx] = istd_[i] * (t - m1 - xhat_.v[idx] * m2);
      }
    }
    return gx;
  }

  void collect_params(std::vector<ParamRef<T>>& out, const std::string& prefix) override {
    out.push_back({prefix + "/gamma", &gamma_});
    out.push_back({prefix + "/beta", &beta_});
  }

 private:
  int c_;
  T eps_;
  Param<T> gamma_, beta_;
  Tensor4<T> xhat_;
  std::vector<T> istd_;
};

template <typename T>
class LeakyReLU : public LayerBase<T> {
 public:
  explicit LeakyReLU(T slope = T(0.2)) : slope_(slope) {}

  Tensor4<T> forward(const Tensor4<T>& x, bool /*train*/) override {
    x_ = x;
    Tensor4<T> y = x;
    for (T& v : y.v) v = v > T(0) ? v : slope_ * v;
    return y;
  }

  Tensor4<T> backward(const Tensor4<T>& gy) override {
    Tensor4<T> gx = gy;
    for (size_t i = 0; i < gx.v.size(); ++i)
      if (x_.v[i] <= T(0)) gx.v[i] *= slope_;
    return gx;
  }

 private:
  T slope_;
  Tensor4<T> x_;
};

template <typename T>
class ReLU : public LayerBase<T> {
 public:
  Tensor4<T> forward(const Tensor4<T>& x, bool /*train*/) override {
    x_ = x;
    Tensor4<T> y = x;
    for (T& v : y.v) v = std::max(v, T(0));
    return y;
  }

  Tensor4<T> backward(const Tensor4<T>& gy) override {
    Tensor4<T> gx = gy;
    for (size_t i = 0; i < gx.v.size(); ++i)
      if (x_.v[i] <= T(0)) gx.v[i] = T(0);
    return gx;
  }

 private:
  Tensor4<T> x_;
};

template <typename T>
class Tanh : public LayerBase<T> {
 public:
  Tensor4<T> forward(const Tensor4<T>& x, bool /*train*/) override {
    y_ = x;
    for (T& v : y_.v) v = std::tanh(v);
    return y_;
  }

  Tensor4<T> backward(const Tensor4<T>& gy) override {
    Tensor4<T> gx = gy;
    for (size_t i = 0; i < gx.v.size(); ++i) gx.v[i] *= (T(1) - y_.v[i] * y_.v[i]);
    return gx;
  }

 private:
  Tensor4<T> y_;
};

/// Nearest-neighbor 2x upsampling.
template <typename T>
class UpsampleNearest2x : public LayerBase<T> {
 public:
  Tensor4<T> forward(const Tensor4<T>& x, bool /*train*/) override {
    in_h_ = x.h;
    in_w_ = x.w;
    Tensor4<T> y(x.n, x.h * 2, x.w * 2, x.c);
    for (int i = 0; i < x.n; ++i)
      for (int yy = 0; yy < y.h; ++yy)
        for (int xx = 0; xx < y.w; ++xx)
          std::memcpy(y.pixel(i, yy, xx), x.pixel(i, yy / 2, xx / 2), sizeof(T) * x.c);
    return y;
  }

  Tensor4<T> backward(const Tensor4<T>& gy) override {
    Tensor4<T> gx(gy.n, in_h_, in_w_, gy.c);
    for (int i = 0; i < gy.n; ++i)
      for (int yy = 0; yy < gy.h; ++yy)
        for (int xx = 0; xx < gy.w; ++xx) {
          T* dst = gx.pixel(i, yy / 2, xx / 2);
          const T* src = gy.pixel(i, yy, xx);
          for (int ch = 0; ch < gy.c; ++ch) dst[ch] += src[ch];
        }
    return gx;
  }

 private:
  int in_h_ = 0, in_w_ = 0;
};

/// 2x2 stride-2 average pooling (input pyramid for the patch-based baseline).
template <typename T>
class AvgPool2x : public LayerBase<T> {
 public:
  Tensor4<T> forward(const Tensor4<T>& x, bool /*train*/) override {
    in_h_ = x.h;
    in_w_ = x.w;
    Tensor4<T> y(x.n, x.h / 2, x.w / 2, x.c);
    for (int i = 0; i < x.n; ++i)
      for (int yy = 0; yy < y.h; ++yy)
        for (int xx = 0; xx < y.w; ++xx) {
          T* dst = y.pixel(i, yy, xx);
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const T* src = x.pixel(i, yy * 2 + dy, xx * 2 + dx);
              for (int ch = 0; ch < x.c; ++ch) dst[ch] += src[ch] * T(0.25);
            }
        }
    return y;
  }

  Tensor4<T> backward(const Tensor4<T>& gy) override {
    Tensor4<T> gx(gy.n, in_h_, in_w_, gy.c);
    for (int i = 0; i < gy.n; ++i)
      for (int yy = 0; yy < gy.h; ++yy)
        for (int xx = 0; xx < gy.w; ++xx) {
          const T* src = gy.pixel(i, yy, xx);
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              T* dst = gx.pixel(i, yy * 2 + dy, xx * 2 + dx);
              for (int ch = 0; ch < gy.c; ++ch) dst[ch] += src[ch] * T(0.25);
            }
        }
    return gx;
  }

 private:
  int in_h_ = 0, in_w_ = 0;
};

/// Ordered chain of named layers.
template <typename T>
class Sequential : public LayerBase<T> {
 public:
  template <typename L, typename... Args>
  L* add(const std::string& name, Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L* raw = layer.get();
    names_.push_back(name);
    layers_.push_back(std::move(layer));
    return raw;
  }

  Tensor4<T> forward(const Tensor4<T>& x, bool train) override {
    Tensor4<T> cur = x;
    for (auto& l : layers_) cur = l->forward(cur, train);
    return cur;
  }

  Tensor4<T> backward(const Tensor4<T>& gy) override {
    Tensor4<T> cur = gy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
    return cur;
  }

  void init(std::mt19937& rng) override {
    for (auto& l : layers_) l->init(rng);
  }

  void collect_params(std::vector<ParamRef<T>>& out, const std::string& prefix) override {
    for (size_t i = 0; i < layers_.size(); ++i)
      layers_[i]->collect_params(out, prefix + "/" + names_[i]);
  }

  void collect_state(std::vector<StateRef<T>>& out, const std::string& prefix) override {
    for (size_t i = 0; i < layers_.size(); ++i)
      layers_[i]->collect_state(out, prefix + "/" + names_[i]);
  }

  size_t size() const { return layers_.size(); }

 private:
  std::vector<std::string> names_;
  std::vector<std::unique_ptr<LayerBase<T>>> layers_;
};

/// conv-norm-ReLU-conv-norm with an identity skip, no activation after the
/// sum. Normalization is per-channel instance norm unless layer_norm is set.
template <typename T>
class ResidualBlock : public LayerBase<T> {
 public:
  explicit ResidualBlock(int channels, bool layer_norm = false)
      : conv1_(channels, channels, 3, 1, 1), conv2_(channels, channels, 3, 1, 1) {
    if (layer_norm) {
      norm1_ = std::make_unique<LayerNorm<T>>(channels);
      norm2_ = std::make_unique<LayerNorm<T>>(channels);
    } else {
      norm1_ = std::make_unique<InstanceNorm<T>>(channels);
      norm2_ = std::make_unique<InstanceNorm<T>>(channels);
    }
  }

  Tensor4<T> forward(const Tensor4<T>& x, bool train) override {
    Tensor4<T> y = norm2_->forward(
        conv2_.forward(relu_.forward(norm1_->forward(conv1_.forward(x, train), train), train), train),
        train);
    for (size_t i = 0; i < y.v.size(); ++i) y.v[i] += x.v[i];
    return y;
  }

  Tensor4<T> backward(const Tensor4<T>& gy) override {
    Tensor4<T> g = conv1_.backward(norm1_->backward(relu_.backward(conv2_.backward(norm2_->backward(gy)))));
    for (size_t i = 0; i < g.v.size(); ++i) g.v[i] += gy.v[i];
    return g;
  }

  void init(std::mt19937& rng) override {
    conv1_.init(rng);
    conv2_.init(rng);
  }

  void collect_params(std::vector<ParamRef<T>>& out, const std::string& prefix) override {
    conv1_.collect_params(out, prefix + "/conv1");
    norm1_->collect_params(out, prefix + "/norm1");
    conv2_.collect_params(out, prefix + "/conv2");
    norm2_->collect_params(out, prefix + "/norm2");
  }

 private:
  Conv2d<T> conv1_;
  Conv2d<T> conv2_;
  std::unique_ptr<LayerBase<T>> norm1_, norm2_;
  ReLU<T> relu_;
};

}  // namespace spatchgan
