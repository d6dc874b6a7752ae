#pragma once

#include <cstdint>
#include <cstdio>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spatchgan/errors.hpp"
#include "spatchgan/layers.hpp"
#include "spatchgan/resize.hpp"
#include "spatchgan/tensor.hpp"

namespace spatchgan {

/// Deterministic map from image batches to d-dimensional rows. The tag
/// commits to the exact weights (hash suffix), so reports carry enough
/// context to keep scores from different embedders apart.
class EmbeddingModel {
 public:
  virtual ~EmbeddingModel() = default;
  virtual const std::string& tag() const = 0;
  virtual int dim() const = 0;
  /// images: [n,h,w,3] in [-1, 1], any spatial size (resized internally).
  virtual Eigen::MatrixXd embed(const Tensor4<float>& images) = 0;
};

namespace detail {

inline uint64_t fnv1a64_bytes(const void* data, size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 1469598103934665603ULL;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace detail

/// Desk-scale embedder: fixed-seed random conv net, 64x64 input, three
/// stride-2 stages, global average pool to 64 dims. Useful for relative
/// comparisons only; scores are not comparable to any external benchmark.
class ToyConvEmbedder : public EmbeddingModel {
 public:
  static constexpr int kInputSize = 64;
  static constexpr int kDim = 64;

  ToyConvEmbedder()
      : conv1_(3, 16, 3, 2, 1), conv2_(16, 32, 3, 2, 1), conv3_(32, kDim, 3, 2, 1) {
    std::mt19937 rng(0x5eed50f7u);
    he_init(conv1_, 3 * 3 * 3, rng);
    he_init(conv2_, 3 * 3 * 16, rng);
    he_init(conv3_, 3 * 3 * 32, rng);
    uint64_t h = 1469598103934665603ULL;
    for (Conv2d<float>* c : {&conv1_, &conv2_, &conv3_}) {
      const auto& w = c->weight().value;
      h ^= detail::fnv1a64_bytes(w.data(), w.size() * sizeof(float));
      h *= 1099511628211ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    tag_ = std::string("toy-conv64-") + buf;
  }

  const std::string& tag() const override { return tag_; }
  int dim() const override { return kDim; }

  Eigen::MatrixXd embed(const Tensor4<float>& images) override {
    if (images.c != 3)
      throw ShapeError("embedder: expected 3-channel input, received " + images.shape_str());
    Eigen::MatrixXd out(images.n, kDim);
    for (int i = 0; i < images.n; ++i) {
      Tensor4<float> x = bilinear_resize(images.slice_sample(i), kInputSize, kInputSize);
      x = relu_.forward(conv1_.forward(x, false), false);
      x = relu_.forward(conv2_.forward(x, false), false);
      x = relu_.forward(conv3_.forward(x, false), false);
      const int hw = x.h * x.w;
      for (int c = 0; c < kDim; ++c) {
        double s = 0;
        for (int p = 0; p < hw; ++p) s += x.v[static_cast<size_t>(p) * kDim + c];
        out(i, c) = s / hw;
      }
    }
    return out;
  }

 private:
  static void he_init(Conv2d<float>& conv, int fan_in, std::mt19937& rng) {
    auto& w = conv.weight().value;
    std::normal_distribution<float> dist(0.f, std::sqrt(2.f / static_cast<float>(fan_in)));
    for (auto& v : w) v = dist(rng);
    std::fill(conv.bias().value.begin(), conv.bias().value.end(), 0.f);
  }

  Conv2d<float> conv1_, conv2_, conv3_;
  ReLU<float> relu_;
  std::string tag_;
};

inline const std::vector<std::string>& embedder_names() {
  static const std::vector<std::string> names = {"toy-conv64"};
  return names;
}

inline std::unique_ptr<EmbeddingModel> make_embedder(const std::string& name) {
  if (name == "toy-conv64") return std::make_unique<ToyConvEmbedder>();
  std::string known;
  for (const auto& n : embedder_names()) {
    if (!known.empty()) known += ", ";
    known += n;
  }
  throw ConfigError("unknown embedder '" + name + "' (registered: " + known + ")");
}

}  // namespace spatchgan
