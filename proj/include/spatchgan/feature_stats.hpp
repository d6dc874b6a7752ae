#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "spatchgan/errors.hpp"
#include "spatchgan/tensor.hpp"

namespace spatchgan {

/// The three channel-wise statistics computed over all spatial positions of
/// a scale's adapted feature maps. Each statistic maps [n,h,w,c] -> one
/// value per (sample, channel); stddev is uncorrected (divisor h*w).
enum class StatKind { Mean, Max, Stddev };

inline const char* stat_name(StatKind k) {
  switch (k) {
    case StatKind::Mean: return "mean";
    case StatKind::Max: return "max";
    default: return "stddev";
  }
}

/// Per-sample, per-scale statistic vector; length equals the source feature
/// map's channel count.
template <typename T>
struct StatVector {
  int scale_index = 0;
  StatKind kind = StatKind::Mean;
  std::vector<T> values;

  int channels() const { return static_cast<int>(values.size()); }
};

template <typename T>
void validate_feature_map(const Tensor4<T>& fm, int scale_index) {
  if (fm.h < 1 || fm.w < 1 || fm.c < 1)
    throw ShapeError("scale " + std::to_string(scale_index) + ": degenerate feature map " +
                     fm.shape_str());
  for (size_t i = 0; i < fm.v.size(); ++i) {
    if (!std::isfinite(static_cast<double>(fm.v[i])))
      throw NumericsError("scale " + std::to_string(scale_index) +
                          ": non-finite activation in feature map at flat index " +
                          std::to_string(i));
  }
}

/// Cached forward quantities needed to route gradients back into the map.
template <typename T>
struct StatCache {
  StatKind kind = StatKind::Mean;
  std::vector<int> argmax;    // max: first row-major argmax per (sample, channel)
  std::vector<T> mean;        // stddev: per (sample, channel)
  std::vector<T> grad_scale;  // stddev: 1 / (h*w * sqrt(var + eps))
};

namespace detail {

// Epsilon inside the square root of the stddev gradient only; the forward
// value stays the exact root of the uncorrected variance. At zero variance
// the numerator vanishes, so the gradient is 0 rather than NaN.
template <typename T>
constexpr T kStdGradEps = T(1e-8);

}  // namespace detail

/// Batched statistic: out is [n,1,1,c]. The cache enables stat_backward.
template <typename T>
Tensor4<T> stat_forward(const Tensor4<T>& fm, StatKind kind, StatCache<T>* cache = nullptr) {
  const int hw = fm.h * fm.w;
  Tensor4<T> out(fm.n, 1, 1, fm.c);
  if (cache) {
    cache->kind = kind;
    if (kind == StatKind::Max) cache->argmax.assign(static_cast<size_t>(fm.n) * fm.c, 0);
    if (kind == StatKind::Stddev) {
      cache->mean.assign(static_cast<size_t>(fm.n) * fm.c, T(0));
      cache->grad_scale.assign(static_cast<size_t>(fm.n) * fm.c, T(0));
    }
  }
  for (int i = 0; i < fm.n; ++i) {
    const T* xi = fm.data() + i * fm.sample_stride();
    for (int ch = 0; ch < fm.c; ++ch) {
      switch (kind) {
        case StatKind::Mean: {
          T acc = T(0);
          for (int p = 0; p < hw; ++p) acc += xi[static_cast<size_t>(p) * fm.c + ch];
          out.v[static_cast<size_t>(i) * fm.c + ch] = acc / T(hw);
          break;
        }
        case StatKind::Max: {
          T best = xi[ch];
          int best_p = 0;
          for (int p = 1; p < hw; ++p) {
            const T v = xi[static_cast<size_t>(p) * fm.c + ch];
            if (v > best) {
              best = v;
              best_p = p;
            }
          }
          out.v[static_cast<size_t>(i) * fm.c + ch] = best;
          if (cache) cache->argmax[static_cast<size_t>(i) * fm.c + ch] = best_p;
          break;
        }
        case StatKind::Stddev: {
          T mean = T(0);
          for (int p = 0; p < hw; ++p) mean += xi[static_cast<size_t>(p) * fm.c + ch];
          mean /= T(hw);
          T var = T(0);
          for (int p = 0; p < hw; ++p) {
            const T d = xi[static_cast<size_t>(p) * fm.c + ch] - mean;
            var += d * d;
          }
          var /= T(hw);
          out.v[static_cast<size_t>(i) * fm.c + ch] = std::sqrt(var);
          if (cache) {
            cache->mean[static_cast<size_t>(i) * fm.c + ch] = mean;
            cache->grad_scale[static_cast<size_t>(i) * fm.c + ch] =
                T(1) / (T(hw) * std::sqrt(var + detail::kStdGradEps<T>));
          }
          break;
        }
      }
    }
  }
  return out;
}

/// Accumulates d(statistic)/d(fm) * gout into gx. fm must be the forward input.
template <typename T>
void stat_backward(const Tensor4<T>& fm, const StatCache<T>& cache, const Tensor4<T>& gout,
                   Tensor4<T>& gx) {
  const int hw = fm.h * fm.w;
  for (int i = 0; i < fm.n; ++i) {
    const size_t base = i * fm.sample_stride();
    for (int ch = 0; ch < fm.c; ++ch) {
      const T g = gout.v[static_cast<size_t>(i) * fm.c + ch];
      switch (cache.kind) {
        case StatKind::Mean: {
          const T gi = g / T(hw);
          for (int p = 0; p < hw; ++p) gx.v[base + static_cast<size_t>(p) * fm.c + ch] += gi;
          break;
        }
        case StatKind::Max: {
          const int p = cache.argmax[static_cast<size_t>(i) * fm.c + ch];
          gx.v[base + static_cast<size_t>(p) * fm.c + ch] += g;
          break;
        }
        case StatKind::Stddev: {
          const T mean = cache.mean[static_cast<size_t>(i) * fm.c + ch];
          const T scale = cache.grad_scale[static_cast<size_t>(i) * fm.c + ch];
          for (int p = 0; p < hw; ++p) {
            const size_t idx = base + static_cast<size_t>(p) * fm.c + ch;
            gx.v[idx] += g * (fm.v[idx] - mean) * scale;
          }
          break;
        }
      }
    }
  }
}

namespace detail {

template <typename T>
std::vector<StatVector<T>> per_sample(const Tensor4<T>& fm, StatKind kind, int scale_index) {
  validate_feature_map(fm, scale_index);
  Tensor4<T> batched = stat_forward<T>(fm, kind);
  std::vector<StatVector<T>> out(fm.n);
  for (int i = 0; i < fm.n; ++i) {
    out[i].scale_index = scale_index;
    out[i].kind = kind;
    out[i].values.assign(batched.v.begin() + static_cast<size_t>(i) * fm.c,
                         batched.v.begin() + static_cast<size_t>(i + 1) * fm.c);
  }
  return out;
}

}  // namespace detail

/// Channel-wise mean over all spatial positions (global average pooling).
template <typename T>
std::vector<StatVector<T>> channel_mean(const Tensor4<T>& fm, int scale_index = 1) {
  return detail::per_sample(fm, StatKind::Mean, scale_index);
}

/// Channel-wise maximum over all spatial positions (global max pooling).
template <typename T>
std::vector<StatVector<T>> channel_max(const Tensor4<T>& fm, int scale_index = 1) {
  return detail::per_sample(fm, StatKind::Max, scale_index);
}

/// Channel-wise uncorrected standard deviation (divisor h*w, not h*w - 1).
template <typename T>
std::vector<StatVector<T>> channel_stddev(const Tensor4<T>& fm, int scale_index = 1) {
  return detail::per_sample(fm, StatKind::Stddev, scale_index);
}

}  // namespace spatchgan
