#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spatchgan/errors.hpp"

namespace spatchgan {

/// 4-axis activation block in NHWC order (batch, height, width, channel).
/// Channel is the fastest-moving axis, so one spatial position's channel
/// vector is contiguous. Rank-2 data (e.g. statistic vectors) uses h=w=1.
template <typename T>
struct Tensor4 {
  int n = 0, h = 0, w = 0, c = 0;
  std::vector<T> v;

  Tensor4() = default;
  Tensor4(int n_, int h_, int w_, int c_)
      : n(n_), h(h_), w(w_), c(c_), v(static_cast<size_t>(n_) * h_ * w_ * c_, T(0)) {}

  static Tensor4 zeros_like(const Tensor4& o) { return Tensor4(o.n, o.h, o.w, o.c); }

  size_t size() const { return v.size(); }
  bool empty() const { return v.empty(); }

  T* data() { return v.data(); }
  const T* data() const { return v.data(); }

  T& at(int i, int y, int x, int ch) {
    return v[((static_cast<size_t>(i) * h + y) * w + x) * c + ch];
  }
  const T& at(int i, int y, int x, int ch) const {
    return v[((static_cast<size_t>(i) * h + y) * w + x) * c + ch];
  }

  /// Pointer to the channel vector at (i, y, x).
  T* pixel(int i, int y, int x) { return v.data() + ((static_cast<size_t>(i) * h + y) * w + x) * c; }
  const T* pixel(int i, int y, int x) const {
    return v.data() + ((static_cast<size_t>(i) * h + y) * w + x) * c;
  }

  size_t sample_stride() const { return static_cast<size_t>(h) * w * c; }

  bool same_shape(const Tensor4& o) const { return n == o.n && h == o.h && w == o.w && c == o.c; }

  std::string shape_str() const {
    return "[" + std::to_string(n) + "," + std::to_string(h) + "," + std::to_string(w) + "," +
           std::to_string(c) + "]";
  }

  void fill(T value) { std::fill(v.begin(), v.end(), value); }

  bool all_finite() const {
    for (const T& x : v)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }

  /// Returns a tensor holding only sample i (batch axis of size 1).
  Tensor4 slice_sample(int i) const {
    Tensor4 out(1, h, w, c);
    std::copy(v.begin() + static_cast<ptrdiff_t>(i * sample_stride()),
              v.begin() + static_cast<ptrdiff_t>((i + 1) * sample_stride()), out.v.begin());
    return out;
  }
};

template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

/// Axes given as -1 match any extent.
template <typename T>
void require_shape(const Tensor4<T>& got, int n, int h, int w, int c, const char* where) {
  auto bad = [](int want, int have) { return want >= 0 && want != have; };
  if (bad(n, got.n) || bad(h, got.h) || bad(w, got.w) || bad(c, got.c)) {
    auto dim = [](int want) { return want < 0 ? std::string("*") : std::to_string(want); };
    throw ShapeError(std::string(where) + ": expected [" + dim(n) + "," + dim(h) + "," + dim(w) +
                     "," + dim(c) + "], received " + got.shape_str());
  }
}

}  // namespace spatchgan
