#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "spatchgan/errors.hpp"
#include "spatchgan/tensor.hpp"

namespace spatchgan {

/// Bilinear resampling with half-pixel centers and edge clamping, no corner
/// alignment. Convex weights, so outputs stay inside the input value range.
template <typename T>
Tensor4<T> bilinear_resize(const Tensor4<T>& x, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0)
    throw ShapeError("bilinear_resize: target size must be positive, received " +
                     std::to_string(out_h) + "x" + std::to_string(out_w));
  if (x.h == out_h && x.w == out_w) return x;
  Tensor4<T> y(x.n, out_h, out_w, x.c);
  const double scale_y = static_cast<double>(x.h) / out_h;
  const double scale_x = static_cast<double>(x.w) / out_w;
  for (int oy = 0; oy < out_h; ++oy) {
    const double fy = (oy + 0.5) * scale_y - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    const T wy = static_cast<T>(fy - y0);
    int y1 = std::min(y0 + 1, x.h - 1);
    y0 = std::clamp(y0, 0, x.h - 1);
    for (int ox = 0; ox < out_w; ++ox) {
      const double fx = (ox + 0.5) * scale_x - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      const T wx = static_cast<T>(fx - x0);
      int x1 = std::min(x0 + 1, x.w - 1);
      x0 = std::clamp(x0, 0, x.w - 1);
      for (int i = 0; i < x.n; ++i) {
        const T* p00 = x.pixel(i, y0, x0);
        const T* p01 = x.pixel(i, y0, x1);
        const T* p10 = x.pixel(i, y1, x0);
        const T* p11 = x.pixel(i, y1, x1);
        T* out = y.pixel(i, oy, ox);
        for (int ch = 0; ch < x.c; ++ch) {
          const T top = p00[ch] + wx * (p01[ch] - p00[ch]);
          const T bot = p10[ch] + wx * (p11[ch] - p10[ch]);
          out[ch] = top + wy * (bot - top);
        }
      }
    }
  }
  return y;
}

/// Exact 8x bilinear reduction. With half-pixel centers the sample for output
/// cell (oy, ox) falls midway between rows 8*oy+3 and 8*oy+4 (same for
/// columns), so the result is the average of those four pixels. Kept as a
/// dedicated linear op because training needs its transpose.
template <typename T>
Tensor4<T> down8_forward(const Tensor4<T>& x) {
  if (x.h % 8 != 0 || x.w % 8 != 0)
    throw ShapeError("down8: spatial dims must be divisible by 8, received " + x.shape_str());
  const int oh = x.h / 8, ow = x.w / 8;
  Tensor4<T> y(x.n, oh, ow, x.c);
  for (int i = 0; i < x.n; ++i)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const T* p00 = x.pixel(i, 8 * oy + 3, 8 * ox + 3);
        const T* p01 = x.pixel(i, 8 * oy + 3, 8 * ox + 4);
        const T* p10 = x.pixel(i, 8 * oy + 4, 8 * ox + 3);
        const T* p11 = x.pixel(i, 8 * oy + 4, 8 * ox + 4);
        T* out = y.pixel(i, oy, ox);
        for (int ch = 0; ch < x.c; ++ch)
          out[ch] = T(0.25) * (p00[ch] + p01[ch] + p10[ch] + p11[ch]);
      }
  return y;
}

/// Transpose of down8_forward: scatters a quarter of each output gradient to
/// the four source pixels it averaged.
template <typename T>
Tensor4<T> down8_backward(const Tensor4<T>& gy, int in_h, int in_w) {
  if (gy.h * 8 != in_h || gy.w * 8 != in_w)
    throw ShapeError("down8 backward: gradient " + gy.shape_str() + " does not match input " +
                     std::to_string(in_h) + "x" + std::to_string(in_w));
  Tensor4<T> gx(gy.n, in_h, in_w, gy.c);
  gx.fill(T(0));
  for (int i = 0; i < gy.n; ++i)
    for (int oy = 0; oy < gy.h; ++oy)
      for (int ox = 0; ox < gy.w; ++ox) {
        const T* g = gy.pixel(i, oy, ox);
        T* p00 = gx.pixel(i, 8 * oy + 3, 8 * ox + 3);
        T* p01 = gx.pixel(i, 8 * oy + 3, 8 * ox + 4);
        T* p10 = gx.pixel(i, 8 * oy + 4, 8 * ox + 3);
        T* p11 = gx.pixel(i, 8 * oy + 4, 8 * ox + 4);
        for (int ch = 0; ch < gy.c; ++ch) {
          const T q = T(0.25) * g[ch];
          p00[ch] += q;
          p01[ch] += q;
          p10[ch] += q;
          p11[ch] += q;
        }
      }
  return gx;
}

}  // namespace spatchgan
