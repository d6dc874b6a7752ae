#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "spatchgan/discriminator.hpp"
#include "spatchgan/image_io.hpp"

namespace spatchgan {
namespace detail {

struct Rgb {
  uint8_t r, g, b;
};

class Canvas {
 public:
  Canvas(int w, int h, Rgb bg) : img_{} {
    img_.w = w;
    img_.h = h;
    img_.px.resize(static_cast<size_t>(w) * h * 3);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) set(x, y, bg);
  }

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= img_.w || y >= img_.h) return;
    uint8_t* p = img_.pixel(x, y);
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  void fill_rect(int x0, int y0, int w, int h, Rgb c) {
    for (int y = y0; y < y0 + h; ++y)
      for (int x = x0; x < x0 + w; ++x) set(x, y, c);
  }

  void hline(int x0, int x1, int y, Rgb c, int dash = 0) {
    for (int x = x0; x <= x1; ++x)
      if (dash == 0 || ((x - x0) / dash) % 2 == 0) set(x, y, c);
  }

  void vline(int x, int y0, int y1, Rgb c) {
    for (int y = y0; y <= y1; ++y) set(x, y, c);
  }

  void text(int x, int y, const std::string& s, Rgb c);

  const Image8& image() const { return img_; }

 private:
  Image8 img_;
};

/// 5x7 glyphs, one byte per row, low 5 bits used. Digits, A-Z, and the few
/// separators head labels contain.
inline const uint8_t* glyph5x7(char ch) {
  static const uint8_t digits[10][7] = {
      {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}, {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},
      {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}, {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},
      {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}, {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},
      {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
      {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}, {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}};
  static const uint8_t letters[26][7] = {
      {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}, {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E},
      {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}, {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C},
      {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}, {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10},
      {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}, {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},
      {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}, {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C},
      {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}, {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F},
      {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}, {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11},
      {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10},
      {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}, {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11},
      {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}, {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},
      {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04},
      {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}, {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11},
      {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}};
  static const uint8_t dot[7] = {0, 0, 0, 0, 0, 0x0C, 0x0C};
  static const uint8_t dash[7] = {0, 0, 0, 0x1F, 0, 0, 0};
  static const uint8_t slash[7] = {0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10};
  static const uint8_t colon[7] = {0, 0x0C, 0x0C, 0, 0x0C, 0x0C, 0};
  static const uint8_t blank[7] = {0, 0, 0, 0, 0, 0, 0};
  if (ch >= '0' && ch <= '9') return digits[ch - '0'];
  char up = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (up >= 'A' && up <= 'Z') return letters[up - 'A'];
  switch (ch) {
    case '.': return dot;
    case '-': return dash;
    case '/': return slash;
    case ':': return colon;
    default: return blank;
  }
}

inline void Canvas::text(int x, int y, const std::string& s, Rgb c) {
  for (char ch : s) {
    const uint8_t* rows = glyph5x7(ch);
    for (int r = 0; r < 7; ++r)
      for (int col = 0; col < 5; ++col)
        if (rows[r] & (1u << (4 - col))) set(x + col, y + r, c);
    x += 6;
  }
}

inline Rgb stat_color(const HeadLabel& l) {
  if (!l.has_stat) return {110, 110, 110};
  switch (l.stat) {
    case StatKind::Mean: return {66, 133, 244};
    case StatKind::Max: return {219, 68, 55};
    case StatKind::Stddev: return {244, 180, 0};
  }
  return {110, 110, 110};
}

}  // namespace detail

/// Bar plot of per-head mean discriminator responses, one bar per head,
/// colored by statistic, with reference lines at 0, 0.5, and 1.
inline void save_disc_plot(const std::string& path, const std::vector<HeadLabel>& labels,
                           const std::vector<double>& values) {
  using detail::Rgb;
  if (labels.size() != values.size())
    throw ShapeError("plot: " + std::to_string(labels.size()) + " labels, " +
                     std::to_string(values.size()) + " values");
  size_t max_label = 1;
  for (const auto& l : labels) max_label = std::max(max_label, l.str().size());
  const int slot = std::max<int>(48, 6 * static_cast<int>(max_label) + 12);
  const int left = 56, right = 16, top = 24, bottom = 40;
  const int plot_h = 320;
  const int w = left + slot * static_cast<int>(labels.size()) + right;
  const int h = top + plot_h + bottom;

  double lo = 0.0, hi = 1.0;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double pad = 0.08 * (hi - lo);
  lo -= pad;
  hi += pad;

  detail::Canvas cv(w, h, {255, 255, 255});
  auto ymap = [&](double v) {
    return top + static_cast<int>(std::lround((hi - v) / (hi - lo) * plot_h));
  };

  const Rgb axis{40, 40, 40}, ref{170, 170, 170};
  for (double r : {0.0, 0.5, 1.0}) {
    const int y = ymap(r);
    cv.hline(left, w - right, y, ref, r == 0.0 ? 0 : 4);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.1f", r);
    cv.text(left - 6 * 3 - 6, y - 3, buf, axis);
  }
  cv.vline(left, top, top + plot_h, axis);

  const int y0 = ymap(0.0);
  for (size_t i = 0; i < labels.size(); ++i) {
    const int cx = left + static_cast<int>(i) * slot + slot / 2;
    const int bw = std::min(28, slot - 10);
    const int yv = ymap(values[i]);
    const Rgb c = detail::stat_color(labels[i]);
    if (yv <= y0)
      cv.fill_rect(cx - bw / 2, yv, bw, y0 - yv + 1, c);
    else
      cv.fill_rect(cx - bw / 2, y0, bw, yv - y0 + 1, c);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%.2f", values[i]);
    const int tw = 6 * static_cast<int>(std::string(buf).size());
    cv.text(cx - tw / 2, std::min(yv, y0) - 10, buf, axis);
    const std::string name = labels[i].str();
    cv.text(cx - 3 * static_cast<int>(name.size()), top + plot_h + 8, name, axis);
  }
  write_png(path, cv.image());
}

}  // namespace spatchgan
