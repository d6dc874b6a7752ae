#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <png.h>

#include "spatchgan/errors.hpp"
#include "spatchgan/tensor.hpp"

namespace spatchgan {

/// 8-bit interleaved RGB image. Decoders normalize everything (gray,
/// palette, alpha, 16-bit) to this form.
struct Image8 {
  int w = 0, h = 0;
  std::vector<uint8_t> px;  // h*w*3

  uint8_t* pixel(int y, int x) { return px.data() + (static_cast<size_t>(y) * w + x) * 3; }
  const uint8_t* pixel(int y, int x) const {
    return px.data() + (static_cast<size_t>(y) * w + x) * 3;
  }
};

namespace detail {

inline std::string lower_ext(const std::string& path) {
  const size_t dot = path.rfind('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

inline Image8 read_png(const std::string& path) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw DataError("png decode failed: " + path + " (" + img.message + ")");
  img.format = PNG_FORMAT_RGB;
  Image8 out;
  out.w = static_cast<int>(img.width);
  out.h = static_cast<int>(img.height);
  out.px.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.px.data(), 0, nullptr)) {
    png_image_free(&img);
    throw DataError("png decode failed: " + path + " (" + img.message + ")");
  }
  return out;
}

inline Image8 read_ppm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open image: " + path);
  std::string magic;
  is >> magic;
  if (magic != "P6") throw DataError("unsupported ppm (want P6): " + path);
  auto next_int = [&is, &path]() {
    // skips whitespace and '#' comments
    for (;;) {
      int c = is.peek();
      if (c == '#') {
        std::string line;
        std::getline(is, line);
      } else if (std::isspace(c)) {
        is.get();
      } else {
        break;
      }
    }
    int v = -1;
    is >> v;
    if (!is || v < 0) throw DataError("malformed ppm header: " + path);
    return v;
  };
  const int w = next_int();
  const int h = next_int();
  const int maxval = next_int();
  if (maxval != 255) throw DataError("ppm maxval must be 255: " + path);
  is.get();  // single whitespace after header
  Image8 out;
  out.w = w;
  out.h = h;
  out.px.resize(static_cast<size_t>(w) * h * 3);
  is.read(reinterpret_cast<char*>(out.px.data()), static_cast<std::streamsize>(out.px.size()));
  if (!is) throw DataError("truncated ppm data: " + path);
  return out;
}

}  // namespace detail

inline bool is_image_path(const std::string& path) {
  const std::string ext = detail::lower_ext(path);
  return ext == "png" || ext == "ppm";
}

inline Image8 read_image(const std::string& path) {
  const std::string ext = detail::lower_ext(path);
  if (ext == "png") return detail::read_png(path);
  if (ext == "ppm") return detail::read_ppm(path);
  throw DataError("unsupported image extension: " + path);
}

inline void write_png(const std::string& path, const Image8& img) {
  png_image out;
  std::memset(&out, 0, sizeof(out));
  out.version = PNG_IMAGE_VERSION;
  out.width = static_cast<png_uint_32>(img.w);
  out.height = static_cast<png_uint_32>(img.h);
  out.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&out, path.c_str(), 0, img.px.data(), 0, nullptr))
    throw DataError("png encode failed: " + path + " (" + out.message + ")");
}

inline void write_ppm(const std::string& path, const Image8& img) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open image for writing: " + path);
  os << "P6\n" << img.w << " " << img.h << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.px.data()),
           static_cast<std::streamsize>(img.px.size()));
  if (!os) throw DataError("short write: " + path);
}

inline void write_image(const std::string& path, const Image8& img) {
  const std::string ext = detail::lower_ext(path);
  if (ext == "png")
    write_png(path, img);
  else if (ext == "ppm")
    write_ppm(path, img);
  else
    throw DataError("unsupported image extension: " + path);
}

/// Image to float tensor [1,h,w,3], values kept in byte range [0, 255].
inline Tensor4<float> image_to_float(const Image8& img) {
  Tensor4<float> t(1, img.h, img.w, 3);
  for (size_t i = 0; i < img.px.size(); ++i) t.v[i] = static_cast<float>(img.px[i]);
  return t;
}

/// Byte-range values to the model's [-1, 1]: 0 -> -1, 255 -> +1.
template <typename T>
void to_unit_range(Tensor4<T>& t) {
  for (T& v : t.v) v = v / T(127.5) - T(1);
}

/// One sample of a [-1, 1] tensor back to bytes, clamped.
template <typename T>
Image8 tensor_to_image(const Tensor4<T>& t, int sample = 0) {
  if (t.c != 3) throw ShapeError("tensor_to_image: expected 3 channels, received " + t.shape_str());
  Image8 img;
  img.w = t.w;
  img.h = t.h;
  img.px.resize(static_cast<size_t>(t.w) * t.h * 3);
  const size_t base = sample * t.sample_stride();
  for (size_t i = 0; i < img.px.size(); ++i) {
    const T v = std::clamp(t.v[base + i], T(-1), T(1));
    img.px[i] = static_cast<uint8_t>(std::lround((static_cast<double>(v) + 1.0) * 127.5));
  }
  return img;
}

}  // namespace spatchgan
