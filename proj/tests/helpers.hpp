#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "spatchgan/image_io.hpp"
#include "spatchgan/tensor.hpp"

namespace testutil {

template <typename T>
void fill_uniform(spatchgan::Tensor4<T>& t, std::mt19937& rng, T lo = T(-1), T hi = T(1)) {
  std::uniform_real_distribution<double> d(static_cast<double>(lo), static_cast<double>(hi));
  for (auto& v : t.v) v = static_cast<T>(d(rng));
}

template <typename T = float>
spatchgan::Tensor4<T> random_tensor(int n, int h, int w, int c, uint32_t seed, T lo = T(-1),
                                    T hi = T(1)) {
  spatchgan::Tensor4<T> t(n, h, w, c);
  std::mt19937 rng(seed);
  fill_uniform(t, rng, lo, hi);
  return t;
}

/// Fresh empty directory under the system temp root, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    namespace fs = std::filesystem;
    path_ = (fs::temp_directory_path() / (tag + "-" + std::to_string(counter_++))).string();
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::string& path() const { return path_; }
  std::string file(const std::string& name) const {
    return (std::filesystem::path(path_) / name).string();
  }

 private:
  static inline int counter_ = 0;
  std::string path_;
};

/// Writes a small solid-color PNG, handy for dataset fixtures.
inline void write_solid_png(const std::string& path, int w, int h, uint8_t r, uint8_t g,
                            uint8_t b) {
  spatchgan::Image8 img;
  img.w = w;
  img.h = h;
  img.px.resize(static_cast<size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      uint8_t* p = img.pixel(x, y);
      p[0] = r;
      p[1] = g;
      p[2] = b;
    }
  spatchgan::write_png(path, img);
}

}  // namespace testutil
