#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "spatchgan/config.hpp"
#include "spatchgan/errors.hpp"
#include "spatchgan/image_io.hpp"
#include "spatchgan/log.hpp"
#include "spatchgan/resize.hpp"
#include "spatchgan/rng.hpp"
#include "spatchgan/tensor.hpp"

namespace spatchgan {

struct DatasetSpec {
  std::string source_dir;
  std::string target_dir;
  AugmentKind augmentation = AugmentKind::None;
  int output_size = 256;
};

/// Sorted listing of a directory's images. If `<dir>/manifest.txt` exists it
/// names the files (one relative path per line) and the listing follows it;
/// otherwise the directory is scanned. At least one entry must decode.
class ImageFolder {
 public:
  explicit ImageFolder(const std::string& dir) : dir_(dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir_)) throw DataError("not a directory: " + dir);
    const fs::path manifest = fs::path(dir_) / "manifest.txt";
    if (fs::is_regular_file(manifest)) {
      std::ifstream is(manifest);
      std::string line;
      while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) files_.push_back((fs::path(dir_) / line).string());
      }
    } else {
      for (const auto& e : fs::directory_iterator(dir_))
        if (e.is_regular_file() && is_image_path(e.path().string()))
          files_.push_back(e.path().string());
      std::sort(files_.begin(), files_.end());
    }
    if (files_.empty()) throw DataError("no images found in " + dir);
    warned_.assign(files_.size(), 0);
    bool any = false;
    for (size_t i = 0; i < files_.size() && !any; ++i) {
      Image8 probe;
      any = load(i, probe);
    }
    if (!any) throw DataError("no decodable images in " + dir);
  }

  size_t size() const { return files_.size(); }
  const std::string& path(size_t i) const { return files_[i]; }
  const std::string& dir() const { return dir_; }

  /// Decodes entry i. Undecodable entries warn once and return false.
  bool load(size_t i, Image8& out) const {
    try {
      out = read_image(files_[i]);
      return true;
    } catch (const DataError& e) {
      if (!warned_[i]) {
        warned_[i] = 1;
        log_warn(std::string("skipping undecodable image: ") + e.what());
      }
      return false;
    }
  }

 private:
  std::string dir_;
  std::vector<std::string> files_;
  mutable std::vector<uint8_t> warned_;
};

/// Test hook pinning the otherwise random augmentation draws. Unset fields
/// take neutral values (offset 0, no shift, no flip); nothing is drawn from
/// the RNG when a hook is present.
struct AugmentOverride {
  int crop_x = -1, crop_y = -1;
  int shift_x = std::numeric_limits<int>::min(), shift_y = std::numeric_limits<int>::min();
  int flip = -1;  // 0 no, 1 yes
};

namespace detail {

inline void hflip(Tensor4<float>& t) {
  for (int y = 0; y < t.h; ++y)
    for (int x = 0; x < t.w / 2; ++x) {
      float* a = t.pixel(0, y, x);
      float* b = t.pixel(0, y, t.w - 1 - x);
      for (int c = 0; c < t.c; ++c) std::swap(a[c], b[c]);
    }
}

inline Tensor4<float> crop(const Tensor4<float>& t, int y0, int x0, int size) {
  Tensor4<float> out(1, size, size, t.c);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const float* src = t.pixel(0, y0 + y, x0 + x);
      float* dst = out.pixel(0, y, x);
      for (int c = 0; c < t.c; ++c) dst[c] = src[c];
    }
  return out;
}

/// Shift by (sx, sy) pixels (positive = content moves right/down), edge rows
/// and columns replicated into the uncovered band.
inline Tensor4<float> shift_replicate(const Tensor4<float>& t, int sx, int sy) {
  Tensor4<float> out(1, t.h, t.w, t.c);
  for (int y = 0; y < t.h; ++y) {
    const int yy = std::clamp(y - sy, 0, t.h - 1);
    for (int x = 0; x < t.w; ++x) {
      const int xx = std::clamp(x - sx, 0, t.w - 1);
      const float* src = t.pixel(0, yy, xx);
      float* dst = out.pixel(0, y, x);
      for (int c = 0; c < t.c; ++c) dst[c] = src[c];
    }
  }
  return out;
}

}  // namespace detail

/// Random-crop recipe: resize square to out_size * 286/256 (the classic
/// 286-for-256 margin, scaled so smaller outputs keep the same proportions),
/// random crop, random horizontal flip, map to [-1, 1]. Draw order when no
/// hook forces values: crop_y, crop_x, flip.
inline Tensor4<float> augment_anime(const Image8& img, int out_size, std::mt19937& rng,
                                    const AugmentOverride* forced = nullptr) {
  const int resized = static_cast<int>(std::llround(out_size * 286.0 / 256.0));
  Tensor4<float> t = bilinear_resize(image_to_float(img), resized, resized);
  const int span = resized - out_size;
  int cy = 0, cx = 0, flip = 0;
  if (forced) {
    cy = forced->crop_y >= 0 ? forced->crop_y : 0;
    cx = forced->crop_x >= 0 ? forced->crop_x : 0;
    flip = forced->flip == 1 ? 1 : 0;
  } else {
    std::uniform_int_distribution<int> dc(0, span);
    cy = dc(rng);
    cx = dc(rng);
    flip = std::uniform_int_distribution<int>(0, 1)(rng);
  }
  if (cy > span || cx > span)
    throw DataError("augment: crop offset (" + std::to_string(cx) + "," + std::to_string(cy) +
                    ") exceeds margin " + std::to_string(span));
  Tensor4<float> out = detail::crop(t, cy, cx, out_size);
  if (flip) detail::hflip(out);
  to_unit_range(out);
  return out;
}

/// Face-photo recipe: center crop 178, resize to out_size, integer shift up
/// to 13 px (scaled by out_size/256) with edge replication, random flip, map
/// to [-1, 1]. Draw order: shift_x, shift_y, flip.
inline Tensor4<float> augment_celeba(const Image8& img, int out_size, std::mt19937& rng,
                                     const AugmentOverride* forced = nullptr) {
  constexpr int kCrop = 178;
  if (img.w < kCrop || img.h < kCrop)
    throw DataError("augment: image " + std::to_string(img.w) + "x" + std::to_string(img.h) +
                    " smaller than the " + std::to_string(kCrop) + " center crop");
  Tensor4<float> t = image_to_float(img);
  const int y0 = (img.h - kCrop) / 2;
  const int x0 = (img.w - kCrop) / 2;
  t = detail::crop(t, y0, x0, kCrop);
  t = bilinear_resize(t, out_size, out_size);
  const int max_shift = static_cast<int>(std::llround(13.0 * out_size / 256.0));
  int sx = 0, sy = 0, flip = 0;
  if (forced) {
    sx = forced->shift_x == std::numeric_limits<int>::min() ? 0 : forced->shift_x;
    sy = forced->shift_y == std::numeric_limits<int>::min() ? 0 : forced->shift_y;
    flip = forced->flip == 1 ? 1 : 0;
  } else {
    std::uniform_int_distribution<int> ds(-max_shift, max_shift);
    sx = ds(rng);
    sy = ds(rng);
    flip = std::uniform_int_distribution<int>(0, 1)(rng);
  }
  if (sx != 0 || sy != 0) t = detail::shift_replicate(t, sx, sy);
  if (flip) detail::hflip(t);
  to_unit_range(t);
  return t;
}

/// Deterministic path: resize to out_size, map to [-1, 1]. Used for eval and
/// translation inputs.
inline Tensor4<float> augment_none(const Image8& img, int out_size) {
  Tensor4<float> t = bilinear_resize(image_to_float(img), out_size, out_size);
  to_unit_range(t);
  return t;
}

inline Tensor4<float> apply_augmentation(AugmentKind kind, const Image8& img, int out_size,
                                         std::mt19937& rng,
                                         const AugmentOverride* forced = nullptr) {
  switch (kind) {
    case AugmentKind::Anime: return augment_anime(img, out_size, rng, forced);
    case AugmentKind::Celeba: return augment_celeba(img, out_size, rng, forced);
    default: return augment_none(img, out_size);
  }
}

/// Paired source/target batches with independent reshuffled epochs per
/// domain. Every batch is a pure function of (seed, iteration): epoch
/// permutations come from the epoch number and augmentation draws from the
/// schedule position, so a resumed run replays the identical stream.
/// Undecodable entries advance the schedule position (possibly duplicating a
/// neighbor inside one batch) and warn once per file.
class BatchIterator {
 public:
  BatchIterator(const DatasetSpec& spec, int batch_size, uint64_t seed)
      : spec_(spec),
        batch_(batch_size),
        seed_(seed),
        src_(spec.source_dir),
        tgt_(spec.target_dir) {
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  }

  std::pair<Tensor4<float>, Tensor4<float>> batch_at(uint64_t iter) {
    return {domain_batch(src_, 0, iter), domain_batch(tgt_, 1, iter)};
  }

  std::pair<Tensor4<float>, Tensor4<float>> next() { return batch_at(counter_++); }
  void seek(uint64_t iter) { counter_ = iter; }

  const ImageFolder& source() const { return src_; }
  const ImageFolder& target() const { return tgt_; }

 private:
  const std::vector<size_t>& permutation(int domain, uint64_t epoch, size_t n) {
    auto& slot = perm_[domain];
    if (slot.epoch != epoch || slot.order.size() != n) {
      slot.epoch = epoch;
      slot.order.resize(n);
      for (size_t i = 0; i < n; ++i) slot.order[i] = i;
      std::mt19937 rng = make_rng(seed_, {kStreamEpochShuffle, static_cast<uint64_t>(domain), epoch});
      std::shuffle(slot.order.begin(), slot.order.end(), rng);
    }
    return slot.order;
  }

  Tensor4<float> domain_batch(const ImageFolder& folder, int domain, uint64_t iter) {
    Tensor4<float> out(batch_, spec_.output_size, spec_.output_size, 3);
    const size_t n = folder.size();
    for (int s = 0; s < batch_; ++s) {
      uint64_t pos = iter * static_cast<uint64_t>(batch_) + static_cast<uint64_t>(s);
      Image8 img;
      size_t attempts = 0;
      for (;;) {
        const std::vector<size_t>& perm = permutation(domain, pos / n, n);
        if (folder.load(perm[pos % n], img)) break;
        if (++attempts > n)
          throw DataError("no decodable images left in " + folder.dir());
        ++pos;
      }
      std::mt19937 rng = make_rng(seed_, {kStreamAugment, static_cast<uint64_t>(domain), pos});
      Tensor4<float> one = apply_augmentation(spec_.augmentation, img, spec_.output_size, rng);
      std::copy(one.v.begin(), one.v.end(), out.v.begin() + s * out.sample_stride());
    }
    return out;
  }

  DatasetSpec spec_;
  int batch_;
  uint64_t seed_;
  ImageFolder src_, tgt_;
  uint64_t counter_ = 0;
  struct PermCache {
    uint64_t epoch = ~uint64_t(0);
    std::vector<size_t> order;
  } perm_[2];
};

}  // namespace spatchgan
