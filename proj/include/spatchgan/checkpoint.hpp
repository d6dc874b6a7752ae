#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "spatchgan/errors.hpp"

namespace spatchgan {

inline constexpr uint32_t kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[4] = {'S', 'P', 'G', 'K'};

/// On-disk layout (little-endian): magic, u32 version, u64 config hash,
/// u64 iteration, u32 block count, then per block a length-prefixed name,
/// u64 element count, and raw f32 data. Counters that must survive a round
/// trip (optimizer steps) ride along as 1-element blocks.
struct CheckpointBundle {
  uint32_t version = kCheckpointVersion;
  uint64_t config_hash = 0;
  uint64_t iteration = 0;
  std::vector<std::pair<std::string, std::vector<float>>> blocks;

  const std::vector<float>* find(const std::string& name) const {
    for (const auto& b : blocks)
      if (b.first == name) return &b.second;
    return nullptr;
  }
  void add(const std::string& name, std::vector<float> data) {
    blocks.emplace_back(name, std::move(data));
  }
};

namespace detail {

template <typename V>
void write_pod(std::ofstream& os, const V& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V read_pod(std::ifstream& is) {
  V v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!is) throw CheckpointError(CheckpointError::Kind::CorruptLength, "unexpected end of file");
  return v;
}

}  // namespace detail

inline void save_checkpoint(const CheckpointBundle& bundle, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open checkpoint for writing: " + path);
  os.write(kCheckpointMagic, 4);
  detail::write_pod(os, bundle.version);
  detail::write_pod(os, bundle.config_hash);
  detail::write_pod(os, bundle.iteration);
  detail::write_pod(os, static_cast<uint32_t>(bundle.blocks.size()));
  for (const auto& [name, data] : bundle.blocks) {
    detail::write_pod(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_pod(os, static_cast<uint64_t>(data.size()));
    os.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(float)));
  }
  if (!os) throw DataError("short write while saving checkpoint: " + path);
}

inline CheckpointBundle load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw CheckpointError(CheckpointError::Kind::BadMagic, "not a checkpoint file: " + path);
  CheckpointBundle bundle;
  bundle.version = detail::read_pod<uint32_t>(is);
  if (bundle.version != kCheckpointVersion)
    throw CheckpointError(CheckpointError::Kind::VersionMismatch,
                          "checkpoint version " + std::to_string(bundle.version) +
                              ", expected " + std::to_string(kCheckpointVersion));
  bundle.config_hash = detail::read_pod<uint64_t>(is);
  bundle.iteration = detail::read_pod<uint64_t>(is);
  const uint32_t count = detail::read_pod<uint32_t>(is);
  bundle.blocks.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = detail::read_pod<uint32_t>(is);
    if (name_len == 0 || name_len > 4096)
      throw CheckpointError(CheckpointError::Kind::CorruptLength,
                            "implausible block name length " + std::to_string(name_len));
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw CheckpointError(CheckpointError::Kind::CorruptLength, "truncated block name");
    const uint64_t n = detail::read_pod<uint64_t>(is);
    if (n > (uint64_t(1) << 33))
      throw CheckpointError(CheckpointError::Kind::CorruptLength,
                            "implausible block size for '" + name + "'");
    std::vector<float> data(n);
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
    if (!is)
      throw CheckpointError(CheckpointError::Kind::CorruptLength,
                            "truncated data in block '" + name + "'");
    bundle.blocks.emplace_back(std::move(name), std::move(data));
  }
  return bundle;
}

/// Copies bundle blocks into same-named destinations. Every destination must
/// be filled and every block consumed; mismatches raise the distinct error
/// kinds the loader contract names.
inline void apply_blocks(const CheckpointBundle& bundle,
                         const std::vector<std::pair<std::string, std::vector<float>*>>& dests) {
  std::vector<bool> used(bundle.blocks.size(), false);
  for (const auto& [name, vec] : dests) {
    const std::vector<float>* found = nullptr;
    for (size_t i = 0; i < bundle.blocks.size(); ++i) {
      if (bundle.blocks[i].first == name) {
        found = &bundle.blocks[i].second;
        used[i] = true;
        break;
      }
    }
    if (!found)
      throw CheckpointError(CheckpointError::Kind::MissingBlock,
                            "checkpoint lacks block '" + name + "'");
    if (found->size() != vec->size())
      throw CheckpointError(CheckpointError::Kind::SizeMismatch,
                            "block '" + name + "' holds " + std::to_string(found->size()) +
                                " values, model expects " + std::to_string(vec->size()));
    vec->assign(found->begin(), found->end());
  }
  for (size_t i = 0; i < bundle.blocks.size(); ++i)
    if (!used[i])
      throw CheckpointError(CheckpointError::Kind::ExtraBlock,
                            "checkpoint block '" + bundle.blocks[i].first +
                                "' has no destination in this model");
}

}  // namespace spatchgan
