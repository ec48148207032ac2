#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "vcell/datastore/dataset.hpp"

namespace vcell::datastore {

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 32;

std::uint64_t fnv1a64(std::string_view bytes);

/// Header (magic "VCSB", version, rows, cols, nnz, checksum) then offsets, indices, values; little-endian.
std::string encode_block(const SparseBlock& block);
/// Verifies the header and checksum.
SparseBlock decode_block(std::string_view bytes);
/// Checksum stored in an encoded block's header.
std::uint64_t block_checksum(std::string_view bytes);

struct ShardEntry {
  std::string file;
  std::uint64_t offset = 0;
  std::uint64_t bytes = 0;
  std::uint32_t cells = 0;
  std::uint64_t checksum = 0;
};

struct ShardManifest {
  std::uint32_t version = kFormatVersion;
  std::vector<std::string> genes;
  Labels labels;
  std::map<GroupKey, ShardEntry> groups;
  std::map<ControlKey, ShardEntry> controls;
};

std::string manifest_to_json(const ShardManifest& m);
/// Rejects duplicate keys and ids outside the label tables.
ShardManifest manifest_from_json(const std::string& text);

/// Writes one shard file per (cell type, perturbation) and per control cell type, then the manifest.
/// Every file goes through a temp name and an atomic rename.
ShardManifest write_dataset(const Dataset& ds, const std::filesystem::path& dir);

/// Read access to a written dataset. Opening verifies that every referenced shard exists and matches its checksum.
class ShardStore {
 public:
  static ShardStore open(const std::filesystem::path& dir, bool verify = true);

  const ShardManifest& manifest() const { return manifest_; }
  const std::filesystem::path& dir() const { return dir_; }

  SparseBlock read_group(const GroupKey& key) const;
  SparseBlock read_control(const ControlKey& key) const;
  Dataset load() const;

 private:
  SparseBlock read_entry(const ShardEntry& e, const std::string& what) const;

  std::filesystem::path dir_;
  ShardManifest manifest_;
};

inline Dataset read_dataset(const std::filesystem::path& dir) { return ShardStore::open(dir).load(); }

/// Writes `text` to `path` through a temp file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view text);
std::string read_file(const std::filesystem::path& path);

}  // namespace vcell::datastore
