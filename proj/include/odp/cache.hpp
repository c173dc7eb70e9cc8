#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace odp {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ULL);
// FNV-1a over the file's bytes.
std::uint64_t file_digest(const std::filesystem::path& path, std::uint64_t state = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

struct CachedScore {
  double value = 0.0;
  bool degenerate = false;
};

// Persistent score store, one JSON file per dataset. Values are kept as raw
// IEEE-754 bit patterns so a hit returns the exact double that was computed.
// Not thread-safe: the harness writes from one thread after a parallel batch.
class ScoreCache {
 public:
  explicit ScoreCache(std::filesystem::path file);

  std::optional<CachedScore> find(const std::string& key) const;
  void put(const std::string& key, CachedScore score);
  void save() const;
  std::size_t size() const { return entries_.size(); }

  // ODP_CACHE_DIR if set, otherwise .odp_cache beside the manifest.
  static std::filesystem::path default_dir(const std::filesystem::path& manifest_path);

 private:
  std::filesystem::path file_;
  std::map<std::string, CachedScore> entries_;
};

}  // namespace odp
