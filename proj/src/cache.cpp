#include "odp/cache.hpp"

#include <bit>
#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "odp/errors.hpp"

namespace odp {

namespace fs = std::filesystem;

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= 0x100000001b3ULL;
  }
  return state;
}

std::uint64_t file_digest(const fs::path& path, std::uint64_t state) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for hashing: " + path.string());
  char buf[1 << 16];
  while (f.read(buf, sizeof buf) || f.gcount() > 0) {
    state = fnv1a64(std::string_view(buf, static_cast<std::size_t>(f.gcount())), state);
  }
  return state;
}

std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[i] = kDigits[v & 0xF];
  return out;
}

ScoreCache::ScoreCache(fs::path file) : file_(std::move(file)) {
  std::ifstream f(file_);
  if (!f) return;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception&) {
    return;  // corrupt cache: start empty, the next save overwrites it
  }
  if (!doc.is_object()) return;
  for (const auto& [key, entry] : doc.items()) {
    if (!entry.is_object() || !entry.contains("bits")) continue;
    const auto bits = std::stoull(entry["bits"].get<std::string>(), nullptr, 16);
    entries_[key] = CachedScore{std::bit_cast<double>(bits), entry.value("degenerate", false)};
  }
}

std::optional<CachedScore> ScoreCache::find(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ScoreCache::put(const std::string& key, CachedScore score) { entries_[key] = score; }

void ScoreCache::save() const {
  fs::create_directories(file_.parent_path());
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [key, s] : entries_) {
    doc[key] = {{"bits", hex64(std::bit_cast<std::uint64_t>(s.value))}, {"value", s.value}, {"degenerate", s.degenerate}};
  }
  const fs::path tmp = file_.string() + ".tmp";
  {
    std::ofstream f(tmp);
    if (!f) throw IoError("cannot write cache file: " + tmp.string());
    f << doc.dump(1) << '\n';
  }
  fs::rename(tmp, file_);
}

fs::path ScoreCache::default_dir(const fs::path& manifest_path) {
  if (const char* env = std::getenv("ODP_CACHE_DIR"); env && *env) return fs::path(env);
  return fs::absolute(manifest_path).parent_path() / ".odp_cache";
}

}  // namespace odp
