#include "sea/namespace_view.hpp"

#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <system_error>

#include "sea/fsutil.hpp"
#include "sea/log.hpp"

namespace sea {

namespace fs = std::filesystem;

std::optional<std::string> normalize_rel(std::string_view rel) {
  std::vector<std::string> parts;
  size_t i = 0;
  while (i <= rel.size()) {
    size_t j = rel.find('/', i);
    if (j == std::string_view::npos) j = rel.size();
    std::string_view seg = rel.substr(i, j - i);
    if (seg.empty() || seg == ".") {
      // skip
    } else if (seg == "..") {
      if (parts.empty()) return std::nullopt;
      parts.pop_back();
    } else {
      parts.emplace_back(seg);
    }
    i = j + 1;
  }
  std::string out;
  for (size_t k = 0; k < parts.size(); ++k) {
    if (k) out += '/';
    out += parts[k];
  }
  return out;
}

std::string normalize_abs(std::string_view path) {
  std::string joined;
  if (!path.empty() && path.front() == '/') {
    joined.assign(path);
  } else {
    char buf[4096];
    if (::getcwd(buf, sizeof(buf)) == nullptr) buf[0] = '\0';
    joined = std::string(buf) + "/" + std::string(path);
  }
  std::vector<std::string> parts;
  size_t i = 1;
  while (i <= joined.size()) {
    size_t j = joined.find('/', i);
    if (j == std::string::npos) j = joined.size();
    std::string seg = joined.substr(i, j - i);
    if (seg.empty() || seg == ".") {
    } else if (seg == "..") {
      if (!parts.empty()) parts.pop_back();
    } else {
      parts.push_back(std::move(seg));
    }
    i = j + 1;
  }
  std::string out;
  for (const auto& p : parts) out += "/" + p;
  return out.empty() ? "/" : out;
}

namespace {

// If `abs` equals prefix or lives under it, returns the remainder (no leading
// slash).
std::optional<std::string> strip_prefix(const std::string& abs, const std::string& prefix) {
  if (abs.size() < prefix.size() || abs.compare(0, prefix.size(), prefix) != 0)
    return std::nullopt;
  if (abs.size() == prefix.size()) return std::string();
  if (abs[prefix.size()] != '/') return std::nullopt;
  return abs.substr(prefix.size() + 1);
}

struct timespec stat_mtime(const struct stat& st) { return st.st_mtim; }

constexpr std::uint64_t kFreeSpaceMargin = 4ull << 20;

}  // namespace

bool mtime_less(const struct timespec& a, const struct timespec& b) {
  if (a.tv_sec != b.tv_sec) return a.tv_sec < b.tv_sec;
  return a.tv_nsec < b.tv_nsec;
}

std::optional<MaskedPath> mask_path(const std::string& physical, const SeaConfig& config) {
  std::string mount = normalize_abs(config.mount_dir.string());
  if (auto rel = strip_prefix(physical, mount)) return MaskedPath{*rel, -1};
  for (const auto& t : config.tiers) {
    if (auto rel = strip_prefix(physical, normalize_abs(t.root.string())))
      return MaskedPath{*rel, t.priority};
  }
  return std::nullopt;
}

fs::path unmask(std::string_view logical, int tier, const SeaConfig& config) {
  const fs::path& root = config.tiers.at(static_cast<size_t>(tier)).root;
  if (logical.empty()) return root;
  return root / fs::path(logical);
}

NamespaceView scan_namespace(const SeaConfig& config) {
  NamespaceView view;
  for (const auto& tier : config.tiers) {
    std::error_code ec;
    for (auto it = fs::recursive_directory_iterator(tier.root, ec);
         it != fs::recursive_directory_iterator(); it.increment(ec)) {
      if (ec) break;
      std::error_code tec;
      if (!it->is_regular_file(tec)) continue;
      std::string name = it->path().filename().string();
      if (is_internal_name(name)) continue;
      struct stat st {};
      if (::stat(it->path().c_str(), &st) != 0) continue;
      FileLocation loc;
      loc.logical = it->path().lexically_relative(tier.root).generic_string();
      loc.tier = tier.priority;
      loc.size = static_cast<std::uint64_t>(st.st_size);
      loc.mtime = stat_mtime(st);
      view.entries[loc.logical].push_back(std::move(loc));
    }
  }
  for (auto& [path, locs] : view.entries)
    std::sort(locs.begin(), locs.end(),
              [](const FileLocation& a, const FileLocation& b) { return a.tier < b.tier; });
  return view;
}

std::vector<FileLocation> probe_locations(const std::string& logical, const SeaConfig& config) {
  std::vector<FileLocation> locs;
  for (const auto& tier : config.tiers) {
    fs::path p = unmask(logical, tier.priority, config);
    struct stat st {};
    if (::stat(p.c_str(), &st) != 0) continue;
    FileLocation loc;
    loc.logical = logical;
    loc.tier = tier.priority;
    loc.size = static_cast<std::uint64_t>(st.st_size);
    loc.is_dir = S_ISDIR(st.st_mode);
    loc.mtime = stat_mtime(st);
    locs.push_back(std::move(loc));
  }
  return locs;
}

bool is_dirty(const std::vector<FileLocation>& locs, const SeaConfig& config) {
  const int persistent = config.persistent_index();
  const FileLocation* cached = nullptr;
  const FileLocation* durable = nullptr;
  for (const auto& l : locs) {
    if (l.tier == persistent) durable = &l;
    else if (!cached || mtime_less(cached->mtime, l.mtime)) cached = &l;
  }
  if (!cached) return false;
  if (!durable) return true;
  return mtime_less(durable->mtime, cached->mtime);
}

std::optional<fs::path> resolve_read(const std::string& logical, const NamespaceView& view,
                                     const SeaConfig& config) {
  const auto* locs = view.locate(logical);
  if (!locs || locs->empty()) return std::nullopt;
  int best = locs->front().tier;
  for (const auto& l : *locs) best = std::min(best, l.tier);
  return unmask(logical, best, config);
}

std::optional<fs::path> resolve_read_fs(const std::string& logical, const SeaConfig& config) {
  for (const auto& tier : config.tiers) {
    fs::path p = unmask(logical, tier.priority, config);
    if (::access(p.c_str(), F_OK) == 0) return p;
  }
  return std::nullopt;
}

namespace {

std::optional<WriteResolution> pick_write_tier(const std::string& logical,
                                               std::uint64_t needed_bytes,
                                               const SeaConfig& config) {
  for (const auto& tier : config.tiers) {
    if (!tier.writable) continue;
    std::uint64_t need = needed_bytes + kFreeSpaceMargin;
    if (free_bytes(tier.root) < need) {
      log_debug("tier %d short on space for %s (need %llu)", tier.priority, logical.c_str(),
                static_cast<unsigned long long>(need));
      continue;
    }
    fs::path physical = unmask(logical, tier.priority, config);
    std::error_code ec;
    fs::create_directories(physical.parent_path(), ec);
    if (ec) continue;
    return WriteResolution{physical, tier.priority};
  }
  return std::nullopt;
}

}  // namespace

std::optional<WriteResolution> resolve_write(const std::string& logical,
                                             std::uint64_t needed_bytes, NamespaceView& view,
                                             const SeaConfig& config) {
  auto res = pick_write_tier(logical, needed_bytes, config);
  if (!res) return std::nullopt;
  auto& locs = view.entries[logical];
  auto it = std::find_if(locs.begin(), locs.end(),
                         [&](const FileLocation& l) { return l.tier == res->tier; });
  if (it == locs.end()) {
    FileLocation loc;
    loc.logical = logical;
    loc.tier = res->tier;
    loc.dirty = true;
    locs.push_back(loc);
    std::sort(locs.begin(), locs.end(),
              [](const FileLocation& a, const FileLocation& b) { return a.tier < b.tier; });
  } else {
    it->dirty = true;
  }
  return res;
}

std::optional<WriteResolution> resolve_write_fs(const std::string& logical,
                                                std::uint64_t needed_bytes,
                                                const SeaConfig& config) {
  return pick_write_tier(logical, needed_bytes, config);
}

int mirror_directories(const SeaConfig& config) {
  std::vector<std::string> all_dirs;
  for (const auto& tier : config.tiers) {
    auto dirs = relative_dirs(tier.root);
    all_dirs.insert(all_dirs.end(), dirs.begin(), dirs.end());
  }
  std::sort(all_dirs.begin(), all_dirs.end());
  all_dirs.erase(std::unique(all_dirs.begin(), all_dirs.end()), all_dirs.end());

  int created = 0;
  for (const auto& tier : config.tiers) {
    for (const auto& rel : all_dirs) {
      fs::path p = tier.root / rel;
      std::error_code ec;
      if (fs::is_directory(p, ec)) continue;
      if (!fs::create_directories(p, ec) || ec) {
        throw std::system_error(ec ? ec : std::make_error_code(std::errc::io_error),
                                "mirroring " + rel + " onto tier." +
                                    std::to_string(tier.priority) + " (" + tier.root.string() +
                                    ")");
      }
      // create_directories may make several levels at once; count what exists
      // now versus before by counting the components it created.
      ++created;
    }
  }
  return created;
}

std::optional<std::vector<DirEntry>> list_directory(const std::string& logical_dir,
                                                    const SeaConfig& config) {
  std::map<std::string, DirEntry> merged;
  bool found = false;
  for (const auto& tier : config.tiers) {
    fs::path dir = unmask(logical_dir, tier.priority, config);
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) continue;
    found = true;
    for (auto it = fs::directory_iterator(dir, ec); it != fs::directory_iterator();
         it.increment(ec)) {
      if (ec) break;
      std::string name = it->path().filename().string();
      if (is_internal_name(name)) continue;
      if (merged.count(name)) continue;  // faster tier already supplied it
      struct stat st {};
      if (::stat(it->path().c_str(), &st) != 0) continue;
      DirEntry e;
      e.name = name;
      e.is_dir = S_ISDIR(st.st_mode);
      e.size = static_cast<std::uint64_t>(st.st_size);
      e.mtime = stat_mtime(st);
      e.tier = tier.priority;
      merged.emplace(name, std::move(e));
    }
  }
  if (!found) return std::nullopt;
  std::vector<DirEntry> out;
  out.reserve(merged.size());
  for (auto& [_, e] : merged) out.push_back(std::move(e));
  return out;
}

}  // namespace sea
