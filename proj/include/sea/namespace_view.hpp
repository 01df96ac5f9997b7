#pragma once

#include <cstdint>
#include <ctime>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sea/config.hpp"

namespace sea {

// Logical paths are mount-relative, '/'-separated, with no leading separator
// and no "." / ".." segments. "" names the mountpoint root itself.

// Lexical normalization; rejects paths whose ".." segments escape the root.
std::optional<std::string> normalize_rel(std::string_view rel);

// Absolute lexical normalization against cwd. Never resolves symlinks: Sea
// path detection is a literal prefix match.
std::string normalize_abs(std::string_view path);

struct MaskedPath {
  std::string logical;
  int tier;  // -1 = under the mountpoint, otherwise the tier index
};

// Strips the mount or tier-root prefix from an absolute, normalized path.
// nullopt = not under Sea at all.
std::optional<MaskedPath> mask_path(const std::string& physical, const SeaConfig& config);

std::filesystem::path unmask(std::string_view logical, int tier, const SeaConfig& config);

struct FileLocation {
  std::string logical;
  int tier = 0;
  std::uint64_t size = 0;
  bool is_dir = false;
  bool dirty = false;
  int open_writers = 0;
  struct timespec mtime = {0, 0};
};

bool mtime_less(const struct timespec& a, const struct timespec& b);

// The logical-to-physical map of every file under the mountpoint. Built by
// scanning tier trees, so independent processes share state through the
// filesystem itself rather than shared memory.
struct NamespaceView {
  std::map<std::string, std::vector<FileLocation>> entries;  // per path, ascending tier

  const std::vector<FileLocation>* locate(const std::string& logical) const {
    auto it = entries.find(logical);
    return it == entries.end() ? nullptr : &it->second;
  }
};

// Full scan of all tier trees (regular files only; staging files skipped).
NamespaceView scan_namespace(const SeaConfig& config);

// Existence probe for a single logical path across all tiers; cheap enough
// for per-call use on the interception path.
std::vector<FileLocation> probe_locations(const std::string& logical, const SeaConfig& config);

// A cached copy is dirty when no persistent copy exists or the cache copy's
// mtime is strictly newer than the persistent one's.
bool is_dirty(const std::vector<FileLocation>& locs, const SeaConfig& config);

// Fastest tier holding a copy. nullopt = no tier holds the file.
std::optional<std::filesystem::path> resolve_read(const std::string& logical,
                                                  const NamespaceView& view,
                                                  const SeaConfig& config);
std::optional<std::filesystem::path> resolve_read_fs(const std::string& logical,
                                                     const SeaConfig& config);

struct WriteResolution {
  std::filesystem::path physical;
  int tier;
};

// Fastest writable tier whose filesystem reports enough free space for
// needed_bytes (plus a small margin); falls back tier by tier. Creates the
// physical parent chain on the chosen tier. nullopt = all tiers full.
std::optional<WriteResolution> resolve_write(const std::string& logical,
                                             std::uint64_t needed_bytes, NamespaceView& view,
                                             const SeaConfig& config);
std::optional<WriteResolution> resolve_write_fs(const std::string& logical,
                                                std::uint64_t needed_bytes,
                                                const SeaConfig& config);

// Creates every directory present under any tier root under all other tier
// roots. Returns the number of directories created; 0 on a second call.
// Throws std::system_error naming the tier on permission failures.
int mirror_directories(const SeaConfig& config);

struct DirEntry {
  std::string name;
  bool is_dir = false;
  std::uint64_t size = 0;
  struct timespec mtime = {0, 0};
  int tier = 0;  // tier the metadata was taken from (fastest holding the name)
};

// Union listing over all tiers, deduplicated by name, lexicographic order.
// Metadata comes from the fastest tier holding each entry. nullopt = no tier
// has the directory.
std::optional<std::vector<DirEntry>> list_directory(const std::string& logical_dir,
                                                    const SeaConfig& config);

}  // namespace sea
