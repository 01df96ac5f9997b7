#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <regex>
#include <stdexcept>
#include <string>
#include <vector>

#include "sea/log.hpp"

namespace sea {

// One storage location Sea may read from and write to. Priority 0 is the
// fastest cache; the persistent tier carries the largest priority and is the
// flush destination.
struct TierSpec {
  std::filesystem::path root;
  int priority = 0;
  bool writable = false;
  std::uint64_t capacity_hint = 0;  // 0 = unknown; advisory only
  bool persistent = false;

  bool operator==(const TierSpec&) const = default;
};

struct SeaConfig {
  std::filesystem::path mount_dir;
  std::vector<TierSpec> tiers;  // sorted by priority; index == priority
  std::chrono::milliseconds flush_interval{1000};
  // A file is flush-eligible only once its mtime is at least this old, so the
  // flusher does not copy half-written outputs. Drain ignores it.
  std::chrono::milliseconds stability_window{2000};
  LogLevel log_level = LogLevel::info;
  std::filesystem::path stats_path;  // empty = stats not written
  std::filesystem::path config_dir;  // directory the config was loaded from

  int persistent_index() const { return static_cast<int>(tiers.size()) - 1; }
  const TierSpec& persistent_tier() const { return tiers.back(); }

  bool operator==(const SeaConfig& o) const {
    return mount_dir == o.mount_dir && tiers == o.tiers && flush_interval == o.flush_interval &&
           stability_window == o.stability_window && log_level == o.log_level &&
           stats_path == o.stats_path;
  }
};

struct ConfigError : std::runtime_error {
  enum class Kind {
    MissingMount,
    UnknownKey,
    NonexistentDirectory,
    NoWritableTier,
    DuplicatePriority,
    DuplicatePersistent,
    MissingPersistent,
    NestedMount,
    BadValue,
    BadPattern,
    Io,
  };

  ConfigError(Kind k, int line_no, const std::string& msg)
      : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg : msg),
        kind(k),
        line(line_no) {}

  Kind kind;
  int line;  // 1-based; 0 when not tied to a single line
};

// INI grammar: a [sea] section for globals and one [tier.N] section per tier.
// parse_config validates every TierSpec invariant, including that all roots
// and the mountpoint exist and do not nest.
SeaConfig parse_config(const std::string& text);
std::string serialize_config(const SeaConfig& config);
SeaConfig load_config(const std::filesystem::path& file);

// Resolution order for the config file: SEA_CONFIG, then ./sea.ini.
std::filesystem::path default_config_path();

struct CompiledPattern {
  std::regex re;
  std::string source;
};

struct PolicyRules {
  std::vector<CompiledPattern> flush;
  std::vector<CompiledPattern> evict;
  std::vector<CompiledPattern> prefetch;

  bool empty() const { return flush.empty() && evict.empty() && prefetch.empty(); }
};

// One pattern per line; blank lines and '#' comments skipped. Throws
// ConfigError{BadPattern, line} on the first pattern that fails to compile.
std::vector<CompiledPattern> parse_policy_file(const std::string& text);

inline constexpr const char* kFlushListName = ".sea_flushlist";
inline constexpr const char* kEvictListName = ".sea_evictlist";
inline constexpr const char* kPrefetchListName = ".sea_prefetchlist";

// Loads the three policy files from dir. Missing files yield empty lists.
PolicyRules load_policies(const std::filesystem::path& dir);

enum class Disposition { None, Flush, Evict, Move };

struct Classified {
  Disposition action = Disposition::None;
  bool prefetch = false;  // orthogonal to action

  bool operator==(const Classified&) const = default;
};

// Patterns are matched against the full mount-relative logical path, anchored
// at both ends. A path in both the flush and evict sets classifies as Move.
Classified classify(const std::string& logical_path, const PolicyRules& rules);

const char* disposition_name(Disposition d);

}  // namespace sea
