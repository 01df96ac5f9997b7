#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sea/config.hpp"
#include "sea/fsutil.hpp"
#include "sea/process.hpp"

namespace seatest {

namespace fs = std::filesystem;

inline fs::path bin_dir() { return sea::self_exe_dir(); }
inline fs::path sea_bin() { return bin_dir() / "sea"; }
inline fs::path bench_bin() { return bin_dir() / "sea-bench"; }
inline fs::path shim_path() { return bin_dir() / ".." / "lib" / "libsea_shim.so"; }

struct TempDir {
  fs::path path;

  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("sea-" + tag + "-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter.fetch_add(1)));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  fs::path operator/(const std::string& rel) const { return path / rel; }
};

// A 2- or 3-tier test configuration with real directories underneath.
struct TestSetup {
  TempDir dir;
  sea::SeaConfig config;

  explicit TestSetup(int n_tiers = 2, const std::string& tag = "cfg") : dir(tag) {
    fs::create_directories(dir / "mnt");
    config.mount_dir = dir / "mnt";
    for (int i = 0; i < n_tiers; ++i) {
      std::string name = "t" + std::to_string(i);
      fs::create_directories(dir / name);
      sea::TierSpec tier;
      tier.root = dir / name;
      tier.priority = i;
      tier.writable = true;
      tier.persistent = (i == n_tiers - 1);
      config.tiers.push_back(tier);
    }
    config.config_dir = dir.path;
    config.log_level = sea::LogLevel::error;
  }

  fs::path tier(int i) const { return config.tiers.at(static_cast<size_t>(i)).root; }
  fs::path persist() const { return config.persistent_tier().root; }
};

inline sea::PolicyRules make_rules(const std::vector<std::string>& flush,
                                   const std::vector<std::string>& evict = {},
                                   const std::vector<std::string>& prefetch = {}) {
  sea::PolicyRules rules;
  auto compile = [](const std::vector<std::string>& in) {
    std::vector<sea::CompiledPattern> out;
    for (const auto& s : in) out.push_back({std::regex(s), s});
    return out;
  };
  rules.flush = compile(flush);
  rules.evict = compile(evict);
  rules.prefetch = compile(prefetch);
  return rules;
}

inline void plant_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

// Relative path -> content for files plus a "<path>/" marker per directory;
// the canonical form used for tree equality checks.
inline std::map<std::string, std::string> tree_signature(const fs::path& root) {
  std::map<std::string, std::string> sig;
  if (!fs::exists(root)) return sig;
  for (auto it = fs::recursive_directory_iterator(root);
       it != fs::recursive_directory_iterator(); ++it) {
    std::string rel = it->path().lexically_relative(root).generic_string();
    if (sea::is_internal_name(it->path().filename().string())) continue;
    if (it->is_directory()) {
      sig[rel + "/"] = "";
    } else if (it->is_regular_file()) {
      sig[rel] = sea::read_text_file(it->path());
    }
  }
  return sig;
}

struct RunResult {
  sea::ExitStatus status;
  std::string out;
  std::string err;
};

// Runs argv with extra env, capturing stdout/stderr through temp files.
inline RunResult run_capture(const std::vector<std::string>& argv,
                             const std::vector<std::pair<std::string, std::string>>& env = {},
                             const std::vector<std::string>& env_unset = {}) {
  TempDir cap("cap");
  sea::Spawn spawn;
  spawn.argv = argv;
  spawn.env = env;
  spawn.env_unset = env_unset;
  spawn.stdout_path = (cap / "out").string();
  spawn.stderr_path = (cap / "err").string();
  RunResult r;
  r.status = sea::run_process(spawn);
  r.out = sea::read_text_file(cap / "out");
  r.err = sea::read_text_file(cap / "err");
  return r;
}

// Environment for running a child under the shim against `config_path`.
inline std::vector<std::pair<std::string, std::string>> shim_env(
    const fs::path& config_path, bool master = true, const std::string& stats = "") {
  std::vector<std::pair<std::string, std::string>> env = {
      {"LD_PRELOAD", shim_path().string()},
      {"SEA_CONFIG", config_path.string()},
  };
  if (master) env.emplace_back("SEA_MASTER", "1");
  if (!stats.empty()) env.emplace_back("SEA_STATS", stats);
  return env;
}

// Writes sea.ini (+ policy lists) describing `setup` into its config_dir so
// subprocesses can load the same configuration.
inline fs::path write_config_file(const TestSetup& setup,
                                  const std::string& flush_list = "",
                                  const std::string& evict_list = "",
                                  const std::string& prefetch_list = "",
                                  int flush_interval_ms = 100, int stability_ms = 2000) {
  sea::SeaConfig cfg = setup.config;
  cfg.flush_interval = std::chrono::milliseconds(flush_interval_ms);
  cfg.stability_window = std::chrono::milliseconds(stability_ms);
  cfg.stats_path = setup.dir / "stats.txt";
  fs::path ini = setup.dir / "sea.ini";
  sea::write_text_file(ini, sea::serialize_config(cfg));
  sea::write_text_file(setup.dir / sea::kFlushListName, flush_list);
  sea::write_text_file(setup.dir / sea::kEvictListName, evict_list);
  sea::write_text_file(setup.dir / sea::kPrefetchListName, prefetch_list);
  return ini;
}

}  // namespace seatest
