// The `sea` command: runs an unmodified program under interception, drains
// the caches when it exits, and ships the doctor/status maintenance views.

#include <signal.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sea/config.hpp"
#include "sea/flusher.hpp"
#include "sea/fsutil.hpp"
#include "sea/log.hpp"
#include "sea/namespace_view.hpp"
#include "sea/process.hpp"
#include "sea/stats.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfigInvalid = 101;
constexpr int kExitSpawnFailed = 102;
constexpr int kExitDrainFailed = 103;

std::atomic<int> g_drain_interrupts{0};

void drain_interrupt(int) { g_drain_interrupts.fetch_add(1); }

std::string preload_value(const fs::path& shim) {
  if (const char* existing = ::getenv("LD_PRELOAD"); existing && *existing)
    return shim.string() + ":" + existing;
  return shim.string();
}

int cmd_launch(const fs::path& config_path, const std::string& shim_override, bool no_flush,
               bool prefetch, int verbosity, bool dry_run,
               const std::vector<std::string>& command) {
  fs::path shim = shim_override.empty() ? sea::locate_shim() : fs::path(shim_override);

  if (dry_run) {
    std::printf("config: %s%s\n", config_path.string().c_str(),
                fs::exists(config_path) ? "" : " (missing)");
    std::printf("shim:   %s%s\n", shim.string().c_str(), shim.empty() ? "(not found)" : "");
    std::printf("flush:  %s\nprefetch: %s\n", no_flush ? "off" : "on", prefetch ? "on" : "off");
    std::printf("command:");
    for (const auto& a : command) std::printf(" %s", a.c_str());
    std::printf("\n");
    return 0;
  }

  if (command.empty()) {
    std::fprintf(stderr, "sea: no command given (use: sea launch -- CMD ARGS...)\n");
    return kExitConfigInvalid;
  }

  sea::SeaConfig config;
  try {
    config = sea::load_config(config_path);
    sea::load_policies(config.config_dir);  // surface bad patterns before spawning
  } catch (const std::exception& e) {
    std::fprintf(stderr, "sea: invalid configuration: %s\n", e.what());
    return kExitConfigInvalid;
  }
  if (verbosity >= 2) config.log_level = sea::LogLevel::debug;
  else if (verbosity == 1) config.log_level = sea::LogLevel::info;
  sea::set_log_level(config.log_level);

  if (shim.empty() || !fs::exists(shim)) {
    std::fprintf(stderr, "sea: shim library not found (set SEA_SHIM or --shim)\n");
    return kExitSpawnFailed;
  }

  sea::Spawn spawn;
  spawn.argv = command;
  spawn.env.emplace_back("LD_PRELOAD", preload_value(shim));
  spawn.env.emplace_back("SEA_CONFIG", fs::absolute(config_path).string());
  if (!no_flush || prefetch) {
    spawn.env.emplace_back("SEA_MASTER", "1");
    if (no_flush) spawn.env.emplace_back("SEA_FLUSH", "0");
    if (prefetch) spawn.env.emplace_back("SEA_PREFETCH", "1");
  }
  if (verbosity >= 2) spawn.env.emplace_back("SEA_LOG", "debug");
  else if (verbosity == 1) spawn.env.emplace_back("SEA_LOG", "info");

  sea::ExitStatus child = sea::run_forwarding_signals(spawn);
  if (!child.signaled && child.code == 127) {
    // exec failure surfaced by the child stub
    return kExitSpawnFailed;
  }

  if (no_flush) return child.shell_code();

  // Drain runs in this process regardless of how the child died, so results
  // survive application crashes. A second interrupt aborts it.
  g_drain_interrupts.store(0);
  struct sigaction sa {};
  sa.sa_handler = drain_interrupt;
  sigemptyset(&sa.sa_mask);
  struct sigaction old_int {};
  ::sigaction(SIGINT, &sa, &old_int);

  sea::DrainSummary summary;
  try {
    summary = sea::drain(config, sea::load_policies(config.config_dir),
                         [] { return g_drain_interrupts.load() > 1; });
  } catch (const std::exception& e) {
    summary.errors.push_back(e.what());
  }
  ::sigaction(SIGINT, &old_int, nullptr);
  sea::report_drain(summary, config);

  if (!summary.ok() && child.success()) return kExitDrainFailed;
  return child.shell_code();
}

int cmd_doctor(const fs::path& config_path) {
  std::printf("sea doctor\n==========\n");
  sea::SeaConfig config;
  try {
    config = sea::load_config(config_path);
  } catch (const std::exception& e) {
    std::printf("FAIL config %s: %s\n", config_path.string().c_str(), e.what());
    return 1;
  }
  std::printf("OK   config %s (%zu tiers, mount=%s)\n", config_path.string().c_str(),
              config.tiers.size(), config.mount_dir.string().c_str());

  bool failed = false;
  for (const auto& tier : config.tiers) {
    std::uint64_t free = sea::free_bytes(tier.root);
    fs::path probe = tier.root / (std::string(".probe") + sea::kTmpMarker +
                                  std::to_string(::getpid()));
    auto t0 = std::chrono::steady_clock::now();
    bool wrote = false, read_back = false;
    {
      std::error_code ec;
      sea::write_text_file(probe, "sea-doctor");
      wrote = fs::exists(probe, ec);
      if (wrote) read_back = sea::read_text_file(probe) == "sea-doctor";
      fs::remove(probe, ec);
    }
    auto us = std::chrono::duration_cast<std::chrono::microseconds>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
    if (tier.writable && !(wrote && read_back)) {
      std::printf("FAIL tier.%d %s: marked writable but probe write failed\n", tier.priority,
                  tier.root.string().c_str());
      failed = true;
    } else {
      std::printf("OK   tier.%d %s: %s, probe %lld us, %.1f MiB free%s\n", tier.priority,
                  tier.root.string().c_str(), tier.writable ? "writable" : "read-only",
                  static_cast<long long>(us), static_cast<double>(free) / (1 << 20),
                  tier.persistent ? ", persistent" : "");
    }
  }

  try {
    sea::PolicyRules rules = sea::load_policies(config.config_dir);
    if (rules.flush.empty() && rules.evict.empty())
      std::printf("WARN policies: empty policy (no flushing will occur)\n");
    else
      std::printf("OK   policies: %zu flush, %zu evict, %zu prefetch patterns\n",
                  rules.flush.size(), rules.evict.size(), rules.prefetch.size());
  } catch (const std::exception& e) {
    std::printf("FAIL policies: %s\n", e.what());
    failed = true;
  }
  return failed ? 1 : 0;
}

int cmd_status(const fs::path& config_path) {
  sea::SeaConfig config;
  sea::PolicyRules rules;
  try {
    config = sea::load_config(config_path);
    rules = sea::load_policies(config.config_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "sea: %s\n", e.what());
    return 1;
  }

  sea::NamespaceView view = sea::scan_namespace(config);
  const int persistent = config.persistent_index();
  std::vector<std::uint64_t> count(config.tiers.size(), 0), bytes(config.tiers.size(), 0);
  std::uint64_t pending = 0;
  for (const auto& [logical, locs] : view.entries) {
    for (const auto& l : locs) {
      count[static_cast<size_t>(l.tier)]++;
      bytes[static_cast<size_t>(l.tier)] += l.size;
    }
    auto cls = sea::classify(logical, rules);
    bool has_cache_copy =
        std::any_of(locs.begin(), locs.end(),
                    [&](const sea::FileLocation& l) { return l.tier != persistent; });
    if (has_cache_copy &&
        (cls.action == sea::Disposition::Flush || cls.action == sea::Disposition::Move) &&
        sea::is_dirty(locs, config))
      pending++;
  }
  for (const auto& tier : config.tiers)
    std::printf("tier.%d %s: %llu files, %llu bytes%s\n", tier.priority,
                tier.root.string().c_str(),
                static_cast<unsigned long long>(count[static_cast<size_t>(tier.priority)]),
                static_cast<unsigned long long>(bytes[static_cast<size_t>(tier.priority)]),
                tier.persistent ? " (persistent)" : "");
  std::printf("pending-flush: %llu\n", static_cast<unsigned long long>(pending));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sea: transparent tiered-storage redirection for unmodified programs"};
  app.require_subcommand(1);

  std::string config_opt;
  std::string shim_opt;
  bool no_flush = false, prefetch = false, dry_run = false;
  int verbosity = 0;
  std::vector<std::string> command;

  auto* launch = app.add_subcommand(
      "launch", "Run CMD under Sea interception, then drain caches.\n"
                "Exit codes: 0 ok; child's code on child failure; 101 invalid\n"
                "config; 102 spawn failure; 103 drain errors after a clean run.");
  launch->add_option("--config", config_opt, "Path to sea.ini (default: $SEA_CONFIG or ./sea.ini)");
  launch->add_option("--shim", shim_opt, "Path to libsea_shim.so");
  launch->add_flag("--no-flush", no_flush, "Skip the flusher thread and the final drain");
  launch->add_flag("--prefetch", prefetch, "Start the prefetch thread in the master process");
  launch->add_flag("-v", verbosity, "Increase verbosity (-v info, -vv debug)");
  launch->add_flag("--dry-run", dry_run, "Print the launch plan without running anything");
  launch->add_option("command", command, "Command to run (after --)")->allow_extra_args(true);

  auto* doctor = app.add_subcommand("doctor", "Validate config, probe tiers, check policies");
  doctor->add_option("--config", config_opt, "Path to sea.ini");

  auto* status = app.add_subcommand("status", "Per-tier usage and pending-flush counts");
  status->add_option("--config", config_opt, "Path to sea.ini");

  CLI11_PARSE(app, argc, argv);

  fs::path config_path = config_opt.empty() ? sea::default_config_path() : fs::path(config_opt);

  if (launch->parsed())
    return cmd_launch(config_path, shim_opt, no_flush, prefetch, verbosity, dry_run, command);
  if (doctor->parsed()) return cmd_doctor(config_path);
  if (status->parsed()) return cmd_status(config_path);
  return 0;
}
