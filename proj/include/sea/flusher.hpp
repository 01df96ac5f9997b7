#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sea/config.hpp"
#include "sea/namespace_view.hpp"

namespace sea {

enum class TaskKind { Flush, Evict, Move, Prefetch };

const char* task_kind_name(TaskKind k);

struct FlushTask {
  std::string logical;
  TaskKind kind;
  int src_tier = 0;
  int dst_tier = 0;  // unused for Evict
  std::uint64_t size = 0;
};

// Hooks the shim runtime installs so the flusher thread and the foreground
// interception code coordinate inside the master process. Cross-process
// coordination relies on the filesystem scan plus the stability window.
struct SyncHooks {
  std::function<bool(const std::string&)> has_open_writer;
  std::function<void(const std::string&)> mark_in_flight;
  std::function<void(const std::string&)> clear_in_flight;
  // Ran once at the top of each background thread; the shim uses it to arm
  // its reentrancy guard so the flusher's own I/O is never intercepted.
  std::function<void()> thread_init;
};

struct ScanOptions {
  std::chrono::milliseconds stability_window{2000};
  bool ignore_stability = false;  // drain runs post-exit with the window off
  const SyncHooks* hooks = nullptr;
};

// One pass over the cached tiers: classifies every cached file and emits the
// movement tasks due this cycle, largest files first. Files with open writers
// or an mtime inside the stability window are skipped.
std::vector<FlushTask> scan_cycle(const NamespaceView& view, const PolicyRules& rules,
                                  const SeaConfig& config, const ScanOptions& opts);

// Copies prefetch-matching files whose fastest copy is not already on the
// fastest writable tier; skips files larger than the remaining space.
std::vector<FlushTask> prefetch_cycle(const NamespaceView& view, const PolicyRules& rules,
                                      const SeaConfig& config);

struct TaskResult {
  bool ok = true;
  std::string error;
};

TaskResult execute_task(const FlushTask& task, const SeaConfig& config,
                        const SyncHooks* hooks = nullptr);

struct DrainSummary {
  std::uint64_t flushed = 0;
  std::uint64_t moved = 0;
  std::uint64_t evicted = 0;
  std::uint64_t bytes = 0;
  std::uint64_t left_in_cache = 0;  // cache files matching no rule
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
  std::string to_lines() const;  // key=value lines
};

// Repeated scans with the stability window disabled until no tasks remain.
// abort_check is polled between passes; returning true stops the drain with
// an error recorded for the files left behind.
DrainSummary drain(const SeaConfig& config, const PolicyRules& rules,
                   const std::function<bool()>& abort_check = {});
DrainSummary drain_with_reload(const SeaConfig& config);

// Writes the summary to stderr and, when the config names a stats path, to
// "<stats_path>.drain".
void report_drain(const DrainSummary& summary, const SeaConfig& config);

// Hosts the periodic flusher and prefetcher threads in the master process.
class FlusherThread {
 public:
  FlusherThread(SeaConfig config, SyncHooks hooks, bool enable_flush, bool enable_prefetch);
  ~FlusherThread();

  FlusherThread(const FlusherThread&) = delete;
  FlusherThread& operator=(const FlusherThread&) = delete;

  void start();
  void stop();

 private:
  void flush_loop();
  void prefetch_loop();
  void run_tasks(const std::vector<FlushTask>& tasks);

  SeaConfig config_;
  SyncHooks hooks_;
  bool enable_flush_;
  bool enable_prefetch_;
  PolicyRules rules_;
  std::mutex rules_mutex_;

  std::map<std::string, int> failure_counts_;  // "<kind>:<logical>" -> consecutive failures
  std::map<std::string, bool> quarantined_;

  std::mutex mutex_;
  std::condition_variable cv_;
  bool stopping_ = false;
  std::thread flush_thread_;
  std::thread prefetch_thread_;
};

}  // namespace sea
