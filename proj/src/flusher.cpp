#include "sea/flusher.hpp"

#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <sstream>

#include "sea/fsutil.hpp"
#include "sea/log.hpp"
#include "sea/stats.hpp"

namespace sea {

namespace fs = std::filesystem;

const char* task_kind_name(TaskKind k) {
  switch (k) {
    case TaskKind::Flush: return "flush";
    case TaskKind::Evict: return "evict";
    case TaskKind::Move: return "move";
    case TaskKind::Prefetch: return "prefetch";
  }
  return "?";
}

namespace {

struct timespec now_ts() {
  struct timespec ts {};
  ::clock_gettime(CLOCK_REALTIME, &ts);
  return ts;
}

bool within_window(const struct timespec& mtime, std::chrono::milliseconds window) {
  struct timespec now = now_ts();
  auto age_ms = (now.tv_sec - mtime.tv_sec) * 1000 + (now.tv_nsec - mtime.tv_nsec) / 1000000;
  return age_ms < window.count();
}

const FileLocation* fastest_cache_copy(const std::vector<FileLocation>& locs, int persistent) {
  const FileLocation* best = nullptr;
  for (const auto& l : locs)
    if (l.tier != persistent && (!best || l.tier < best->tier)) best = &l;
  return best;
}

const FileLocation* newest_cache_copy(const std::vector<FileLocation>& locs, int persistent) {
  const FileLocation* best = nullptr;
  for (const auto& l : locs)
    if (l.tier != persistent && (!best || mtime_less(best->mtime, l.mtime))) best = &l;
  return best;
}

}  // namespace

std::vector<FlushTask> scan_cycle(const NamespaceView& view, const PolicyRules& rules,
                                  const SeaConfig& config, const ScanOptions& opts) {
  const int persistent = config.persistent_index();
  std::vector<FlushTask> tasks;

  for (const auto& [logical, locs] : view.entries) {
    const FileLocation* cached = fastest_cache_copy(locs, persistent);
    if (!cached) continue;  // persistent-only files have nothing to move

    Classified cls = classify(logical, rules);
    if (cls.action == Disposition::None) continue;

    if (opts.hooks && opts.hooks->has_open_writer && opts.hooks->has_open_writer(logical))
      continue;
    if (!opts.ignore_stability) {
      const FileLocation* newest = newest_cache_copy(locs, persistent);
      if (newest && within_window(newest->mtime, opts.stability_window)) continue;
    }

    switch (cls.action) {
      case Disposition::Flush:
        if (is_dirty(locs, config))
          tasks.push_back({logical, TaskKind::Flush, cached->tier, persistent, cached->size});
        break;
      case Disposition::Move:
        tasks.push_back({logical, TaskKind::Move, cached->tier, persistent, cached->size});
        break;
      case Disposition::Evict:
        // Evict-only files are declared temporary, so the cache copy goes
        // regardless of whether a persistent copy exists.
        for (const auto& l : locs)
          if (l.tier != persistent)
            tasks.push_back({logical, TaskKind::Evict, l.tier, persistent, l.size});
        break;
      case Disposition::None:
        break;
    }
  }

  // Largest first frees cache pressure fastest.
  std::stable_sort(tasks.begin(), tasks.end(),
                   [](const FlushTask& a, const FlushTask& b) { return a.size > b.size; });
  return tasks;
}

std::vector<FlushTask> prefetch_cycle(const NamespaceView& view, const PolicyRules& rules,
                                      const SeaConfig& config) {
  std::vector<FlushTask> tasks;
  if (rules.prefetch.empty()) return tasks;

  int dst = -1;
  for (const auto& t : config.tiers)
    if (t.writable) {
      dst = t.priority;
      break;
    }
  if (dst < 0 || dst == config.persistent_index()) return tasks;

  std::uint64_t budget = free_bytes(config.tiers[static_cast<size_t>(dst)].root);
  constexpr std::uint64_t kMargin = 4ull << 20;

  for (const auto& [logical, locs] : view.entries) {
    if (!classify(logical, rules).prefetch) continue;
    if (locs.empty()) continue;
    int fastest = locs.front().tier;
    std::uint64_t size = locs.front().size;
    for (const auto& l : locs)
      if (l.tier < fastest) {
        fastest = l.tier;
        size = l.size;
      }
    if (fastest <= dst) continue;  // already on the fastest cache
    if (size + kMargin > budget) {
      log_info("prefetch: skipping %s (%llu bytes, %llu free on tier %d)", logical.c_str(),
               static_cast<unsigned long long>(size), static_cast<unsigned long long>(budget),
               dst);
      continue;
    }
    budget -= size;
    tasks.push_back({logical, TaskKind::Prefetch, fastest, dst, size});
  }
  return tasks;
}

namespace {

struct InFlightScope {
  InFlightScope(const SyncHooks* hooks, const std::string& logical)
      : hooks_(hooks), logical_(logical) {
    if (hooks_ && hooks_->mark_in_flight) hooks_->mark_in_flight(logical_);
  }
  ~InFlightScope() {
    if (hooks_ && hooks_->clear_in_flight) hooks_->clear_in_flight(logical_);
  }
  const SyncHooks* hooks_;
  std::string logical_;
};

bool same_device(const fs::path& a_parent, const fs::path& b_parent) {
  struct stat sa {}, sb {};
  if (::stat(a_parent.c_str(), &sa) != 0) return false;
  if (::stat(b_parent.c_str(), &sb) != 0) return false;
  return sa.st_dev == sb.st_dev;
}

// Copy src to dst unless src disappeared or changed under us mid-copy, in
// which case the staged file is discarded and the task retried next cycle.
TaskResult checked_copy(const fs::path& src, const fs::path& dst) {
  struct stat before {};
  if (::stat(src.c_str(), &before) != 0)
    return {false, "source vanished before copy: " + src.string()};
  std::error_code ec;
  if (!copy_file_atomic(src, dst, /*preserve_mtime=*/false, ec))
    return {false, "copy " + src.string() + " -> " + dst.string() + ": " + ec.message()};
  struct stat after {};
  if (::stat(src.c_str(), &after) != 0 || mtime_less(before.st_mtim, after.st_mtim) ||
      before.st_size != after.st_size) {
    // The application raced us; drop our result and let the next scan decide.
    ::unlink(dst.c_str());
    return {false, "source changed during copy: " + src.string()};
  }
  return {};
}

}  // namespace

TaskResult execute_task(const FlushTask& task, const SeaConfig& config, const SyncHooks* hooks) {
  InFlightScope scope(hooks, task.logical);
  const int persistent = config.persistent_index();
  fs::path src = unmask(task.logical, task.src_tier, config);

  switch (task.kind) {
    case TaskKind::Flush: {
      fs::path dst = unmask(task.logical, task.dst_tier, config);
      return checked_copy(src, dst);
    }
    case TaskKind::Move: {
      fs::path dst = unmask(task.logical, task.dst_tier, config);
      std::error_code ec;
      fs::create_directories(dst.parent_path(), ec);
      if (same_device(src.parent_path(), dst.parent_path())) {
        if (::rename(src.c_str(), dst.c_str()) != 0)
          return {false, "rename " + src.string() + ": " + std::strerror(errno)};
      } else {
        TaskResult r = checked_copy(src, dst);
        if (!r.ok) return r;
        if (::unlink(src.c_str()) != 0)
          return {false, "unlink " + src.string() + ": " + std::strerror(errno)};
      }
      // A move leaves exactly one copy: drop any remaining cache copies.
      for (const auto& t : config.tiers) {
        if (t.priority == persistent || t.priority == task.src_tier) continue;
        fs::path extra = unmask(task.logical, t.priority, config);
        ::unlink(extra.c_str());
      }
      return {};
    }
    case TaskKind::Evict: {
      if (::unlink(src.c_str()) != 0 && errno != ENOENT)
        return {false, "evict " + src.string() + ": " + std::strerror(errno)};
      return {};
    }
    case TaskKind::Prefetch: {
      fs::path dst = unmask(task.logical, task.dst_tier, config);
      std::error_code ec;
      // Preserved mtime keeps the prefetched copy from looking dirty.
      if (!copy_file_atomic(src, dst, /*preserve_mtime=*/true, ec))
        return {false, "prefetch " + src.string() + ": " + ec.message()};
      return {};
    }
  }
  return {false, "unknown task kind"};
}

DrainSummary drain(const SeaConfig& config, const PolicyRules& rules,
                   const std::function<bool()>& abort_check) {
  DrainSummary summary;
  std::map<std::string, int> failures;
  ScanOptions opts;
  opts.ignore_stability = true;

  for (;;) {
    if (abort_check && abort_check()) {
      summary.errors.push_back("drain aborted; unpersisted files may remain in cache");
      break;
    }
    NamespaceView view = scan_namespace(config);
    std::vector<FlushTask> tasks = scan_cycle(view, rules, config, opts);
    tasks.erase(std::remove_if(tasks.begin(), tasks.end(),
                               [&](const FlushTask& t) {
                                 return failures[task_kind_name(t.kind) + (":" + t.logical)] >= 5;
                               }),
                tasks.end());
    if (tasks.empty()) break;

    bool progressed = false;
    for (const auto& task : tasks) {
      TaskResult r = execute_task(task, config);
      std::string key = task_kind_name(task.kind) + (":" + task.logical);
      if (r.ok) {
        progressed = true;
        failures.erase(key);
        switch (task.kind) {
          case TaskKind::Flush: summary.flushed++; summary.bytes += task.size; break;
          case TaskKind::Move: summary.moved++; summary.bytes += task.size; break;
          case TaskKind::Evict: summary.evicted++; break;
          case TaskKind::Prefetch: break;
        }
      } else {
        int n = ++failures[key];
        log_error("drain: %s failed (%d): %s", key.c_str(), n, r.error.c_str());
        if (n >= 5) summary.errors.push_back(key + ": " + r.error);
      }
    }
    if (!progressed) {
      // Every remaining task is failing; quarantine them all and stop.
      for (const auto& task : tasks) {
        std::string key = task_kind_name(task.kind) + (":" + task.logical);
        if (failures[key] < 5) {
          failures[key] = 5;
          summary.errors.push_back(key + ": gave up after repeated failures");
        }
      }
      break;
    }
  }

  // Count cache files the rules leave alone.
  NamespaceView view = scan_namespace(config);
  const int persistent = config.persistent_index();
  for (const auto& [logical, locs] : view.entries) {
    if (!fastest_cache_copy(locs, persistent)) continue;
    if (classify(logical, rules).action == Disposition::None) summary.left_in_cache++;
  }
  return summary;
}

DrainSummary drain_with_reload(const SeaConfig& config) {
  return drain(config, load_policies(config.config_dir));
}

std::string DrainSummary::to_lines() const {
  std::ostringstream out;
  out << "flushed=" << flushed << "\n";
  out << "moved=" << moved << "\n";
  out << "evicted=" << evicted << "\n";
  out << "bytes=" << bytes << "\n";
  out << "left_in_cache=" << left_in_cache << "\n";
  out << "errors=" << errors.size() << "\n";
  for (const auto& e : errors) out << "error=" << e << "\n";
  return out.str();
}

void report_drain(const DrainSummary& summary, const SeaConfig& config) {
  log_info("drain: flushed=%llu moved=%llu evicted=%llu bytes=%llu left_in_cache=%llu errors=%zu",
           static_cast<unsigned long long>(summary.flushed),
           static_cast<unsigned long long>(summary.moved),
           static_cast<unsigned long long>(summary.evicted),
           static_cast<unsigned long long>(summary.bytes),
           static_cast<unsigned long long>(summary.left_in_cache), summary.errors.size());
  for (const auto& e : summary.errors) log_error("drain: %s", e.c_str());
  if (!config.stats_path.empty())
    write_text_file(config.stats_path.string() + ".drain", summary.to_lines());
}

FlusherThread::FlusherThread(SeaConfig config, SyncHooks hooks, bool enable_flush,
                             bool enable_prefetch)
    : config_(std::move(config)),
      hooks_(std::move(hooks)),
      enable_flush_(enable_flush),
      enable_prefetch_(enable_prefetch) {}

FlusherThread::~FlusherThread() { stop(); }

void FlusherThread::start() {
  try {
    rules_ = load_policies(config_.config_dir);
  } catch (const ConfigError& e) {
    log_error("policy load failed, flusher starts with empty rules: %s", e.what());
  }
  if (enable_flush_) flush_thread_ = std::thread([this] { flush_loop(); });
  if (enable_prefetch_) prefetch_thread_ = std::thread([this] { prefetch_loop(); });
}

void FlusherThread::stop() {
  {
    std::lock_guard<std::mutex> lk(mutex_);
    if (stopping_) return;
    stopping_ = true;
  }
  cv_.notify_all();
  if (flush_thread_.joinable()) flush_thread_.join();
  if (prefetch_thread_.joinable()) prefetch_thread_.join();
}

void FlusherThread::run_tasks(const std::vector<FlushTask>& tasks) {
  for (const auto& task : tasks) {
    std::string key = task_kind_name(task.kind) + (":" + task.logical);
    if (quarantined_.count(key)) continue;
    TaskResult r = execute_task(task, config_, &hooks_);
    if (r.ok) {
      failure_counts_.erase(key);
      log_debug("%s %s done (%llu bytes)", task_kind_name(task.kind), task.logical.c_str(),
                static_cast<unsigned long long>(task.size));
    } else {
      int n = ++failure_counts_[key];
      log_error("%s %s failed (attempt %d): %s", task_kind_name(task.kind),
                task.logical.c_str(), n, r.error.c_str());
      if (n >= 5) {
        quarantined_[key] = true;
        log_error("%s quarantined after 5 consecutive failures", key.c_str());
      }
    }
  }
}

void FlusherThread::flush_loop() {
  if (hooks_.thread_init) hooks_.thread_init();
  ScanOptions opts;
  opts.hooks = &hooks_;
  opts.stability_window = config_.stability_window;
  for (;;) {
    {
      std::unique_lock<std::mutex> lk(mutex_);
      cv_.wait_for(lk, config_.flush_interval, [this] { return stopping_; });
      if (stopping_) return;
    }
    // Policies are re-read each cycle so rules can be added mid-run.
    try {
      PolicyRules fresh = load_policies(config_.config_dir);
      std::lock_guard<std::mutex> lk(rules_mutex_);
      rules_ = std::move(fresh);
    } catch (const ConfigError& e) {
      log_error("policy reload failed, keeping previous rules: %s", e.what());
    }
    PolicyRules rules;
    {
      std::lock_guard<std::mutex> lk(rules_mutex_);
      rules = rules_;
    }
    NamespaceView view = scan_namespace(config_);
    run_tasks(scan_cycle(view, rules, config_, opts));
  }
}

void FlusherThread::prefetch_loop() {
  if (hooks_.thread_init) hooks_.thread_init();
  for (;;) {
    {
      std::unique_lock<std::mutex> lk(mutex_);
      cv_.wait_for(lk, config_.flush_interval, [this] { return stopping_; });
      if (stopping_) return;
    }
    PolicyRules rules;
    {
      std::lock_guard<std::mutex> lk(rules_mutex_);
      rules = rules_;
    }
    if (rules.prefetch.empty()) {
      try {
        PolicyRules fresh = load_policies(config_.config_dir);
        std::lock_guard<std::mutex> lk(rules_mutex_);
        rules_ = std::move(fresh);
        rules = rules_;
      } catch (const ConfigError&) {
      }
    }
    if (rules.prefetch.empty()) continue;
    NamespaceView view = scan_namespace(config_);
    run_tasks(prefetch_cycle(view, rules, config_));
  }
}

}  // namespace sea
