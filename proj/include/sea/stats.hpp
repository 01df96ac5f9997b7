#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace sea {

// Every interceptable function that can touch a Sea path. Foreign-path calls
// pass through uncounted; these counters mirror the "Total glibc calls" /
// "Glibc Lustre calls" instrumentation columns.
enum class CallFn : int {
  open = 0,
  openat,
  creat,
  fopen,
  freopen,
  close,
  fclose,
  read,
  pread,
  readv,
  write,
  pwrite,
  writev,
  stat_,
  lstat,
  fstatat,
  access,
  chmod,
  truncate,
  fsync,
  rename_,
  renameat,
  unlink,
  unlinkat,
  mkdir,
  mkdirat,
  rmdir,
  opendir,
  readdir,
  closedir,
  kCount
};

const char* call_fn_name(CallFn fn);

class CallStats {
 public:
  static constexpr int kMaxTiers = 16;

  void record(CallFn fn, std::uint64_t bytes_read, std::uint64_t bytes_written, int tier,
              bool slow_tier) {
    per_fn_[static_cast<int>(fn)].fetch_add(1, std::memory_order_relaxed);
    if (slow_tier) slow_tier_calls_.fetch_add(1, std::memory_order_relaxed);
    if (bytes_read) bytes_read_.fetch_add(bytes_read, std::memory_order_relaxed);
    if (bytes_written) bytes_written_.fetch_add(bytes_written, std::memory_order_relaxed);
    if (tier >= 0 && tier < kMaxTiers) {
      if (bytes_read) tier_read_[tier].fetch_add(bytes_read, std::memory_order_relaxed);
      if (bytes_written) tier_written_[tier].fetch_add(bytes_written, std::memory_order_relaxed);
    }
  }

  std::uint64_t total_calls() const;
  std::uint64_t slow_tier_calls() const { return slow_tier_calls_.load(); }
  std::uint64_t bytes_read() const { return bytes_read_.load(); }
  std::uint64_t bytes_written() const { return bytes_written_.load(); }
  std::uint64_t fn_count(CallFn fn) const { return per_fn_[static_cast<int>(fn)].load(); }
  std::uint64_t tier_bytes_read(int tier) const { return tier_read_.at(tier).load(); }
  std::uint64_t tier_bytes_written(int tier) const { return tier_written_.at(tier).load(); }

  // One key=value record line (no trailing newline). Zero-valued per-function
  // and per-tier keys are omitted.
  std::string to_line() const;

 private:
  std::array<std::atomic<std::uint64_t>, static_cast<int>(CallFn::kCount)> per_fn_{};
  std::atomic<std::uint64_t> slow_tier_calls_{0};
  std::atomic<std::uint64_t> bytes_read_{0};
  std::atomic<std::uint64_t> bytes_written_{0};
  std::array<std::atomic<std::uint64_t>, kMaxTiers> tier_read_{};
  std::array<std::atomic<std::uint64_t>, kMaxTiers> tier_written_{};
};

using StatsRecord = std::map<std::string, std::uint64_t>;

StatsRecord parse_stats_line(const std::string& line);

// Sums every record in the file (one process appends one line at exit).
StatsRecord aggregate_stats_file(const std::filesystem::path& path);

// Single O_APPEND write; safe against concurrent writers.
bool append_record_line(const std::filesystem::path& path, const std::string& line);

}  // namespace sea
