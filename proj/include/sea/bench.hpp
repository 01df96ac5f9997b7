#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sea/stats.hpp"

namespace sea {

enum class WritePattern { burst, even };

// Synthetic pipeline shape: n_files outputs of file_size bytes each, a fixed
// compute cost per file, and a metadata-call burden. The built-in profiles
// mirror the output-size : compute-time : call-count ratios of AFNI-, FSL-
// and SPM-style fMRI preprocessing, scaled to desk size.
struct WorkloadProfile {
  std::string name;
  int n_files = 1;
  std::uint64_t file_size = 1;
  int compute_ms_per_file = 0;
  int metadata_ops_per_file = 0;
  WritePattern write_pattern = WritePattern::burst;
  std::uint64_t chunk_bytes = 256 * 1024;
};

std::vector<WorkloadProfile> builtin_profiles();

// Accepts canonical names (afni-like, fsl-like, spm-like) and the role
// aliases data-heavy, compute-bound, metadata-heavy.
std::optional<WorkloadProfile> find_profile(const std::string& name);

struct BusyWriterSpec {
  int n_threads = 0;
  std::uint64_t block_size = 0;
  int n_blocks = 0;
  double sleep_s = 0;
};

// "T,BS,N,S" with BS accepting K/M/G suffixes. nullopt on any non-positive
// field.
std::optional<BusyWriterSpec> parse_busy_spec(const std::string& text);

// Continuously rewrites and rereads a ring of block files to degrade the
// target directory, the desk-scale stand-in for the paper's cluster-wide
// busy-writer load.
class BusyWriter {
 public:
  BusyWriter(BusyWriterSpec spec, std::filesystem::path dir);
  ~BusyWriter();

  void start();
  std::uint64_t stop();  // joins all threads, removes block files, returns bytes moved

 private:
  void worker(int thread_idx);

  BusyWriterSpec spec_;
  std::filesystem::path dir_;
  std::atomic<bool> stop_{false};
  std::atomic<std::uint64_t> bytes_{0};
  std::vector<std::thread> threads_;
};

struct RunReport {
  std::string profile;
  std::string mode;  // "sea" or "baseline"
  bool degraded = false;
  int rep = 0;
  double makespan_s = 0;
  std::uint64_t bytes = 0;  // total output bytes observed after the run
  double speedup = 0;       // baseline_makespan / sea_makespan; 0 = unpaired
  bool valid = true;
  StatsRecord stats;  // sea mode only; aggregated across processes
};

struct RunConfig {
  WorkloadProfile profile;
  std::string mode = "baseline";
  std::filesystem::path root;  // mountpoint (sea) or plain directory (baseline)
  int latency_ms = 0;          // per-write sleep when writing the slow tier directly
  int procs = 1;
  std::uint64_t seed = 1;
  std::filesystem::path workload_bin;  // sea-bench itself
  // sea mode only:
  std::filesystem::path config_path;
  std::filesystem::path shim_path;
  std::filesystem::path stats_path;
  bool flush = true;  // drain after the timed window
};

// Spawns the workload processes, measures launch-to-last-exit wall time, and
// (sea mode with flush) drains afterwards. Drain time is excluded from the
// makespan, matching its definition as completion of the last computing task.
RunReport run_workload(const RunConfig& cfg);

// Executes one process's share of the workload in-process; the body of the
// `workload` subcommand.
int workload_run(const WorkloadProfile& profile, const std::filesystem::path& root,
                 int latency_ms, int file_begin, int file_end, std::uint64_t seed);

inline constexpr const char* kReportHeader =
    "profile,mode,degraded,rep,makespan_s,bytes,speedup";

void append_report_csv(const std::filesystem::path& csv, const RunReport& report);
std::vector<RunReport> parse_report_csv(const std::filesystem::path& csv);

// Deterministic byte pattern used by workload and fsops writers so output
// trees compare byte-identical across modes.
void fill_pattern(char* buf, std::size_t n, std::uint64_t seed);

// A throwaway benchmark sandbox: tiers, mountpoint, config and policy files.
struct BenchSandbox {
  std::filesystem::path base;
  std::filesystem::path fast_tier;
  std::filesystem::path slow_tier;  // persistent
  std::filesystem::path mount;
  std::filesystem::path config_path;
  std::filesystem::path stats_path;
};

// Creates the directory layout and writes sea.ini plus a flush-all policy.
// fast_on_shm places the fast tier under /dev/shm when available.
BenchSandbox make_sandbox(const std::filesystem::path& base, bool fast_on_shm,
                          int flush_interval_ms = 250, int stability_ms = 2000);

struct CompareOptions {
  std::vector<std::string> profiles;
  int reps = 3;
  int procs = 1;
  int degrade_latency_ms = 20;
  std::optional<BusyWriterSpec> busy;  // degrade with real contention instead
  std::filesystem::path out_dir;
  std::filesystem::path workload_bin;
  std::filesystem::path shim_path;
};

// profile x {undegraded, degraded} x {sea, baseline} x reps; one CSV row per
// run plus a mean-speedup text summary. Partial results are flushed row by
// row so an interrupted sweep still leaves a usable CSV.
int compare_runs(const CompareOptions& opts);

}  // namespace sea
