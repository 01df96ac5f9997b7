#include "sea/bench.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sea/config.hpp"
#include "sea/flusher.hpp"
#include "sea/fsutil.hpp"
#include "sea/log.hpp"
#include "sea/namespace_view.hpp"
#include "sea/process.hpp"

namespace sea {

namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

std::vector<WorkloadProfile> builtin_profiles() {
  // Ratios follow the pipeline characterization table: the AFNI-like shape is
  // data- and call-heavy with little compute, the FSL-like shape is
  // compute-bound with the smallest output, the SPM-like shape leans on
  // metadata traffic. Sizes are scaled ~1000x below the originals.
  return {
      {"afni-like", 16, 16ull << 20, 100, 16, WritePattern::burst, 256 * 1024},
      {"fsl-like", 3, 8ull << 20, 2000, 8, WritePattern::even, 1024 * 1024},
      {"spm-like", 8, 4ull << 20, 250, 64, WritePattern::even, 256 * 1024},
  };
}

std::optional<WorkloadProfile> find_profile(const std::string& name) {
  std::string canonical = name;
  if (name == "data-heavy") canonical = "afni-like";
  else if (name == "compute-bound") canonical = "fsl-like";
  else if (name == "metadata-heavy") canonical = "spm-like";
  for (const auto& p : builtin_profiles())
    if (p.name == canonical) return p;
  return std::nullopt;
}

std::optional<BusyWriterSpec> parse_busy_spec(const std::string& text) {
  BusyWriterSpec spec;
  std::istringstream in(text);
  std::string tok;
  std::vector<std::string> parts;
  while (std::getline(in, tok, ',')) parts.push_back(tok);
  if (parts.size() != 4) return std::nullopt;
  try {
    spec.n_threads = std::stoi(parts[0]);
    std::uint64_t mult = 1;
    std::string bs = parts[1];
    if (!bs.empty() && (bs.back() == 'K' || bs.back() == 'M' || bs.back() == 'G')) {
      mult = bs.back() == 'K' ? (1ull << 10) : bs.back() == 'M' ? (1ull << 20) : (1ull << 30);
      bs.pop_back();
    }
    spec.block_size = std::stoull(bs) * mult;
    spec.n_blocks = std::stoi(parts[2]);
    spec.sleep_s = std::stod(parts[3]);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (spec.n_threads <= 0 || spec.block_size == 0 || spec.n_blocks <= 0 || spec.sleep_s < 0)
    return std::nullopt;
  return spec;
}

void fill_pattern(char* buf, std::size_t n, std::uint64_t seed) {
  std::uint64_t x = seed * 6364136223846793005ull + 1442695040888963407ull;
  for (std::size_t i = 0; i < n; ++i) {
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
    buf[i] = static_cast<char>(x & 0xff);
  }
}

BusyWriter::BusyWriter(BusyWriterSpec spec, fs::path dir)
    : spec_(spec), dir_(std::move(dir)) {}

BusyWriter::~BusyWriter() {
  if (!threads_.empty()) stop();
}

void BusyWriter::start() {
  stop_.store(false);
  for (int i = 0; i < spec_.n_threads; ++i) threads_.emplace_back([this, i] { worker(i); });
}

std::uint64_t BusyWriter::stop() {
  stop_.store(true);
  for (auto& t : threads_) t.join();
  threads_.clear();
  for (int i = 0; i < spec_.n_threads; ++i)
    for (int j = 0; j < spec_.n_blocks; ++j)
      ::unlink((dir_ / ("busy_t" + std::to_string(i) + "_b" + std::to_string(j) + ".blk"))
                   .c_str());
  return bytes_.load();
}

void BusyWriter::worker(int thread_idx) {
  std::vector<char> block(std::min<std::uint64_t>(spec_.block_size, 4ull << 20));
  fill_pattern(block.data(), block.size(), 0x6b75ull + thread_idx);
  int iteration = 0;
  while (!stop_.load(std::memory_order_relaxed)) {
    int slot = iteration % spec_.n_blocks;
    fs::path p =
        dir_ / ("busy_t" + std::to_string(thread_idx) + "_b" + std::to_string(slot) + ".blk");
    int fd = ::open(p.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd >= 0) {
      std::uint64_t remaining = spec_.block_size;
      bool full = false;
      while (remaining > 0 && !stop_.load(std::memory_order_relaxed)) {
        std::size_t n = static_cast<std::size_t>(
            std::min<std::uint64_t>(remaining, block.size()));
        ssize_t w = ::write(fd, block.data(), n);
        if (w < 0) {
          if (errno == ENOSPC) {
            full = true;
            break;
          }
          break;
        }
        bytes_.fetch_add(static_cast<std::uint64_t>(w));
        remaining -= static_cast<std::uint64_t>(w);
      }
      ::close(fd);
      if (full) {
        // Wrap: reclaim our oldest block and carry on.
        int victim = (slot + 1) % spec_.n_blocks;
        ::unlink((dir_ / ("busy_t" + std::to_string(thread_idx) + "_b" +
                          std::to_string(victim) + ".blk"))
                     .c_str());
        log_info("busy writer %d: disk full, wrapped block %d", thread_idx, victim);
      }
    }
    // Read the block back, as the original load did.
    fd = ::open(p.c_str(), O_RDONLY);
    if (fd >= 0) {
      ssize_t r;
      while ((r = ::read(fd, block.data(), block.size())) > 0)
        bytes_.fetch_add(static_cast<std::uint64_t>(r));
      ::close(fd);
    }
    ++iteration;
    auto deadline = clock_type::now() +
                    std::chrono::milliseconds(static_cast<long>(spec_.sleep_s * 1000));
    while (clock_type::now() < deadline && !stop_.load(std::memory_order_relaxed))
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

namespace {

void metadata_ops(const fs::path& file, int count) {
  struct stat st {};
  for (int i = 0; i < count; ++i) {
    if (i % 2 == 0) ::stat(file.c_str(), &st);
    else ::access(file.c_str(), R_OK);
  }
}

void sleep_ms(long ms) {
  if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

}  // namespace

int workload_run(const WorkloadProfile& profile, const fs::path& root, int latency_ms,
                 int file_begin, int file_end, std::uint64_t seed) {
  fs::path out_dir = root / "out";
  ::mkdir(out_dir.c_str(), 0755);  // EEXIST expected from sibling processes

  std::vector<char> chunk(profile.chunk_bytes);
  for (int i = file_begin; i < file_end; ++i) {
    fs::path file = out_dir / ("f" + std::to_string(i) + ".dat");
    std::uint64_t n_chunks = (profile.file_size + profile.chunk_bytes - 1) / profile.chunk_bytes;

    if (profile.write_pattern == WritePattern::burst) sleep_ms(profile.compute_ms_per_file);

    int fd = ::open(file.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) {
      std::fprintf(stderr, "workload: open %s: %s\n", file.c_str(), std::strerror(errno));
      return 1;
    }
    std::uint64_t remaining = profile.file_size;
    for (std::uint64_t c = 0; c < n_chunks; ++c) {
      if (profile.write_pattern == WritePattern::even)
        sleep_ms(profile.compute_ms_per_file / static_cast<long>(n_chunks));
      std::size_t n =
          static_cast<std::size_t>(std::min<std::uint64_t>(remaining, profile.chunk_bytes));
      fill_pattern(chunk.data(), n, seed + static_cast<std::uint64_t>(i) * 8191 + c);
      if (latency_ms > 0) sleep_ms(latency_ms);  // emulated degraded slow tier
      ssize_t w = ::write(fd, chunk.data(), n);
      if (w != static_cast<ssize_t>(n)) {
        std::fprintf(stderr, "workload: write %s: %s\n", file.c_str(), std::strerror(errno));
        ::close(fd);
        return 1;
      }
      remaining -= n;
    }
    if (::close(fd) != 0) return 1;
    metadata_ops(file, profile.metadata_ops_per_file);
  }
  return 0;
}

namespace {

std::uint64_t tree_bytes(const fs::path& root) {
  std::uint64_t total = 0;
  std::error_code ec;
  for (auto it = fs::recursive_directory_iterator(root, ec);
       it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) break;
    std::error_code fec;
    if (it->is_regular_file(fec) && !is_internal_name(it->path().filename().string()))
      total += it->file_size(fec);
  }
  return total;
}

}  // namespace

RunReport run_workload(const RunConfig& cfg) {
  RunReport report;
  report.profile = cfg.profile.name;
  report.mode = cfg.mode;
  report.degraded = cfg.latency_ms > 0;

  if (cfg.profile.n_files < 1 || cfg.profile.file_size < 1) {
    report.valid = false;
    return report;
  }

  bool sea_mode = cfg.mode == "sea";
  if (sea_mode && !cfg.stats_path.empty()) ::unlink(cfg.stats_path.c_str());

  // Contiguous file ranges, one child per process slot.
  int procs = std::max(1, std::min(cfg.procs, cfg.profile.n_files));
  std::vector<pid_t> children;
  auto t0 = clock_type::now();
  for (int p = 0; p < procs; ++p) {
    int begin = cfg.profile.n_files * p / procs;
    int end = cfg.profile.n_files * (p + 1) / procs;
    Spawn spawn;
    spawn.argv = {cfg.workload_bin.string(),
                  "workload",
                  "--profile",
                  cfg.profile.name,
                  "--root",
                  cfg.root.string(),
                  "--begin",
                  std::to_string(begin),
                  "--end",
                  std::to_string(end),
                  "--seed",
                  std::to_string(cfg.seed),
                  "--latency",
                  std::to_string(sea_mode ? 0 : cfg.latency_ms)};
    if (sea_mode) {
      spawn.env.emplace_back("LD_PRELOAD", cfg.shim_path.string());
      spawn.env.emplace_back("SEA_CONFIG", cfg.config_path.string());
      if (!cfg.stats_path.empty()) spawn.env.emplace_back("SEA_STATS", cfg.stats_path.string());
      if (p == 0 && cfg.flush) spawn.env.emplace_back("SEA_MASTER", "1");
    } else {
      spawn.env_unset = {"LD_PRELOAD", "SEA_CONFIG", "SEA_MASTER", "SEA_STATS"};
    }
    pid_t pid = spawn_process(spawn);
    if (pid < 0) {
      report.valid = false;
      return report;
    }
    children.push_back(pid);
  }
  for (pid_t pid : children) {
    ExitStatus st = wait_process(pid);
    if (!st.success()) report.valid = false;
  }
  auto t1 = clock_type::now();
  report.makespan_s = std::chrono::duration<double>(t1 - t0).count();

  if (sea_mode) {
    try {
      SeaConfig config = load_config(cfg.config_path);
      if (cfg.flush) {
        DrainSummary summary = drain_with_reload(config);
        if (!summary.ok()) report.valid = false;
        report.bytes = tree_bytes(config.persistent_tier().root);
      } else {
        std::uint64_t total = 0;
        for (const auto& [logical, locs] : scan_namespace(config).entries) {
          (void)logical;
          total += locs.front().size;
        }
        report.bytes = total;
      }
    } catch (const std::exception& e) {
      log_error("run_workload: %s", e.what());
      report.valid = false;
    }
    if (!cfg.stats_path.empty()) report.stats = aggregate_stats_file(cfg.stats_path);
  } else {
    report.bytes = tree_bytes(cfg.root);
  }
  return report;
}

void append_report_csv(const fs::path& csv, const RunReport& report) {
  bool fresh = !fs::exists(csv);
  std::ofstream out(csv, std::ios::app);
  if (fresh) out << kReportHeader << "\n";
  out << report.profile << "," << report.mode << "," << (report.degraded ? 1 : 0) << ","
      << report.rep << "," << report.makespan_s << "," << report.bytes << "," << report.speedup
      << "\n";
  out.flush();
}

std::vector<RunReport> parse_report_csv(const fs::path& csv) {
  std::vector<RunReport> rows;
  std::ifstream in(csv);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      if (line == kReportHeader) continue;
    }
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 7) continue;
    RunReport r;
    try {
      r.profile = fields[0];
      r.mode = fields[1];
      r.degraded = fields[2] == "1";
      r.rep = std::stoi(fields[3]);
      r.makespan_s = std::stod(fields[4]);
      r.bytes = std::stoull(fields[5]);
      r.speedup = std::stod(fields[6]);
    } catch (const std::exception&) {
      continue;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

BenchSandbox make_sandbox(const fs::path& base, bool fast_on_shm, int flush_interval_ms,
                          int stability_ms) {
  BenchSandbox sb;
  sb.base = base;
  fs::create_directories(base);
  fs::path shm = "/dev/shm";
  if (fast_on_shm && fs::is_directory(shm) && free_bytes(shm) > (512ull << 20)) {
    sb.fast_tier = shm / ("sea-bench-" + std::to_string(::getpid()));
  } else {
    sb.fast_tier = base / "tier0";
  }
  sb.slow_tier = base / "persist";
  sb.mount = base / "mnt";
  fs::create_directories(sb.fast_tier);
  fs::create_directories(sb.slow_tier);
  fs::create_directories(sb.mount);
  fs::path cfg_dir = base / "cfg";
  fs::create_directories(cfg_dir);
  sb.config_path = cfg_dir / "sea.ini";
  sb.stats_path = base / "stats.txt";

  std::ostringstream ini;
  ini << "[sea]\n";
  ini << "mount = " << sb.mount.string() << "\n";
  ini << "flush_interval = " << flush_interval_ms << "\n";
  ini << "stability_ms = " << stability_ms << "\n";
  ini << "log_level = error\n";
  ini << "stats_path = " << sb.stats_path.string() << "\n\n";
  ini << "[tier.0]\n";
  ini << "root = " << sb.fast_tier.string() << "\nwritable = true\n\n";
  ini << "[tier.1]\n";
  ini << "root = " << sb.slow_tier.string() << "\nwritable = true\npersistent = true\n";
  write_text_file(sb.config_path, ini.str());
  write_text_file(cfg_dir / kFlushListName, ".*\n");
  return sb;
}

int compare_runs(const CompareOptions& opts) {
  if (opts.reps < 3) {
    log_error("compare: repetitions must be >= 3");
    return 2;
  }
  fs::create_directories(opts.out_dir);
  fs::path csv = opts.out_dir / "report.csv";
  std::map<std::string, std::vector<double>> speedups;  // "<profile>/<degraded>" -> per-rep

  for (const auto& name : opts.profiles) {
    auto profile = find_profile(name);
    if (!profile) {
      log_error("compare: unknown profile '%s'", name.c_str());
      return 2;
    }
    for (bool degraded : {false, true}) {
      for (int rep = 0; rep < opts.reps; ++rep) {
        fs::path rep_base = opts.out_dir / ("work-" + profile->name + "-" +
                                            (degraded ? "deg" : "und") + "-" +
                                            std::to_string(rep));
        BenchSandbox sb = make_sandbox(rep_base, true);
        fs::path baseline_root = rep_base / "baseline";
        fs::create_directories(baseline_root);

        std::unique_ptr<BusyWriter> busy;
        int latency = 0;
        if (degraded) {
          if (opts.busy) {
            busy = std::make_unique<BusyWriter>(*opts.busy, sb.slow_tier);
            busy->start();
          } else {
            latency = opts.degrade_latency_ms;
          }
        }

        RunConfig base_cfg;
        base_cfg.profile = *profile;
        base_cfg.mode = "baseline";
        base_cfg.root = baseline_root;
        base_cfg.latency_ms = latency;
        base_cfg.procs = opts.procs;
        base_cfg.seed = 42 + rep;
        base_cfg.workload_bin = opts.workload_bin;
        RunReport base = run_workload(base_cfg);
        base.rep = rep;
        base.degraded = degraded;

        RunConfig sea_cfg = base_cfg;
        sea_cfg.mode = "sea";
        sea_cfg.root = sb.mount;
        sea_cfg.latency_ms = latency;  // ignored by the app path in sea mode
        sea_cfg.config_path = sb.config_path;
        sea_cfg.shim_path = opts.shim_path;
        sea_cfg.stats_path = sb.stats_path;
        RunReport seaR = run_workload(sea_cfg);
        seaR.rep = rep;
        seaR.degraded = degraded;

        if (busy) busy->stop();

        if (base.valid && seaR.valid && seaR.makespan_s > 0)
          seaR.speedup = base.makespan_s / seaR.makespan_s;
        append_report_csv(csv, base);
        append_report_csv(csv, seaR);
        speedups[profile->name + (degraded ? "/degraded" : "/undegraded")].push_back(
            seaR.speedup);

        std::error_code ec;
        fs::remove_all(rep_base, ec);
        fs::remove_all(sb.fast_tier, ec);
      }
    }
  }

  std::ostringstream summary;
  summary << "mean speedups (baseline makespan / sea makespan)\n";
  for (const auto& [key, vals] : speedups) {
    double mean = std::accumulate(vals.begin(), vals.end(), 0.0) /
                  static_cast<double>(vals.size());
    summary << "  " << key << ": " << mean << " over " << vals.size() << " reps\n";
  }
  write_text_file(opts.out_dir / "summary.txt", summary.str());
  std::fputs(summary.str().c_str(), stdout);
  return 0;
}

}  // namespace sea
