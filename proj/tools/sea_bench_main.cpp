// The `sea-bench` command: synthetic workloads with the three pipeline I/O
// shapes, busy writers to degrade the slow tier, and the compare harness for
// makespan/speedup sweeps. The hidden `workload` and `fsops` subcommands are
// the child-process bodies used by the harness and the test suites.

#include <dirent.h>
#include <fcntl.h>
#include <signal.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sea/bench.hpp"
#include "sea/config.hpp"
#include "sea/fsutil.hpp"
#include "sea/log.hpp"
#include "sea/process.hpp"

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};
void stop_handler(int) { g_stop.store(true); }

// ---- fsops: scripted raw-syscall driver -------------------------------------
//
// One op per line. Paths are relative to --root. Results go to stdout as
// "<index> <op> rc=<n> errno=<n>" so two executions can be compared verbatim.
//
//   mkdir D          rmdir D           unlink F        rename A B
//   write F N SEED   append F N SEED   read F          statcall F
//   open_close F     list D OUT        sleep MS        selfkill

int run_fsops(const fs::path& root, const fs::path& script_path) {
  std::ifstream script(script_path);
  if (!script) {
    std::fprintf(stderr, "fsops: cannot read %s\n", script_path.string().c_str());
    return 2;
  }

  std::vector<char> buf;
  std::string line;
  int idx = 0;
  auto report = [&](const char* op, long rc) {
    std::printf("%d %s rc=%ld errno=%d\n", idx, op, rc, rc < 0 ? errno : 0);
  };

  while (std::getline(script, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream in(line);
    std::string op, a, b, c;
    in >> op >> a >> b >> c;
    fs::path pa = root / a;
    ++idx;

    if (op == "mkdir") {
      report("mkdir", ::mkdir(pa.c_str(), 0755));
    } else if (op == "rmdir") {
      report("rmdir", ::rmdir(pa.c_str()));
    } else if (op == "unlink") {
      report("unlink", ::unlink(pa.c_str()));
    } else if (op == "rename") {
      report("rename", ::rename(pa.c_str(), (root / b).c_str()));
    } else if (op == "write" || op == "append") {
      std::size_t n = std::stoull(b);
      std::uint64_t seed = std::stoull(c);
      buf.resize(n);
      sea::fill_pattern(buf.data(), n, seed);
      int flags = op == "write" ? (O_WRONLY | O_CREAT | O_TRUNC) : (O_WRONLY | O_CREAT | O_APPEND);
      int fd = ::open(pa.c_str(), flags, 0644);
      if (fd < 0) {
        report(op.c_str(), -1);
        continue;
      }
      ssize_t w = ::write(fd, buf.data(), n);
      ::close(fd);
      report(op.c_str(), w);
    } else if (op == "read") {
      int fd = ::open(pa.c_str(), O_RDONLY);
      if (fd < 0) {
        report("read", -1);
        continue;
      }
      buf.resize(1 << 20);
      long total = 0;
      ssize_t r;
      while ((r = ::read(fd, buf.data(), buf.size())) > 0) total += r;
      ::close(fd);
      report("read", r < 0 ? -1 : total);
    } else if (op == "statcall") {
      struct stat st {};
      report("statcall", ::stat(pa.c_str(), &st));
    } else if (op == "open_close") {
      int fd = ::open(pa.c_str(), O_RDONLY);
      if (fd >= 0) ::close(fd);
      report("open_close", fd >= 0 ? 0 : -1);
    } else if (op == "list") {
      DIR* d = ::opendir(pa.c_str());
      if (!d) {
        report("list", -1);
        continue;
      }
      std::vector<std::string> names;
      while (struct dirent* e = ::readdir(d)) {
        std::string name = e->d_name;
        if (name == "." || name == "..") continue;
        names.push_back(name);
      }
      ::closedir(d);
      std::sort(names.begin(), names.end());
      std::string joined;
      for (const auto& n : names) joined += n + "\n";
      int fd = ::open((root / b).c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
      if (fd < 0) {
        report("list", -1);
        continue;
      }
      ssize_t w = ::write(fd, joined.data(), joined.size());
      ::close(fd);
      report("list", w < 0 ? -1 : static_cast<long>(names.size()));
    } else if (op == "sleep") {
      ::usleep(static_cast<useconds_t>(std::stoul(a)) * 1000);
      report("sleep", 0);
    } else if (op == "selfkill") {
      std::fflush(nullptr);
      ::raise(SIGKILL);
    } else {
      std::fprintf(stderr, "fsops: unknown op '%s' (line %d)\n", op.c_str(), idx);
      return 2;
    }
  }
  return 0;
}

fs::path require_shim() {
  fs::path shim = sea::locate_shim();
  if (shim.empty()) {
    std::fprintf(stderr, "sea-bench: libsea_shim.so not found (set SEA_SHIM)\n");
    std::exit(2);
  }
  return shim;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sea-bench: desk-scale makespan benchmarks for Sea"};
  app.require_subcommand(1);

  // run
  std::string profile_name, mode = "baseline", busy_str, out_csv;
  std::string workdir = "";
  int latency_ms = 0, procs = 1, rep = 0;
  std::uint64_t seed = 42;
  auto* run = app.add_subcommand("run", "One workload run; appends a row to the report CSV");
  run->add_option("--profile", profile_name, "afni-like | fsl-like | spm-like (or aliases)")
      ->required();
  run->add_option("--mode", mode, "sea | baseline")->check(CLI::IsMember({"sea", "baseline"}));
  run->add_option("--degrade-latency", latency_ms, "Injected per-write latency (ms) on the slow tier");
  run->add_option("--busy", busy_str, "Busy-writer spec T,BS,N,S (degrades the slow tier)");
  run->add_option("--out", out_csv, "Report CSV path")->required();
  run->add_option("--workdir", workdir, "Sandbox directory (default: <out dir>/work)");
  run->add_option("--procs", procs, "Workload processes")->check(CLI::PositiveNumber);
  run->add_option("--rep", rep, "Repetition index recorded in the CSV");
  run->add_option("--seed", seed, "Content seed");

  // compare
  std::string profiles_str;
  int reps = 3, cmp_latency = 20, cmp_procs = 1;
  std::string cmp_busy, out_dir;
  auto* compare = app.add_subcommand("compare", "Full sweep: profiles x degradation x mode x reps");
  compare->add_option("--profiles", profiles_str, "Comma-separated profile names")->required();
  compare->add_option("--reps", reps, "Repetitions per cell (>= 3)");
  compare->add_option("--degrade-latency", cmp_latency, "Injected write latency (ms)");
  compare->add_option("--busy", cmp_busy, "Busy-writer spec; replaces latency injection");
  compare->add_option("--procs", cmp_procs, "Workload processes")->check(CLI::PositiveNumber);
  compare->add_option("--out", out_dir, "Output directory")->required();

  // busy
  std::string busy_spec_str, busy_dir;
  double busy_duration = 0;
  auto* busy = app.add_subcommand("busy", "Run busy writers until signalled (or --duration)");
  busy->add_option("--spec", busy_spec_str, "T,BS,N,S e.g. 4,64M,50,1")->required();
  busy->add_option("--dir", busy_dir, "Target directory (slow tier)")->required();
  busy->add_option("--duration", busy_duration, "Stop after this many seconds");

  // workload (child body)
  std::string wl_profile, wl_root;
  int wl_begin = 0, wl_end = 0, wl_latency = 0;
  std::uint64_t wl_seed = 42;
  auto* workload = app.add_subcommand("workload", "One process's share of a workload (internal)");
  workload->add_option("--profile", wl_profile)->required();
  workload->add_option("--root", wl_root)->required();
  workload->add_option("--begin", wl_begin);
  workload->add_option("--end", wl_end);
  workload->add_option("--latency", wl_latency);
  workload->add_option("--seed", wl_seed);

  // fsops (test driver)
  std::string fs_root, fs_script;
  auto* fsops = app.add_subcommand("fsops", "Scripted file-operation driver (internal)");
  fsops->add_option("--root", fs_root)->required();
  fsops->add_option("--script", fs_script)->required();

  CLI11_PARSE(app, argc, argv);

  if (workload->parsed()) {
    auto profile = sea::find_profile(wl_profile);
    if (!profile) {
      std::fprintf(stderr, "unknown profile '%s'\n", wl_profile.c_str());
      return 2;
    }
    if (wl_end <= wl_begin) wl_end = profile->n_files;
    return sea::workload_run(*profile, wl_root, wl_latency, wl_begin, wl_end, wl_seed);
  }

  if (fsops->parsed()) return run_fsops(fs_root, fs_script);

  if (busy->parsed()) {
    auto spec = sea::parse_busy_spec(busy_spec_str);
    if (!spec) {
      std::fprintf(stderr, "bad busy spec '%s' (want T,BS,N,S with all fields positive)\n",
                   busy_spec_str.c_str());
      return 2;
    }
    ::signal(SIGINT, stop_handler);
    ::signal(SIGTERM, stop_handler);
    sea::BusyWriter writer(*spec, busy_dir);
    writer.start();
    auto t0 = std::chrono::steady_clock::now();
    while (!g_stop.load()) {
      if (busy_duration > 0 &&
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() >=
              busy_duration)
        break;
      ::usleep(50 * 1000);
    }
    std::uint64_t bytes = writer.stop();
    std::printf("bytes_moved=%llu\n", static_cast<unsigned long long>(bytes));
    return 0;
  }

  if (run->parsed()) {
    auto profile = sea::find_profile(profile_name);
    if (!profile) {
      std::fprintf(stderr, "unknown profile '%s'\n", profile_name.c_str());
      return 2;
    }
    fs::path out = out_csv;
    fs::path base = workdir.empty() ? (out.parent_path().empty() ? fs::path(".")
                                                                 : out.parent_path()) /
                                          "work"
                                    : fs::path(workdir);
    sea::RunConfig cfg;
    cfg.profile = *profile;
    cfg.mode = mode;
    cfg.procs = procs;
    cfg.seed = seed;
    cfg.workload_bin = fs::canonical("/proc/self/exe");

    std::unique_ptr<sea::BusyWriter> busy_writer;
    sea::BenchSandbox sb;
    if (mode == "sea") {
      sb = sea::make_sandbox(base, true);
      cfg.root = sb.mount;
      cfg.config_path = sb.config_path;
      cfg.stats_path = sb.stats_path;
      cfg.shim_path = require_shim();
      if (!busy_str.empty()) {
        auto spec = sea::parse_busy_spec(busy_str);
        if (!spec) {
          std::fprintf(stderr, "bad busy spec\n");
          return 2;
        }
        busy_writer = std::make_unique<sea::BusyWriter>(*spec, sb.slow_tier);
        busy_writer->start();
      }
      cfg.latency_ms = latency_ms;
    } else {
      fs::path root = base / "baseline";
      fs::create_directories(root);
      cfg.root = root;
      cfg.latency_ms = latency_ms;
      if (!busy_str.empty()) {
        auto spec = sea::parse_busy_spec(busy_str);
        if (!spec) {
          std::fprintf(stderr, "bad busy spec\n");
          return 2;
        }
        busy_writer = std::make_unique<sea::BusyWriter>(*spec, root);
        busy_writer->start();
      }
    }

    sea::RunReport report = sea::run_workload(cfg);
    if (busy_writer) busy_writer->stop();
    report.rep = rep;
    report.degraded = latency_ms > 0 || !busy_str.empty();
    sea::append_report_csv(out, report);
    std::printf("profile=%s mode=%s makespan_s=%.3f bytes=%llu valid=%d\n",
                report.profile.c_str(), report.mode.c_str(), report.makespan_s,
                static_cast<unsigned long long>(report.bytes), report.valid ? 1 : 0);
    return report.valid ? 0 : 1;
  }

  if (compare->parsed()) {
    sea::CompareOptions opts;
    std::istringstream ps(profiles_str);
    std::string p;
    while (std::getline(ps, p, ',')) opts.profiles.push_back(p);
    opts.reps = reps;
    opts.procs = cmp_procs;
    opts.degrade_latency_ms = cmp_latency;
    if (!cmp_busy.empty()) {
      auto spec = sea::parse_busy_spec(cmp_busy);
      if (!spec) {
        std::fprintf(stderr, "bad busy spec\n");
        return 2;
      }
      opts.busy = spec;
    }
    opts.out_dir = out_dir;
    opts.workload_bin = fs::canonical("/proc/self/exe");
    opts.shim_path = require_shim();
    return sea::compare_runs(opts);
  }

  return 0;
}
