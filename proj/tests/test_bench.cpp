#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <thread>

#include "helpers.hpp"
#include "sea/bench.hpp"
#include "sea/flusher.hpp"

using seatest::TempDir;

namespace fs = std::filesystem;

TEST_CASE("profile lookup with role aliases") {
  REQUIRE(sea::find_profile("afni-like").has_value());
  CHECK(sea::find_profile("data-heavy")->name == "afni-like");
  CHECK(sea::find_profile("compute-bound")->name == "fsl-like");
  CHECK(sea::find_profile("metadata-heavy")->name == "spm-like");
  CHECK_FALSE(sea::find_profile("nope").has_value());

  for (const auto& p : sea::builtin_profiles()) {
    CHECK(p.n_files >= 1);
    CHECK(p.file_size >= 1);
  }
  // Shape sanity: the compute-bound profile spends far more time computing
  // per output byte than the data-heavy one.
  auto afni = *sea::find_profile("afni-like");
  auto fsl = *sea::find_profile("fsl-like");
  double afni_ratio = static_cast<double>(afni.compute_ms_per_file) /
                      static_cast<double>(afni.file_size >> 20);
  double fsl_ratio = static_cast<double>(fsl.compute_ms_per_file) /
                     static_cast<double>(fsl.file_size >> 20);
  CHECK(fsl_ratio > 10 * afni_ratio);
}

TEST_CASE("busy spec parsing rejects non-positive fields") {
  auto ok = sea::parse_busy_spec("4,64M,50,1");
  REQUIRE(ok.has_value());
  CHECK(ok->n_threads == 4);
  CHECK(ok->block_size == 64ull << 20);
  CHECK(ok->n_blocks == 50);
  CHECK(ok->sleep_s == 1.0);

  CHECK_FALSE(sea::parse_busy_spec("0,64M,50,1").has_value());
  CHECK_FALSE(sea::parse_busy_spec("4,0,50,1").has_value());
  CHECK_FALSE(sea::parse_busy_spec("4,64M,50").has_value());
  CHECK_FALSE(sea::parse_busy_spec("garbage").has_value());
}

TEST_CASE("busy writer sustains traffic and leaks no blocks") {
  TempDir dir("busy");
  sea::BusyWriterSpec spec{2, 256 * 1024, 4, 0.0};
  sea::BusyWriter writer(spec, dir.path);
  writer.start();
  std::this_thread::sleep_for(std::chrono::milliseconds(300));
  std::uint64_t bytes = writer.stop();

  CHECK(bytes > spec.block_size);  // wrote and re-read at least one block
  for (const auto& e : fs::directory_iterator(dir.path))
    CHECK(e.path().extension() != ".blk");
}

TEST_CASE("workload output is deterministic across runs") {
  auto profile = *sea::find_profile("afni-like");
  profile.n_files = 2;
  profile.file_size = 64 * 1024;
  profile.compute_ms_per_file = 0;
  profile.metadata_ops_per_file = 2;

  TempDir a("wla"), b("wlb");
  CHECK(sea::workload_run(profile, a.path, 0, 0, profile.n_files, 42) == 0);
  CHECK(sea::workload_run(profile, b.path, 0, 0, profile.n_files, 42) == 0);
  CHECK(seatest::tree_signature(a.path) == seatest::tree_signature(b.path));
  CHECK(fs::file_size(a.path / "out/f0.dat") == profile.file_size);
}

TEST_CASE("run_workload measures makespan and rejects empty profiles") {
  auto profile = *sea::find_profile("afni-like");
  profile.n_files = 0;
  sea::RunConfig cfg;
  cfg.profile = profile;
  CHECK_FALSE(sea::run_workload(cfg).valid);

  // Makespan grows with n_files for a fixed profile (compute dominates).
  TempDir root("wlm");
  auto small = *sea::find_profile("afni-like");
  small.file_size = 4096;
  small.compute_ms_per_file = 150;
  small.metadata_ops_per_file = 0;

  sea::RunConfig c1;
  c1.profile = small;
  c1.profile.n_files = 1;
  c1.root = root / "n1";
  fs::create_directories(c1.root);
  c1.workload_bin = seatest::bench_bin();
  sea::RunReport r1 = sea::run_workload(c1);

  sea::RunConfig c3 = c1;
  c3.profile.n_files = 3;
  c3.root = root / "n3";
  fs::create_directories(c3.root);
  sea::RunReport r3 = sea::run_workload(c3);

  CHECK(r1.valid);
  CHECK(r3.valid);
  CHECK(r1.bytes == 4096);
  CHECK(r3.bytes == 3 * 4096);
  CHECK(r3.makespan_s > r1.makespan_s);
}

TEST_CASE("latency injection slows the baseline write path") {
  TempDir root("wllat");
  auto p = *sea::find_profile("afni-like");
  p.n_files = 1;
  p.file_size = 1 << 20;
  p.chunk_bytes = 64 * 1024;  // 16 writes
  p.compute_ms_per_file = 0;
  p.metadata_ops_per_file = 0;

  sea::RunConfig fast;
  fast.profile = p;
  fast.root = root / "fast";
  fs::create_directories(fast.root);
  fast.workload_bin = seatest::bench_bin();
  double t_fast = sea::run_workload(fast).makespan_s;

  sea::RunConfig slow = fast;
  slow.root = root / "slow";
  fs::create_directories(slow.root);
  slow.latency_ms = 25;  // 16 writes -> >= 400ms injected
  double t_slow = sea::run_workload(slow).makespan_s;

  CHECK(t_slow > t_fast + 0.3);
}

TEST_CASE("report CSV round-trips") {
  TempDir dir("csv");
  fs::path csv = dir / "report.csv";
  std::mt19937 rng(31337);

  std::vector<sea::RunReport> rows;
  for (int i = 0; i < 12; ++i) {
    sea::RunReport r;
    r.profile = i % 2 ? "afni-like" : "fsl-like";
    r.mode = i % 3 ? "sea" : "baseline";
    r.degraded = rng() % 2;
    r.rep = i;
    r.makespan_s = static_cast<double>(rng() % 10000) / 100.0;
    r.bytes = rng() % 100000;
    r.speedup = static_cast<double>(rng() % 500) / 100.0;
    rows.push_back(r);
    sea::append_report_csv(csv, r);
  }

  auto parsed = sea::parse_report_csv(csv);
  REQUIRE(parsed.size() == rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(parsed[i].profile == rows[i].profile);
    CHECK(parsed[i].mode == rows[i].mode);
    CHECK(parsed[i].degraded == rows[i].degraded);
    CHECK(parsed[i].rep == rows[i].rep);
    CHECK(parsed[i].makespan_s == doctest::Approx(rows[i].makespan_s));
    CHECK(parsed[i].bytes == rows[i].bytes);
    CHECK(parsed[i].speedup == doctest::Approx(rows[i].speedup));
  }
}

TEST_CASE("sea-mode run produces a persistent tree identical to baseline") {
  TempDir base("benchsea");
  sea::BenchSandbox sb = sea::make_sandbox(base / "sb", /*fast_on_shm=*/false, 100, 0);

  auto p = *sea::find_profile("afni-like");
  p.n_files = 3;
  p.file_size = 256 * 1024;
  p.compute_ms_per_file = 10;
  p.metadata_ops_per_file = 4;

  sea::RunConfig baseline;
  baseline.profile = p;
  baseline.mode = "baseline";
  baseline.root = base / "baseline";
  fs::create_directories(baseline.root);
  baseline.workload_bin = seatest::bench_bin();
  sea::RunReport rb = sea::run_workload(baseline);
  REQUIRE(rb.valid);

  sea::RunConfig seacfg;
  seacfg.profile = p;
  seacfg.mode = "sea";
  seacfg.root = sb.mount;
  seacfg.workload_bin = seatest::bench_bin();
  seacfg.config_path = sb.config_path;
  seacfg.shim_path = seatest::shim_path();
  seacfg.stats_path = sb.stats_path;
  sea::RunReport rs = sea::run_workload(seacfg);
  REQUIRE(rs.valid);

  CHECK(seatest::tree_signature(sb.slow_tier) == seatest::tree_signature(baseline.root));
  CHECK(rs.bytes == rb.bytes);
  CHECK(rs.stats["total_calls"] > 0);

  std::error_code ec;
  fs::remove_all(sb.fast_tier, ec);
}
