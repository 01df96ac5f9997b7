#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>
#include <thread>

#include "helpers.hpp"
#include "sea/flusher.hpp"

using sea::Disposition;
using sea::TaskKind;
using seatest::make_rules;
using seatest::plant_file;
using seatest::TestSetup;

namespace fs = std::filesystem;

namespace {

sea::ScanOptions no_window() {
  sea::ScanOptions opts;
  opts.ignore_stability = true;
  return opts;
}

}  // namespace

TEST_CASE("scan_cycle maps dispositions to tasks") {
  TestSetup ts(2, "scan");
  plant_file(ts.tier(0) / "results/a.nii", "data-a");
  plant_file(ts.tier(0) / "tmp/x.bin", "data-x");
  plant_file(ts.tier(0) / "results/b.nii", "data-b");
  plant_file(ts.tier(0) / "untouched.log", "log");

  auto rules = make_rules({"results/a\\.nii", "results/b\\.nii"}, {"tmp/.*", "results/b\\.nii"});
  sea::NamespaceView view = sea::scan_namespace(ts.config);
  auto tasks = sea::scan_cycle(view, rules, ts.config, no_window());

  REQUIRE(tasks.size() == 3);
  std::map<std::string, TaskKind> by_path;
  for (const auto& t : tasks) by_path[t.logical] = t.kind;
  CHECK(by_path["results/a.nii"] == TaskKind::Flush);
  CHECK(by_path["tmp/x.bin"] == TaskKind::Evict);
  CHECK(by_path["results/b.nii"] == TaskKind::Move);
  CHECK(by_path.count("untouched.log") == 0);

  // Largest first.
  for (size_t i = 1; i < tasks.size(); ++i) CHECK(tasks[i - 1].size >= tasks[i].size);
}

TEST_CASE("stability window and open writers defer tasks") {
  TestSetup ts(2, "window");
  plant_file(ts.tier(0) / "results/fresh.nii", "fresh");
  auto rules = make_rules({"results/.*"});
  sea::NamespaceView view = sea::scan_namespace(ts.config);

  sea::ScanOptions windowed;
  windowed.stability_window = std::chrono::milliseconds(60'000);
  CHECK(sea::scan_cycle(view, rules, ts.config, windowed).empty());

  windowed.ignore_stability = true;
  CHECK(sea::scan_cycle(view, rules, ts.config, windowed).size() == 1);

  sea::SyncHooks hooks;
  hooks.has_open_writer = [](const std::string& logical) {
    return logical == "results/fresh.nii";
  };
  auto guarded = no_window();
  guarded.hooks = &hooks;
  CHECK(sea::scan_cycle(view, rules, ts.config, guarded).empty());
}

TEST_CASE("flush keeps the cache copy and clears dirtiness") {
  TestSetup ts(2, "flush");
  plant_file(ts.tier(0) / "results/a.nii", "payload");
  auto rules = make_rules({"results/.*"});

  auto tasks = sea::scan_cycle(sea::scan_namespace(ts.config), rules, ts.config, no_window());
  REQUIRE(tasks.size() == 1);
  CHECK(sea::execute_task(tasks[0], ts.config).ok);

  CHECK(fs::exists(ts.tier(0) / "results/a.nii"));
  CHECK(sea::read_text_file(ts.persist() / "results/a.nii") == "payload");
  CHECK_FALSE(sea::is_dirty(sea::probe_locations("results/a.nii", ts.config), ts.config));

  // Clean files produce no further work.
  CHECK(sea::scan_cycle(sea::scan_namespace(ts.config), rules, ts.config, no_window()).empty());
}

TEST_CASE("evict-only files die in cache and never persist") {
  TestSetup ts(2, "evict");
  plant_file(ts.tier(0) / "tmp/x.bin", "scratch");
  auto rules = make_rules({}, {"tmp/.*"});

  auto tasks = sea::scan_cycle(sea::scan_namespace(ts.config), rules, ts.config, no_window());
  REQUIRE(tasks.size() == 1);
  CHECK(tasks[0].kind == TaskKind::Evict);
  CHECK(sea::execute_task(tasks[0], ts.config).ok);

  CHECK_FALSE(fs::exists(ts.tier(0) / "tmp/x.bin"));
  CHECK_FALSE(fs::exists(ts.persist() / "tmp/x.bin"));
}

TEST_CASE("move leaves exactly one copy, on the persistent tier") {
  TestSetup ts(3, "move");
  plant_file(ts.tier(0) / "results/b.nii", "moved-bytes");
  plant_file(ts.tier(1) / "results/b.nii", "stale-copy");
  auto rules = make_rules({"results/.*"}, {"results/.*"});

  auto tasks = sea::scan_cycle(sea::scan_namespace(ts.config), rules, ts.config, no_window());
  REQUIRE(tasks.size() == 1);
  CHECK(tasks[0].kind == TaskKind::Move);
  CHECK(sea::execute_task(tasks[0], ts.config).ok);

  CHECK_FALSE(fs::exists(ts.tier(0) / "results/b.nii"));
  CHECK_FALSE(fs::exists(ts.tier(1) / "results/b.nii"));
  CHECK(sea::read_text_file(ts.persist() / "results/b.nii") == "moved-bytes");
}

TEST_CASE("drain matches the disposition oracle") {
  TestSetup ts(2, "drain");
  plant_file(ts.tier(0) / "out/r1.nii", std::string(2000, 'a'));
  plant_file(ts.tier(0) / "out/r2.nii", std::string(300, 'b'));
  plant_file(ts.tier(0) / "out/r3.nii", "c");
  plant_file(ts.tier(0) / "tmp/t1.bin", "t1");
  plant_file(ts.tier(0) / "tmp/t2.bin", "t2");
  plant_file(ts.tier(0) / "keep/k.log", "k");

  auto rules = make_rules({"out/.*"}, {"tmp/.*"});
  sea::DrainSummary summary = sea::drain(ts.config, rules);

  CHECK(summary.flushed == 3);
  CHECK(summary.evicted == 2);
  CHECK(summary.moved == 0);
  CHECK(summary.bytes == 2301);
  CHECK(summary.left_in_cache == 1);
  CHECK(summary.ok());

  // Persistent tree contains exactly the three flush-matching files.
  auto sig = seatest::tree_signature(ts.persist());
  std::set<std::string> files;
  for (const auto& [k, v] : sig)
    if (k.back() != '/') files.insert(k);
  CHECK(files == std::set<std::string>{"out/r1.nii", "out/r2.nii", "out/r3.nii"});

  // Empty rules: nothing happens.
  TestSetup ts2(2, "drain0");
  plant_file(ts2.tier(0) / "a.dat", "a");
  sea::DrainSummary zero = sea::drain(ts2.config, make_rules({}));
  CHECK(zero.flushed == 0);
  CHECK(zero.evicted == 0);
  CHECK(zero.moved == 0);
  CHECK(fs::exists(ts2.tier(0) / "a.dat"));
}

TEST_CASE("drain converges on randomized file sets (model oracle)") {
  std::mt19937 rng(555);
  const std::vector<std::string> dirs = {"out", "tmp", "logs", "data"};
  for (int iter = 0; iter < 20; ++iter) {
    TestSetup ts(2, "drainp");
    std::vector<std::string> files;
    int n = 3 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
      std::string rel = dirs[rng() % dirs.size()] + "/f" + std::to_string(i) + ".dat";
      plant_file(ts.tier(0) / rel, "content-" + std::to_string(i));
      files.push_back(rel);
    }
    std::vector<std::string> flush, evict;
    for (const auto& d : dirs) {
      if (rng() % 2) flush.push_back(d + "/.*");
      if (rng() % 2) evict.push_back(d + "/.*");
    }
    auto rules = make_rules(flush, evict);

    sea::drain(ts.config, rules);

    // Model: apply the dispositions to the logical file set directly.
    for (const auto& rel : files) {
      bool on_cache = fs::exists(ts.tier(0) / rel);
      bool on_persist = fs::exists(ts.persist() / rel);
      switch (sea::classify(rel, rules).action) {
        case Disposition::Flush:
          CHECK(on_cache);
          CHECK(on_persist);
          break;
        case Disposition::Evict:
          CHECK_FALSE(on_cache);
          CHECK_FALSE(on_persist);
          break;
        case Disposition::Move:
          CHECK_FALSE(on_cache);
          CHECK(on_persist);
          break;
        case Disposition::None:
          CHECK(on_cache);
          CHECK_FALSE(on_persist);
          break;
      }
    }

    // No staging debris after a drain.
    for (const auto& t : ts.config.tiers)
      for (auto it = fs::recursive_directory_iterator(t.root);
           it != fs::recursive_directory_iterator(); ++it)
        CHECK_FALSE(sea::is_internal_name(it->path().filename().string()));
  }
}

TEST_CASE("prefetch copies to the fastest tier without evicting") {
  TestSetup ts(2, "prefetch");
  plant_file(ts.persist() / "inputs/sub-01.nii", "input-image");
  auto rules = make_rules({}, {}, {"inputs/.*"});

  auto tasks = sea::prefetch_cycle(sea::scan_namespace(ts.config), rules, ts.config);
  REQUIRE(tasks.size() == 1);
  CHECK(tasks[0].kind == TaskKind::Prefetch);
  CHECK(tasks[0].dst_tier == 0);
  CHECK(sea::execute_task(tasks[0], ts.config).ok);

  // Both copies now exist and reads resolve to the fast one.
  CHECK(sea::read_text_file(ts.tier(0) / "inputs/sub-01.nii") == "input-image");
  CHECK(fs::exists(ts.persist() / "inputs/sub-01.nii"));
  auto r = sea::resolve_read_fs("inputs/sub-01.nii", ts.config);
  REQUIRE(r.has_value());
  CHECK(*r == ts.tier(0) / "inputs/sub-01.nii");

  // The copy must not register as dirty, or it would flow straight back.
  CHECK_FALSE(sea::is_dirty(sea::probe_locations("inputs/sub-01.nii", ts.config), ts.config));

  // Idempotence: already on tier 0.
  CHECK(sea::prefetch_cycle(sea::scan_namespace(ts.config), rules, ts.config).empty());
}

TEST_CASE("prefetch skips files larger than the free space") {
  TestSetup ts(2, "prefbig");
  // A sparse file whose nominal size dwarfs any real filesystem.
  fs::path huge = ts.persist() / "inputs/huge.nii";
  fs::create_directories(huge.parent_path());
  std::ofstream(huge).put('x');
  fs::resize_file(huge, 1ull << 50);

  auto rules = make_rules({}, {}, {"inputs/.*"});
  auto tasks = sea::prefetch_cycle(sea::scan_namespace(ts.config), rules, ts.config);
  CHECK(tasks.empty());
}

TEST_CASE("drain reports files that keep failing") {
  TestSetup ts(2, "fail");
  plant_file(ts.tier(0) / "out/a.dat", "payload");
  // A directory squatting on the destination path defeats the final rename.
  fs::create_directories(ts.persist() / "out/a.dat");

  auto rules = make_rules({"out/.*"});
  sea::DrainSummary summary = sea::drain(ts.config, rules);
  CHECK_FALSE(summary.ok());
  CHECK(summary.flushed == 0);
  REQUIRE(summary.errors.size() == 1);
  CHECK(summary.errors[0].find("out/a.dat") != std::string::npos);
}

TEST_CASE("flusher thread flushes in the background") {
  TestSetup ts(2, "thread");
  ts.config.flush_interval = std::chrono::milliseconds(50);
  ts.config.stability_window = std::chrono::milliseconds(0);
  seatest::write_config_file(ts, "out/.*\n");

  plant_file(ts.tier(0) / "out/bg.dat", "background");

  sea::FlusherThread flusher(ts.config, sea::SyncHooks{}, true, false);
  flusher.start();
  fs::path target = ts.persist() / "out/bg.dat";
  for (int i = 0; i < 100 && !fs::exists(target); ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  flusher.stop();

  CHECK(sea::read_text_file(target) == "background");
}

TEST_CASE("policy reload picks up rules added mid-run") {
  TestSetup ts(2, "reload");
  ts.config.flush_interval = std::chrono::milliseconds(50);
  ts.config.stability_window = std::chrono::milliseconds(0);
  seatest::write_config_file(ts, "");  // empty flush list to start

  plant_file(ts.tier(0) / "late/x.dat", "late");

  sea::FlusherThread flusher(ts.config, sea::SyncHooks{}, true, false);
  flusher.start();
  std::this_thread::sleep_for(std::chrono::milliseconds(150));
  CHECK_FALSE(fs::exists(ts.persist() / "late/x.dat"));

  sea::write_text_file(ts.dir / sea::kFlushListName, "late/.*\n");
  fs::path target = ts.persist() / "late/x.dat";
  for (int i = 0; i < 100 && !fs::exists(target); ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  flusher.stop();
  CHECK(fs::exists(target));
}
