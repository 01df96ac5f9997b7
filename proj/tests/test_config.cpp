#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "sea/config.hpp"

using sea::ConfigError;
using sea::Disposition;
using seatest::TempDir;

namespace fs = std::filesystem;

namespace {

std::string two_tier_ini(const fs::path& base) {
  return "[sea]\nmount = " + (base / "mnt").string() +
         "\n\n[tier.0]\nroot = " + (base / "t0").string() +
         "\nwritable = true\n\n[tier.1]\nroot = " + (base / "t1").string() +
         "\nwritable = true\npersistent = true\n";
}

TempDir make_dirs(const std::string& tag) {
  TempDir dir(tag);
  fs::create_directories(dir / "mnt");
  fs::create_directories(dir / "t0");
  fs::create_directories(dir / "t1");
  return dir;
}

}  // namespace

TEST_CASE("minimal valid config") {
  TempDir dir = make_dirs("cfgmin");
  sea::SeaConfig cfg = sea::parse_config(two_tier_ini(dir.path));
  CHECK(cfg.tiers.size() == 2);
  CHECK(cfg.tiers[0].priority == 0);
  CHECK(cfg.tiers[0].writable);
  CHECK_FALSE(cfg.tiers[0].persistent);
  CHECK(cfg.tiers[1].persistent);
  CHECK(cfg.persistent_index() == 1);
  CHECK(cfg.mount_dir == dir / "mnt");
}

TEST_CASE("two persistent tiers rejected") {
  TempDir dir = make_dirs("cfgdup");
  std::string ini = "[sea]\nmount = " + (dir / "mnt").string() +
                    "\n[tier.0]\nroot = " + (dir / "t0").string() +
                    "\nwritable = true\npersistent = true\n[tier.1]\nroot = " +
                    (dir / "t1").string() + "\nwritable = true\npersistent = true\n";
  CHECK_THROWS_WITH_AS(sea::parse_config(ini), doctest::Contains("persistent"),
                       ConfigError);
  try {
    sea::parse_config(ini);
  } catch (const ConfigError& e) {
    CHECK(e.kind == ConfigError::Kind::DuplicatePersistent);
  }
}

TEST_CASE("nested mount and tier overlaps") {
  // Hand-built table of nested/sibling relationships; only true prefix
  // overlaps (either direction) must be rejected.
  struct Case {
    const char* a;
    const char* b;
    bool overlap;
  };
  const Case table[] = {
      {"/x/mnt", "/x/mnt", true},          // identical
      {"/x/mnt", "/x/mnt/sub", true},      // mount above tier
      {"/x/mnt/sub", "/x/mnt", true},      // tier above mount
      {"/x/mnt", "/x/mnt2", false},        // sibling with shared name prefix
      {"/x/mnt2", "/x/mnt", false},        // reverse sibling
      {"/x/a/b/c", "/x/a/b", true},        // deep nesting
      {"/x/a/b", "/x/a/bc", false},        // partial component match
      {"/x", "/x/a/b/c/d", true},          // far ancestor
      {"/x/a", "/y/a", false},             // disjoint roots
      {"/x/a/.", "/x/a/sub/..", true},     // dot segments normalize first
  };
  TempDir dir = make_dirs("cfgnest");
  for (const auto& c : table) {
    // The overlap predicate is exercised through real directories laid out to
    // mirror each table row.
    fs::path a = dir.path / fs::path(c.a).relative_path();
    fs::path b = dir.path / fs::path(c.b).relative_path();
    fs::create_directories(a);
    fs::create_directories(b);
    fs::create_directories(dir / "t1");
    std::string ini = "[sea]\nmount = " + a.lexically_normal().string() +
                      "\n[tier.0]\nroot = " + b.string() +
                      "\nwritable = true\n[tier.1]\nroot = " + (dir / "t1").string() +
                      "\nwritable = true\npersistent = true\n";
    if (c.overlap) {
      CHECK_THROWS_AS(sea::parse_config(ini), ConfigError);
      try {
        sea::parse_config(ini);
      } catch (const ConfigError& e) {
        CHECK(e.kind == ConfigError::Kind::NestedMount);
      }
    } else {
      CHECK_NOTHROW(sea::parse_config(ini));
    }
  }
}

TEST_CASE("config error taxonomy names the offending line") {
  TempDir dir = make_dirs("cfgerr");
  auto expect = [&](const std::string& ini, ConfigError::Kind kind) {
    try {
      sea::parse_config(ini);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.kind == kind);
    }
  };

  expect("[tier.0]\nroot = " + (dir / "t0").string() + "\nwritable = true\npersistent = true\n",
         ConfigError::Kind::MissingMount);
  expect("[sea]\nmount = " + (dir / "mnt").string() + "\nbogus = 1\n",
         ConfigError::Kind::UnknownKey);
  expect(two_tier_ini(dir.path) + "\n[weird]\nx = 1\n", ConfigError::Kind::UnknownKey);
  expect("[sea]\nmount = " + (dir / "missing").string() + "\n[tier.0]\nroot = " +
             (dir / "t0").string() + "\nwritable = true\npersistent = true\n",
         ConfigError::Kind::NonexistentDirectory);
  expect("[sea]\nmount = " + (dir / "mnt").string() + "\n[tier.0]\nroot = " +
             (dir / "t0").string() + "\npersistent = true\n",
         ConfigError::Kind::NoWritableTier);
  expect("[sea]\nmount = " + (dir / "mnt").string() + "\n[tier.0]\nroot = " +
             (dir / "t0").string() + "\n[tier.0]\nroot = " + (dir / "t1").string() + "\n",
         ConfigError::Kind::DuplicatePriority);
  expect("[sea]\nmount = " + (dir / "mnt").string() + "\n[tier.0]\nroot = " +
             (dir / "t0").string() + "\nwritable = true\n",
         ConfigError::Kind::MissingPersistent);
  // Priorities must be contiguous from 0.
  expect("[sea]\nmount = " + (dir / "mnt").string() + "\n[tier.0]\nroot = " +
             (dir / "t0").string() + "\nwritable = true\n[tier.2]\nroot = " +
             (dir / "t1").string() + "\nwritable = true\npersistent = true\n",
         ConfigError::Kind::BadValue);
  // Persistent must carry the largest priority.
  expect("[sea]\nmount = " + (dir / "mnt").string() + "\n[tier.0]\nroot = " +
             (dir / "t0").string() + "\nwritable = true\npersistent = true\n[tier.1]\nroot = " +
             (dir / "t1").string() + "\nwritable = true\n",
         ConfigError::Kind::MissingPersistent);

  // Line numbers surface in the message.
  try {
    sea::parse_config("[sea]\nmount = " + (dir / "mnt").string() + "\nbogus = 1\n");
  } catch (const ConfigError& e) {
    CHECK(e.line == 3);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("policy file parsing") {
  CHECK(sea::parse_policy_file("").empty());

  auto one = sea::parse_policy_file("out/.*\\.nii\\.gz\n# comment\n");
  CHECK(one.size() == 1);
  CHECK(one[0].source == "out/.*\\.nii\\.gz");

  try {
    sea::parse_policy_file("([unclosed");
    FAIL("expected BadPattern");
  } catch (const ConfigError& e) {
    CHECK(e.kind == ConfigError::Kind::BadPattern);
    CHECK(e.line == 1);
  }

  // Blank lines do not shift pattern order.
  auto several = sea::parse_policy_file("\n\na/.*\n\nb/.*\n");
  REQUIRE(several.size() == 2);
  CHECK(several[0].source == "a/.*");
  CHECK(several[1].source == "b/.*");
}

TEST_CASE("load_policies tolerates missing files, not bad ones") {
  TempDir dir("pol");
  sea::PolicyRules rules = sea::load_policies(dir.path);
  CHECK(rules.empty());

  sea::write_text_file(dir / sea::kFlushListName, "results/.*\n");
  sea::write_text_file(dir / sea::kPrefetchListName, "inputs/.*\n");
  rules = sea::load_policies(dir.path);
  CHECK(rules.flush.size() == 1);
  CHECK(rules.evict.empty());
  CHECK(rules.prefetch.size() == 1);

  sea::write_text_file(dir / sea::kEvictListName, "(((\n");
  CHECK_THROWS_AS(sea::load_policies(dir.path), ConfigError);
}

TEST_CASE("classify dispositions") {
  auto rules = seatest::make_rules({"results/.*"}, {"results/.*"});
  CHECK(sea::classify("results/sub-01_bold.nii", rules).action == Disposition::Move);

  rules = seatest::make_rules({}, {"tmp/.*"});
  CHECK(sea::classify("tmp/scratch.bin", rules).action == Disposition::Evict);

  rules = seatest::make_rules({"results/.*"}, {"tmp/.*"});
  CHECK(sea::classify("logs/run.log", rules).action == Disposition::None);
  CHECK(sea::classify("results/a.nii", rules).action == Disposition::Flush);

  // Prefetch eligibility is orthogonal.
  rules = seatest::make_rules({"inputs/.*"}, {}, {"inputs/.*"});
  auto c = sea::classify("inputs/sub-01.nii", rules);
  CHECK(c.action == Disposition::Flush);
  CHECK(c.prefetch);

  // Anchored matching: a pattern for the basename alone must not fire on a
  // nested path.
  rules = seatest::make_rules({"a\\.dat"});
  CHECK(sea::classify("sub/a.dat", rules).action == Disposition::None);
  CHECK(sea::classify("a.dat", rules).action == Disposition::Flush);
}

TEST_CASE("classify Move iff both sets match (randomized)") {
  std::mt19937 rng(20240817);
  const std::vector<std::string> segments = {"out", "tmp", "results", "a", "b", "data"};
  const std::vector<std::string> pattern_pool = {"out/.*",  "tmp/.*",    "results/.*",
                                                 ".*\\.bin", ".*data.*", "a/b/.*"};

  for (int iter = 0; iter < 200; ++iter) {
    std::vector<std::string> flush, evict;
    for (const auto& p : pattern_pool) {
      if (rng() % 3 == 0) flush.push_back(p);
      if (rng() % 3 == 0) evict.push_back(p);
    }
    auto rules = seatest::make_rules(flush, evict);

    std::string path = segments[rng() % segments.size()];
    int depth = static_cast<int>(rng() % 3);
    for (int d = 0; d < depth; ++d) path += "/" + segments[rng() % segments.size()];
    if (rng() % 2) path += ".bin";

    // Independent oracle: evaluate the two sets directly.
    auto hit = [&](const std::vector<std::string>& pats) {
      for (const auto& p : pats)
        if (std::regex_match(path, std::regex(p))) return true;
      return false;
    };
    bool f = hit(flush), e = hit(evict);
    Disposition expected = f && e   ? Disposition::Move
                           : f      ? Disposition::Flush
                           : e      ? Disposition::Evict
                                    : Disposition::None;
    CHECK(sea::classify(path, rules).action == expected);
  }
}

TEST_CASE("serialize/parse round trip") {
  TempDir dir = make_dirs("cfgrt");
  std::mt19937 rng(7);
  for (int iter = 0; iter < 20; ++iter) {
    sea::SeaConfig cfg;
    cfg.mount_dir = dir / "mnt";
    cfg.flush_interval = std::chrono::milliseconds(100 + rng() % 5000);
    cfg.stability_window = std::chrono::milliseconds(rng() % 4000);
    cfg.log_level = static_cast<sea::LogLevel>(rng() % 4);
    if (rng() % 2) cfg.stats_path = dir / "stats.txt";
    int n = 2 + static_cast<int>(rng() % 2);
    for (int i = 0; i < n; ++i) {
      std::string name = "t" + std::to_string(i);
      fs::create_directories(dir / name);
      sea::TierSpec t;
      t.root = dir / name;
      t.priority = i;
      t.writable = (i == n - 1) ? true : (rng() % 2 == 0);
      t.capacity_hint = (rng() % 2) ? (rng() % 1000) * 1024 : 0;
      t.persistent = i == n - 1;
      cfg.tiers.push_back(t);
    }
    if (std::none_of(cfg.tiers.begin(), cfg.tiers.end(),
                     [](const sea::TierSpec& t) { return t.writable; }))
      cfg.tiers[0].writable = true;

    sea::SeaConfig reparsed = sea::parse_config(sea::serialize_config(cfg));
    CHECK(reparsed == cfg);
  }
}

TEST_CASE("size suffixes and inline comments") {
  TempDir dir = make_dirs("cfgsz");
  std::string ini = "[sea]\nmount = " + (dir / "mnt").string() +
                    "  # the view\nflush_interval = 2K\n[tier.0]\nroot = " +
                    (dir / "t0").string() + "\nwritable = yes\ncapacity_hint = 4M\n" +
                    "[tier.1]\nroot = " + (dir / "t1").string() +
                    "\nwritable = 1\npersistent = true\n";
  sea::SeaConfig cfg = sea::parse_config(ini);
  CHECK(cfg.flush_interval.count() == 2048);
  CHECK(cfg.tiers[0].capacity_hint == 4ull << 20);
  CHECK(cfg.tiers[0].writable);
}
