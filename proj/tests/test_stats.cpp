#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "sea/stats.hpp"

using sea::CallFn;
using sea::CallStats;

TEST_CASE("record keeps totals consistent") {
  CallStats stats;
  stats.record(CallFn::open, 0, 0, 0, false);
  stats.record(CallFn::write, 0, 1024, 0, false);
  stats.record(CallFn::write, 0, 4096, 1, true);
  stats.record(CallFn::read, 512, 0, 0, false);
  stats.record(CallFn::close, 0, 0, 0, false);

  CHECK(stats.total_calls() == 5);
  CHECK(stats.slow_tier_calls() == 1);
  CHECK(stats.bytes_written() == 5120);
  CHECK(stats.bytes_read() == 512);
  CHECK(stats.tier_bytes_written(0) == 1024);
  CHECK(stats.tier_bytes_written(1) == 4096);
  CHECK(stats.fn_count(CallFn::write) == 2);
}

TEST_CASE("line round trip and the total = sum(per-function) invariant") {
  std::mt19937 rng(2024);
  for (int iter = 0; iter < 30; ++iter) {
    CallStats stats;
    int n = static_cast<int>(rng() % 200);
    for (int i = 0; i < n; ++i) {
      auto fn = static_cast<CallFn>(rng() % static_cast<int>(CallFn::kCount));
      int tier = static_cast<int>(rng() % 3);
      stats.record(fn, rng() % 1000, rng() % 1000, tier, tier == 2);
    }

    sea::StatsRecord rec = sea::parse_stats_line(stats.to_line());
    CHECK(rec["total_calls"] == stats.total_calls());
    CHECK(rec["slow_tier_calls"] == stats.slow_tier_calls());
    CHECK(rec["bytes_read"] == stats.bytes_read());
    CHECK(rec["bytes_written"] == stats.bytes_written());

    std::uint64_t fn_sum = 0;
    for (const auto& [k, v] : rec)
      if (k.rfind("call.", 0) == 0) fn_sum += v;
    CHECK(fn_sum == rec["total_calls"]);
  }
}

TEST_CASE("stats file aggregation sums process records") {
  seatest::TempDir dir("stats");
  auto path = dir / "stats.txt";

  CallStats a;
  a.record(CallFn::open, 0, 0, 0, false);
  a.record(CallFn::write, 0, 100, 0, false);
  CallStats b;
  b.record(CallFn::write, 0, 50, 1, true);

  CHECK(sea::append_record_line(path, a.to_line()));
  CHECK(sea::append_record_line(path, b.to_line()));

  sea::StatsRecord total = sea::aggregate_stats_file(path);
  CHECK(total["total_calls"] == 3);
  CHECK(total["bytes_written"] == 150);
  CHECK(total["slow_tier_calls"] == 1);
  CHECK(total["call.write"] == 2);
}

TEST_CASE("malformed stats lines are skipped, not fatal") {
  auto rec = sea::parse_stats_line("junk no-equals =bare total_calls=7 trailing");
  CHECK(rec["total_calls"] == 7);
  CHECK(rec.count("junk") == 0);
}
