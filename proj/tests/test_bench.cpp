// SPDX-License-Identifier: Apache-2.0
#include "bevpool/bench.hpp"

#include <doctest.h>

#include <json.hpp>

#include <sstream>

using namespace bevpool;

namespace {

BenchConfig small_config(std::uint64_t seed = 7) {
  BenchConfig c;
  c.kernels = {KernelKind::kBevPool, KernelKind::kBevPoolV2};
  BenchCell a;
  a.feat_h = 4;
  a.feat_w = 11;
  a.depth_bins = 10;
  a.channels = 8;
  a.grid_dims = {32, 32, 1};
  BenchCell b = a;
  b.feat_h = 8;
  b.feat_w = 22;
  c.ladder = {a, b};
  c.views = 2;
  c.repeats = 3;
  c.warmup = 1;
  c.seed = seed;
  return c;
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("run_benchmark record contract") {
  const auto config = small_config();
  int starts = 0, stops = 0;
  BenchHooks hooks{[&] { ++starts; }, [&] { ++stops; }};
  const auto rec =
      run_benchmark(KernelKind::kBevPool, config.ladder[0], config, hooks);
  CHECK(rec.ok);
  CHECK(rec.samples_ns.size() == 3);
  CHECK(rec.p10_ns <= rec.median_ns);
  CHECK(rec.median_ns <= rec.p90_ns);
  // The timer fires once per repeat, never for warmups or plan building.
  CHECK(starts == 3);
  CHECK(stops == 3);
  const std::int64_t frustum_bytes = 2LL * 10 * 4 * 11 * 8 * 4;
  CHECK(rec.model.auxiliary == frustum_bytes);
  CHECK(rec.aux_bytes_measured >= frustum_bytes);
}

TEST_CASE("bevpoolv2 measures zero scratch on every cell") {
  const auto config = small_config();
  for (const auto& cell : config.ladder) {
    const auto rec = run_benchmark(KernelKind::kBevPoolV2, cell, config);
    CHECK(rec.ok);
    CHECK(rec.aux_bytes_measured == 0);
    CHECK(rec.worker_scratch_bytes == 0);
    CHECK(rec.model.auxiliary == 0);
  }
}

TEST_CASE("sweep is the cartesian product in ladder order") {
  const auto config = small_config();
  const auto records = sweep(config);
  REQUIRE(records.size() == 4);
  CHECK(records[0].cell == config.ladder[0]);
  CHECK(records[0].kind == KernelKind::kBevPool);
  CHECK(records[1].kind == KernelKind::kBevPoolV2);
  CHECK(records[3].cell == config.ladder[1]);

  SUBCASE("same seed, same inputs and models") {
    const auto again = sweep(config);
    for (std::size_t i = 0; i < records.size(); ++i) {
      CHECK(again[i].model == records[i].model);
      CHECK(again[i].input_digest == records[i].input_digest);
      CHECK(again[i].plan_digest == records[i].plan_digest);
    }
    const auto other = sweep(small_config(8));
    CHECK(other[0].input_digest != records[0].input_digest);
  }
}

TEST_CASE("failed cells become failed records and the sweep goes on") {
  auto config = small_config();
  config.scratch_limit = 1024;  // far below bevpool's frustum buffer
  const auto records = sweep(config);
  REQUIRE(records.size() == 4);
  CHECK_FALSE(records[0].ok);
  CHECK(records[0].error.find("frustum feature") != std::string::npos);
  CHECK(records[1].ok);
  CHECK_FALSE(records[2].ok);
  CHECK(records[3].ok);
  const auto table = render_table(records);
  CHECK(table.find("FAIL") != std::string::npos);
  CHECK(table.find("speedup(min..max): n/a") != std::string::npos);
}

TEST_CASE("validate_bench_config") {
  auto c = small_config();
  CHECK_NOTHROW(validate_bench_config(c));
  c.repeats = 2;
  CHECK_THROWS_AS(validate_bench_config(c), std::invalid_argument);
  c = small_config();
  c.warmup = 0;
  CHECK_THROWS_AS(validate_bench_config(c), std::invalid_argument);
  c = small_config();
  c.ladder.clear();
  CHECK_THROWS_AS(validate_bench_config(c), std::invalid_argument);
}

TEST_CASE("default ladder") {
  const auto c = default_bench_config(1);
  REQUIRE(c.ladder.size() == 4);
  CHECK(c.ladder[0].feat_h == 16);
  CHECK(c.ladder[0].feat_w == 44);
  CHECK(c.ladder[3].feat_h == 40);
  CHECK(c.ladder[3].feat_w == 110);
  for (const auto& cell : c.ladder) {
    CHECK(cell.depth_bins == 59);
    CHECK(cell.channels == 64);
  }
  CHECK(c.kernels.size() == 4);
  CHECK(c.repeats >= 5);
  CHECK(c.warmup >= 2);
}

TEST_CASE("bench config file") {
  const auto c = bench_config_from_config(
      parse_config("bench.seed = 11\n"
                   "bench.kernels = bevpoolv2 cumsum\n"
                   "bench.ladder = 4x11 8x22/12/16/20x20x2\n"
                   "bench.channels = 32\n"
                   "bench.views = 3\n"
                   "bench.repeats = 4\n"));
  CHECK(c.seed == 11);
  CHECK(c.kernels ==
        std::vector<KernelKind>{KernelKind::kBevPoolV2, KernelKind::kCumsum});
  REQUIRE(c.ladder.size() == 2);
  CHECK(c.ladder[0].channels == 32);
  CHECK(c.ladder[0].depth_bins == 59);
  CHECK(c.ladder[1].depth_bins == 12);
  CHECK(c.ladder[1].grid_dims == std::array<int, 3>{20, 20, 2});
  CHECK(c.views == 3);
  CHECK(c.repeats == 4);

  const auto defaults = bench_config_from_config(parse_config("bench.seed = 3"));
  CHECK(defaults.ladder == default_bench_config(3).ladder);

  CHECK_THROWS_AS(bench_config_from_config(parse_config("bench.views = 2")),
                  ConfigError);
  CHECK_THROWS_AS(bench_config_from_config(
                      parse_config("bench.seed = 1\nbench.kernels = fast")),
                  ConfigError);
  CHECK_THROWS_AS(bench_config_from_config(
                      parse_config("bench.seed = 1\nbench.repeats = 2")),
                  ConfigError);
  CHECK_THROWS_AS(bench_config_from_config(
                      parse_config("bench.seed = 1\nbench.ladder = 4by11")),
                  ConfigError);
}

TEST_CASE("emit_report formats") {
  const auto records = sweep(small_config());

  SUBCASE("one record as CSV") {
    const auto lines =
        lines_of(emit_report({records[0]}, ReportFormat::kCsv));
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] ==
          "kernel,feat_h,feat_w,D,C,grid,median_ns,p10_ns,p90_ns,"
          "aux_bytes_measured,aux_bytes_model,status");
    CHECK(lines[1].rfind("bevpool,4,11,10,8,32x32x1,", 0) == 0);
    CHECK(lines[2].rfind("summary,", 0) == 0);
  }
  SUBCASE("four records as JSON") {
    const auto j = nlohmann::json::parse(emit_report(records, ReportFormat::kJson));
    REQUIRE(j.is_array());
    REQUIRE(j.size() == 5);
    CHECK(j.back().contains("summary"));
    CHECK(j.back()["summary"]["speedup_bevpool_over_bevpoolv2"].size() == 2);
    CHECK(j[0]["kernel"] == "bevpool");
  }
  SUBCASE("no records") {
    CHECK_THROWS_WITH_AS(emit_report({}, ReportFormat::kCsv), "no records",
                         std::invalid_argument);
  }
  SUBCASE("format tokens") {
    CHECK(parse_report_format("csv") == ReportFormat::kCsv);
    CHECK(parse_report_format("json") == ReportFormat::kJson);
    CHECK_FALSE(parse_report_format("yaml"));
  }
}

TEST_CASE("reports parse back to the same integers") {
  auto records = sweep(small_config());
  records[2].ok = false;
  for (auto format : {ReportFormat::kCsv, ReportFormat::kJson}) {
    const auto back = parse_report(emit_report(records, format));
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      CHECK(back[i].kind == records[i].kind);
      CHECK(back[i].cell == records[i].cell);
      CHECK(back[i].median_ns == records[i].median_ns);
      CHECK(back[i].p10_ns == records[i].p10_ns);
      CHECK(back[i].p90_ns == records[i].p90_ns);
      CHECK(back[i].aux_bytes_measured == records[i].aux_bytes_measured);
      CHECK(back[i].model.auxiliary == records[i].model.auxiliary);
      CHECK(back[i].ok == records[i].ok);
    }
  }
}

TEST_CASE("speedup summary line") {
  std::vector<BenchRecord> records(4);
  BenchCell big;
  big.feat_h = 40;
  big.feat_w = 110;
  records[0].kind = KernelKind::kBevPool;
  records[0].median_ns = 300;
  records[1].kind = KernelKind::kBevPoolV2;
  records[1].median_ns = 100;
  records[2].kind = KernelKind::kBevPool;
  records[2].cell = big;
  records[2].median_ns = 900;
  records[3].kind = KernelKind::kBevPoolV2;
  records[3].cell = big;
  records[3].median_ns = 200;
  const auto s = speedups(records);
  REQUIRE(s.size() == 2);
  CHECK(s[0].ratio == doctest::Approx(3.0));
  CHECK(s[1].ratio == doctest::Approx(4.5));
  CHECK(render_table(records).find("speedup(min..max): 3.000..4.500") !=
        std::string::npos);
  CHECK(emit_report(records, ReportFormat::kCsv)
            .find("summary,speedup_bevpool_over_bevpoolv2,"
                  "16x44/59/64/128x128x1=3.000;40x110/59/64/128x128x1=4.500") !=
        std::string::npos);
}

TEST_CASE("speedup does not shrink along a geometric ladder") {
  BenchConfig c;
  c.kernels = {KernelKind::kBevPool, KernelKind::kBevPoolV2};
  for (auto [h, w] : {std::pair{8, 22}, {16, 44}, {32, 88}}) {
    BenchCell cell;
    cell.feat_h = h;
    cell.feat_w = w;
    c.ladder.push_back(cell);
  }
  c.seed = 5;
  const auto s = speedups(sweep(c));
  REQUIRE(s.size() == 3);
  for (std::size_t i = 1; i < s.size(); ++i) {
    CAPTURE(s[i - 1].ratio);
    CAPTURE(s[i].ratio);
    // Wall-clock ratios; 10% slack for measurement noise.
    CHECK(s[i].ratio >= 0.9 * s[i - 1].ratio);
  }
  for (const auto& e : s) CHECK(e.ratio > 1.0);
}
