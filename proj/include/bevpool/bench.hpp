// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "bevpool/config.hpp"
#include "bevpool/geometry.hpp"
#include "bevpool/kernels.hpp"
#include "bevpool/plan.hpp"
#include "bevpool/tensor.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bevpool {

/// One rung of the resolution ladder.
struct BenchCell {
  int feat_h = 16;
  int feat_w = 44;
  int depth_bins = 59;
  int channels = 64;
  std::array<int, 3> grid_dims{128, 128, 1};

  std::string label() const;  // "16x44/59/64/128x128x1"
  bool operator==(const BenchCell&) const = default;
};

struct BenchConfig {
  std::vector<KernelKind> kernels;
  std::vector<BenchCell> ladder;
  int views = 6;
  int downsample = 16;
  double depth_start = 1.0;
  double depth_step = 1.0;
  Eigen::Vector3d range_lower{-51.2, -51.2, -5.0};
  Eigen::Vector3d range_upper{51.2, 51.2, 3.0};
  int repeats = 5;
  int warmup = 2;
  std::uint64_t seed = 0;
  int workers = 0;
  /// Cap on kernel scratch bytes; larger requests fail the record.
  std::optional<std::size_t> scratch_limit;
};

/// Throws std::invalid_argument unless repeats >= 3, warmup >= 1 and the
/// kernel list and ladder are non-empty.
void validate_bench_config(const BenchConfig& config);

/// The four-kernel sweep over 16x44, 24x66, 32x88 and 40x110 feature grids
/// (256x704 .. 640x1760 images at stride 16), D = 59, C = 64.
BenchConfig default_bench_config(std::uint64_t seed);

/// Reads `bench.*` keys; missing keys keep the defaults of
/// default_bench_config. `bench.seed` is mandatory.
///
///   bench.kernels   = oracle cumsum bevpool bevpoolv2
///   bench.ladder    = 16x44 24x66 ...     (HxW, or HxW/D/C/NXxNYxNZ)
///   bench.depth_bins, bench.channels, bench.grid_dims = nx ny nz
///   bench.views, bench.downsample, bench.depth_start, bench.depth_step
///   bench.range     = xmin ymin zmin xmax ymax zmax
///   bench.repeats, bench.warmup, bench.seed, bench.workers
BenchConfig bench_config_from_config(const ConfigMap& cfg);

/// Rig, plan and seeded inputs for one cell; built outside any timed region.
struct BenchFixture {
  BenchCell cell;
  CameraRig rig;
  FrustumSpec frustum;
  VoxelGridSpec grid;
  PoolingPlan plan;
  DepthScores depth;
  ImageFeatures feat;
  std::uint64_t input_digest = 0;
};

BenchFixture make_fixture(const BenchCell& cell, const BenchConfig& config);

struct BenchRecord {
  KernelKind kind = KernelKind::kBevPoolV2;
  BenchCell cell;
  std::vector<std::int64_t> samples_ns;
  std::int64_t median_ns = 0;
  std::int64_t p10_ns = 0;
  std::int64_t p90_ns = 0;
  std::int64_t aux_bytes_measured = 0;
  /// Fixed per-worker scratch, kept out of aux_bytes_measured.
  std::int64_t worker_scratch_bytes = 0;
  WorkingSetModel model;
  std::int64_t points = 0;
  std::int64_t intervals = 0;
  std::uint64_t input_digest = 0;
  std::uint64_t plan_digest = 0;
  bool ok = true;
  std::string error;
};

/// Called around every timed kernel call, never around warmups.
struct BenchHooks {
  std::function<void()> on_timer_start;
  std::function<void()> on_timer_stop;
};

BenchRecord run_benchmark(KernelKind kind, const BenchFixture& fixture,
                          const BenchConfig& config,
                          const BenchHooks& hooks = {});

BenchRecord run_benchmark(KernelKind kind, const BenchCell& cell,
                          const BenchConfig& config,
                          const BenchHooks& hooks = {});

/// One record per (cell, kernel), cells in ladder order and kernels in
/// config order within a cell.
std::vector<BenchRecord> sweep(const BenchConfig& config,
                               const BenchHooks& hooks = {});

struct SpeedupEntry {
  BenchCell cell;
  double ratio = 0.0;  // median(baseline) / median(target)
};

/// Per-cell median ratio for cells where both kernels succeeded.
std::vector<SpeedupEntry> speedups(const std::vector<BenchRecord>& records,
                                   KernelKind baseline = KernelKind::kBevPool,
                                   KernelKind target = KernelKind::kBevPoolV2);

enum class ReportFormat { kCsv, kJson };

std::optional<ReportFormat> parse_report_format(std::string_view token);

/// CSV columns: kernel, feat_h, feat_w, D, C, grid, median_ns, p10_ns,
/// p90_ns, aux_bytes_measured, aux_bytes_model, status. The last line is
///   summary,speedup_bevpool_over_bevpoolv2,<cell>=<ratio>;<cell>=<ratio>...
/// JSON is an array of record objects with the same fields followed by one
/// {"summary": {...}} object. Throws std::invalid_argument("no records")
/// when `records` is empty.
std::string emit_report(const std::vector<BenchRecord>& records,
                        ReportFormat format);

/// Reads a report produced by emit_report (either format). Fields that the
/// report does not carry keep their defaults.
std::vector<BenchRecord> parse_report(std::string_view text);

/// Aligned text table with per-step speedups and a
/// "speedup(min..max)" summary line.
std::string render_table(const std::vector<BenchRecord>& records);

}  // namespace bevpool
