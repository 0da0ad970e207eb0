// SPDX-License-Identifier: Apache-2.0
#include "bevpool/bench.hpp"

#include "bevpool/memory.hpp"
#include "bevpool/synthetic.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace bevpool {
namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  for (std::string_view t : split(s, ' ')) {
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

template <class T>
T parse_number(std::string_view t, const std::string& what) {
  T v{};
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || p != t.data() + t.size()) {
    throw ConfigError(what + ": bad number '" + std::string(t) + "'");
  }
  return v;
}

std::array<int, 3> parse_dims(std::string_view t, const std::string& what) {
  const auto parts = split(t, 'x');
  if (parts.size() != 3) throw ConfigError(what + ": expected NXxNYxNZ");
  return {parse_number<int>(parts[0], what), parse_number<int>(parts[1], what),
          parse_number<int>(parts[2], what)};
}

std::string dims_label(const std::array<int, 3>& d) {
  return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" +
         std::to_string(d[2]);
}

std::int64_t percentile(const std::vector<std::int64_t>& sorted, double q) {
  const auto idx = static_cast<std::size_t>(
      std::lround(q * static_cast<double>(sorted.size() - 1)));
  return sorted[idx];
}

BEVFeature run_kernel(KernelKind kind, const BenchFixture& fx,
                      const PoolOptions& opts) {
  switch (kind) {
    case KernelKind::kOracle:
      return pool_oracle(fx.depth, fx.feat, fx.rig, fx.frustum, fx.grid, opts);
    case KernelKind::kCumsum:
      return pool_cumsum(fx.depth, fx.feat, fx.plan, opts);
    case KernelKind::kBevPool:
      return pool_bevpool(fx.depth, fx.feat, fx.plan, opts);
    case KernelKind::kBevPoolV2:
      return pool_bevpoolv2(fx.depth, fx.feat, fx.plan, opts);
  }
  throw std::invalid_argument("unknown kernel");
}

std::string format_ratio(double r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << r;
  return os.str();
}

}  // namespace

std::string BenchCell::label() const {
  return std::to_string(feat_h) + "x" + std::to_string(feat_w) + "/" +
         std::to_string(depth_bins) + "/" + std::to_string(channels) + "/" +
         dims_label(grid_dims);
}

void validate_bench_config(const BenchConfig& c) {
  if (c.repeats < 3) throw std::invalid_argument("repeats must be >= 3");
  if (c.warmup < 1) throw std::invalid_argument("warmup must be >= 1");
  if (c.ladder.empty()) throw std::invalid_argument("ladder is empty");
  if (c.kernels.empty()) throw std::invalid_argument("no kernels selected");
  if (c.views < 1 || c.downsample < 1 || !(c.depth_step > 0.0)) {
    throw std::invalid_argument("views, downsample and depth_step must be > 0");
  }
  if (((c.range_upper - c.range_lower).array() <= 0.0).any()) {
    throw std::invalid_argument("bench range is empty");
  }
  for (const BenchCell& cell : c.ladder) {
    if (cell.feat_h < 1 || cell.feat_w < 1 || cell.depth_bins < 1 ||
        cell.channels < 1 ||
        std::any_of(cell.grid_dims.begin(), cell.grid_dims.end(),
                    [](int d) { return d < 1; })) {
      throw std::invalid_argument("ladder cell " + cell.label() +
                                  " has a non-positive size");
    }
  }
}

BenchConfig default_bench_config(std::uint64_t seed) {
  BenchConfig c;
  c.kernels.assign(std::begin(kAllKernels), std::end(kAllKernels));
  for (auto [h, w] : {std::pair{16, 44}, {24, 66}, {32, 88}, {40, 110}}) {
    BenchCell cell;
    cell.feat_h = h;
    cell.feat_w = w;
    c.ladder.push_back(cell);
  }
  c.seed = seed;
  return c;
}

BenchConfig bench_config_from_config(const ConfigMap& cfg) {
  auto get = [&](const char* key) -> const ConfigEntry* {
    auto it = cfg.find(key);
    return it == cfg.end() ? nullptr : &it->second;
  };
  const ConfigEntry* seed = get("bench.seed");
  if (!seed) throw ConfigError("missing key 'bench.seed'");
  BenchConfig c = default_bench_config(
      parse_number<std::uint64_t>(seed->value, "bench.seed"));

  auto as_int = [&](const char* key, int& out) {
    if (auto* e = get(key)) out = parse_number<int>(e->value, key);
  };
  auto as_double = [&](const char* key, double& out) {
    if (auto* e = get(key)) out = parse_number<double>(e->value, key);
  };
  as_int("bench.views", c.views);
  as_int("bench.downsample", c.downsample);
  as_int("bench.repeats", c.repeats);
  as_int("bench.warmup", c.warmup);
  as_int("bench.workers", c.workers);
  as_double("bench.depth_start", c.depth_start);
  as_double("bench.depth_step", c.depth_step);

  if (auto* e = get("bench.kernels")) {
    c.kernels.clear();
    for (std::string_view t : tokens(e->value)) {
      auto k = parse_kernel(t);
      if (!k) throw ConfigError("bench.kernels: unknown kernel '" +
                                std::string(t) + "'");
      c.kernels.push_back(*k);
    }
  }
  BenchCell base;
  as_int("bench.depth_bins", base.depth_bins);
  as_int("bench.channels", base.channels);
  if (auto* e = get("bench.grid_dims")) {
    const auto t = tokens(e->value);
    if (t.size() != 3) throw ConfigError("bench.grid_dims: expected 3 values");
    for (int a = 0; a < 3; ++a) {
      base.grid_dims[a] = parse_number<int>(t[a], "bench.grid_dims");
    }
  }
  if (auto* e = get("bench.range")) {
    const auto t = tokens(e->value);
    if (t.size() != 6) throw ConfigError("bench.range: expected 6 values");
    for (int a = 0; a < 3; ++a) {
      c.range_lower[a] = parse_number<double>(t[a], "bench.range");
      c.range_upper[a] = parse_number<double>(t[a + 3], "bench.range");
    }
  }
  std::vector<BenchCell> ladder;
  if (auto* e = get("bench.ladder")) {
    for (std::string_view t : tokens(e->value)) {
      BenchCell cell = base;
      const auto parts = split(t, '/');
      const auto hw = split(parts[0], 'x');
      if (hw.size() != 2 || (parts.size() != 1 && parts.size() != 4)) {
        throw ConfigError("bench.ladder: bad cell '" + std::string(t) + "'");
      }
      cell.feat_h = parse_number<int>(hw[0], "bench.ladder");
      cell.feat_w = parse_number<int>(hw[1], "bench.ladder");
      if (parts.size() == 4) {
        cell.depth_bins = parse_number<int>(parts[1], "bench.ladder");
        cell.channels = parse_number<int>(parts[2], "bench.ladder");
        cell.grid_dims = parse_dims(parts[3], "bench.ladder");
      }
      ladder.push_back(cell);
    }
  } else {
    for (BenchCell cell : c.ladder) {
      cell.depth_bins = base.depth_bins;
      cell.channels = base.channels;
      cell.grid_dims = base.grid_dims;
      ladder.push_back(cell);
    }
  }
  c.ladder = std::move(ladder);
  try {
    validate_bench_config(c);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

BenchFixture make_fixture(const BenchCell& cell, const BenchConfig& config) {
  BenchFixture fx;
  fx.cell = cell;
  fx.rig = make_surround_rig(config.views, cell.feat_h * config.downsample,
                             cell.feat_w * config.downsample, config.seed);
  fx.frustum.feat_h = cell.feat_h;
  fx.frustum.feat_w = cell.feat_w;
  fx.frustum.downsample = config.downsample;
  fx.frustum.depth_start = config.depth_start;
  fx.frustum.depth_step = config.depth_step;
  fx.frustum.depth_end =
      config.depth_start + cell.depth_bins * config.depth_step;
  fx.grid.lower = config.range_lower;
  fx.grid.dims = cell.grid_dims;
  for (int a = 0; a < 3; ++a) {
    fx.grid.voxel_size[a] =
        (config.range_upper[a] - config.range_lower[a]) / cell.grid_dims[a];
  }
  fx.plan = build_plan(compute_voxel_map(fx.rig, fx.frustum, fx.grid),
                       static_cast<std::uint32_t>(cell.channels),
                       config.workers);

  const std::string label = cell.label();
  std::uint64_t cell_hash = 0xcbf29ce484222325ull;
  for (char ch : label) {
    cell_hash = (cell_hash ^ static_cast<unsigned char>(ch)) * 0x100000001b3ull;
  }
  Rng rng(config.seed ^ cell_hash);
  fx.depth = random_depth_scores(config.views, cell.depth_bins, cell.feat_h,
                                 cell.feat_w, rng);
  fx.feat = random_features(config.views, cell.feat_h, cell.feat_w,
                            cell.channels, rng);
  fx.input_digest = tensor_digest(fx.depth.data) ^
                    (tensor_digest(fx.feat.data) * 0x9e3779b97f4a7c15ull);
  return fx;
}

BenchRecord run_benchmark(KernelKind kind, const BenchFixture& fx,
                          const BenchConfig& config, const BenchHooks& hooks) {
  BenchRecord rec;
  rec.kind = kind;
  rec.cell = fx.cell;
  rec.points = static_cast<std::int64_t>(fx.plan.num_points());
  rec.intervals = static_cast<std::int64_t>(fx.plan.num_intervals());
  rec.input_digest = fx.input_digest;
  rec.plan_digest = fx.plan.meta.digest;
  rec.model = estimate_working_set(kind, workload_of(fx.plan, fx.cell.channels));

  AllocationTracker tracker;
  if (config.scratch_limit) tracker.set_limit(*config.scratch_limit);
  PoolOptions opts;
  opts.workers = config.workers;
  opts.scratch = &tracker;

  try {
    for (int i = 0; i < config.warmup; ++i) run_kernel(kind, fx, opts);
    for (int i = 0; i < config.repeats; ++i) {
      tracker.reset_peak();
      const std::size_t baseline = tracker.current_bytes();
      if (hooks.on_timer_start) hooks.on_timer_start();
      const auto t0 = std::chrono::steady_clock::now();
      BEVFeature out = run_kernel(kind, fx, opts);
      const auto t1 = std::chrono::steady_clock::now();
      if (hooks.on_timer_stop) hooks.on_timer_stop();
      rec.samples_ns.push_back(
          std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0)
              .count());
      rec.aux_bytes_measured =
          std::max<std::int64_t>(rec.aux_bytes_measured,
                                 static_cast<std::int64_t>(
                                     tracker.peak_bytes() - baseline));
    }
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
    rec.samples_ns.clear();
    return rec;
  }

  std::vector<std::int64_t> sorted = rec.samples_ns;
  std::sort(sorted.begin(), sorted.end());
  rec.p10_ns = percentile(sorted, 0.10);
  rec.median_ns = percentile(sorted, 0.50);
  rec.p90_ns = percentile(sorted, 0.90);
  return rec;
}

BenchRecord run_benchmark(KernelKind kind, const BenchCell& cell,
                          const BenchConfig& config, const BenchHooks& hooks) {
  validate_bench_config(config);
  return run_benchmark(kind, make_fixture(cell, config), config, hooks);
}

std::vector<BenchRecord> sweep(const BenchConfig& config,
                               const BenchHooks& hooks) {
  validate_bench_config(config);
  std::vector<BenchRecord> records;
  for (const BenchCell& cell : config.ladder) {
    BenchFixture fx;
    try {
      fx = make_fixture(cell, config);
    } catch (const std::exception& e) {
      for (KernelKind kind : config.kernels) {
        BenchRecord rec;
        rec.kind = kind;
        rec.cell = cell;
        rec.ok = false;
        rec.error = std::string("plan build failed: ") + e.what();
        records.push_back(rec);
      }
      continue;
    }
    for (KernelKind kind : config.kernels) {
      records.push_back(run_benchmark(kind, fx, config, hooks));
    }
  }
  return records;
}

std::vector<SpeedupEntry> speedups(const std::vector<BenchRecord>& records,
                                   KernelKind baseline, KernelKind target) {
  std::vector<SpeedupEntry> out;
  for (const BenchRecord& b : records) {
    if (b.kind != baseline || !b.ok) continue;
    for (const BenchRecord& t : records) {
      if (t.kind == target && t.ok && t.cell == b.cell && t.median_ns > 0) {
        out.push_back({b.cell, static_cast<double>(b.median_ns) /
                                   static_cast<double>(t.median_ns)});
        break;
      }
    }
  }
  return out;
}

std::optional<ReportFormat> parse_report_format(std::string_view token) {
  if (token == "csv") return ReportFormat::kCsv;
  if (token == "json") return ReportFormat::kJson;
  return std::nullopt;
}

std::string emit_report(const std::vector<BenchRecord>& records,
                        ReportFormat format) {
  if (records.empty()) throw std::invalid_argument("no records");
  const auto ratios = speedups(records);
  if (format == ReportFormat::kCsv) {
    std::ostringstream os;
    os << "kernel,feat_h,feat_w,D,C,grid,median_ns,p10_ns,p90_ns,"
          "aux_bytes_measured,aux_bytes_model,status\n";
    for (const BenchRecord& r : records) {
      os << kernel_name(r.kind) << ',' << r.cell.feat_h << ',' << r.cell.feat_w
         << ',' << r.cell.depth_bins << ',' << r.cell.channels << ','
         << dims_label(r.cell.grid_dims) << ',' << r.median_ns << ','
         << r.p10_ns << ',' << r.p90_ns << ',' << r.aux_bytes_measured << ','
         << r.model.auxiliary << ',' << (r.ok ? "ok" : "failed") << '\n';
    }
    os << "summary,speedup_bevpool_over_bevpoolv2,";
    for (std::size_t i = 0; i < ratios.size(); ++i) {
      if (i) os << ';';
      os << ratios[i].cell.label() << '=' << format_ratio(ratios[i].ratio);
    }
    os << '\n';
    return os.str();
  }

  nlohmann::json arr = nlohmann::json::array();
  for (const BenchRecord& r : records) {
    arr.push_back({{"kernel", kernel_name(r.kind)},
                   {"feat_h", r.cell.feat_h},
                   {"feat_w", r.cell.feat_w},
                   {"D", r.cell.depth_bins},
                   {"C", r.cell.channels},
                   {"grid", dims_label(r.cell.grid_dims)},
                   {"median_ns", r.median_ns},
                   {"p10_ns", r.p10_ns},
                   {"p90_ns", r.p90_ns},
                   {"aux_bytes_measured", r.aux_bytes_measured},
                   {"aux_bytes_model", r.model.auxiliary},
                   {"status", r.ok ? "ok" : "failed"}});
  }
  nlohmann::json summary = nlohmann::json::array();
  for (const SpeedupEntry& s : ratios) {
    summary.push_back({{"cell", s.cell.label()}, {"ratio", s.ratio}});
  }
  arr.push_back(
      {{"summary", {{"speedup_bevpool_over_bevpoolv2", summary}}}});
  return arr.dump(2) + "\n";
}

std::vector<BenchRecord> parse_report(std::string_view text) {
  std::vector<BenchRecord> out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '[') {
    const auto arr = nlohmann::json::parse(text);
    for (const auto& j : arr) {
      if (j.contains("summary")) continue;
      BenchRecord r;
      const auto kind = parse_kernel(j.at("kernel").get<std::string>());
      if (!kind) throw std::invalid_argument("report: unknown kernel");
      r.kind = *kind;
      r.cell.feat_h = j.at("feat_h");
      r.cell.feat_w = j.at("feat_w");
      r.cell.depth_bins = j.at("D");
      r.cell.channels = j.at("C");
      r.cell.grid_dims = parse_dims(j.at("grid").get<std::string>(), "grid");
      r.median_ns = j.at("median_ns");
      r.p10_ns = j.at("p10_ns");
      r.p90_ns = j.at("p90_ns");
      r.aux_bytes_measured = j.at("aux_bytes_measured");
      r.model.auxiliary = j.at("aux_bytes_model");
      r.ok = j.at("status") == "ok";
      out.push_back(r);
    }
    return out;
  }

  bool header = true;
  for (std::string_view line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    if (line.rfind("summary,", 0) == 0) continue;
    const auto f = split(line, ',');
    if (f.size() != 12) {
      throw std::invalid_argument("report: expected 12 CSV columns");
    }
    BenchRecord r;
    const auto kind = parse_kernel(f[0]);
    if (!kind) throw std::invalid_argument("report: unknown kernel");
    r.kind = *kind;
    r.cell.feat_h = parse_number<int>(f[1], "feat_h");
    r.cell.feat_w = parse_number<int>(f[2], "feat_w");
    r.cell.depth_bins = parse_number<int>(f[3], "D");
    r.cell.channels = parse_number<int>(f[4], "C");
    r.cell.grid_dims = parse_dims(f[5], "grid");
    r.median_ns = parse_number<std::int64_t>(f[6], "median_ns");
    r.p10_ns = parse_number<std::int64_t>(f[7], "p10_ns");
    r.p90_ns = parse_number<std::int64_t>(f[8], "p90_ns");
    r.aux_bytes_measured = parse_number<std::int64_t>(f[9], "aux_bytes");
    r.model.auxiliary = parse_number<std::int64_t>(f[10], "aux_bytes_model");
    r.ok = f[11] == "ok";
    out.push_back(r);
  }
  return out;
}

std::string render_table(const std::vector<BenchRecord>& records) {
  std::ostringstream os;
  auto mib = [](std::int64_t bytes) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(1) << bytes / (1024.0 * 1024.0);
    return s.str();
  };
  auto ms = [](std::int64_t ns) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << ns / 1e6;
    return s.str();
  };
  os << std::left << std::setw(10) << "kernel" << std::setw(24) << "cell"
     << std::right << std::setw(12) << "median_ms" << std::setw(12) << "p10_ms"
     << std::setw(12) << "p90_ms" << std::setw(14) << "aux_MiB" << std::setw(14)
     << "model_MiB" << std::setw(8) << "status" << '\n';
  for (const BenchRecord& r : records) {
    os << std::left << std::setw(10) << kernel_name(r.kind) << std::setw(24)
       << r.cell.label() << std::right;
    if (r.ok) {
      os << std::setw(12) << ms(r.median_ns) << std::setw(12) << ms(r.p10_ns)
         << std::setw(12) << ms(r.p90_ns) << std::setw(14)
         << mib(r.aux_bytes_measured);
    } else {
      os << std::setw(12) << "-" << std::setw(12) << "-" << std::setw(12)
         << "-" << std::setw(14) << "-";
    }
    os << std::setw(14) << mib(r.model.auxiliary) << std::setw(8)
       << (r.ok ? "ok" : "FAIL") << '\n';
  }
  const auto ratios = speedups(records);
  os << "\nspeedup bevpool/bevpoolv2 per ladder step:\n";
  for (const SpeedupEntry& s : ratios) {
    os << "  " << std::left << std::setw(24) << s.cell.label() << std::right
       << format_ratio(s.ratio) << "x\n";
  }
  if (ratios.empty()) {
    os << "speedup(min..max): n/a\n";
  } else {
    const auto [lo, hi] = std::minmax_element(
        ratios.begin(), ratios.end(),
        [](const auto& a, const auto& b) { return a.ratio < b.ratio; });
    os << "speedup(min..max): " << format_ratio(lo->ratio) << ".."
       << format_ratio(hi->ratio) << '\n';
  }
  return os.str();
}

}  // namespace bevpool
