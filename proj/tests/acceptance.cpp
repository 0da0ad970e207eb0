// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails. Tolerances are fixed here, not configurable.

#include "bevpool/bench.hpp"
#include "bevpool/kernels.hpp"
#include "bevpool/plan.hpp"
#include "bevpool/synthetic.hpp"
#include "bevpool/verify.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace bevpool;

namespace {

constexpr double kRelTol = 1e-5;           // criteria 1, 5, 6
constexpr double kVerifySeconds = 60.0;    // criterion 1
constexpr double kMinLargestSpeedup = 1.5; // criterion 2
constexpr double kTrendSlack = 0.10;       // criterion 2
constexpr double kMaxMemoryRatio = 0.10;   // criterion 3

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const std::string& id, const std::string& name,
            const Outcome& o) {
  std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << id << ' ' << name << ": "
            << o.detail << std::endl;
  if (!o.pass) ++failures;
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

Outcome oracle_equivalence() {
  const std::string cmd =
      std::string(BEVPOOL_CLI) + " verify --seed 7 --cases 200 2>&1";
  const auto t0 = std::chrono::steady_clock::now();
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {false, "cannot start CLI"};
  std::string out;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  double max_rel = INFINITY;
  if (auto pos = out.find("max_relative_error="); pos != std::string::npos) {
    max_rel = std::stod(out.substr(pos + 19));
  }
  Outcome o;
  o.pass = code == 0 && max_rel <= kRelTol && secs < kVerifySeconds;
  o.detail = "exit=" + std::to_string(code) + " max_rel_err=" + fmt(max_rel) +
             " (<= " + fmt(kRelTol) + ") runtime=" + fmt(secs) + "s (< " +
             fmt(kVerifySeconds) + "s)";
  return o;
}

Outcome speedup_trend(const std::vector<BenchRecord>& records) {
  const auto s = speedups(records);
  const std::size_t expected = default_bench_config(0).ladder.size();
  if (s.size() != expected) {
    return {false, "missing bevpool/bevpoolv2 pairs (" +
                       std::to_string(s.size()) + " of " +
                       std::to_string(expected) + ")"};
  }
  Outcome o;
  std::ostringstream detail;
  detail << "ratios";
  for (const auto& e : s) {
    detail << ' ' << e.cell.feat_h << 'x' << e.cell.feat_w << '=' << fmt(e.ratio);
    if (!(e.ratio >= 1.0)) o.pass = false;  // v2 median <= bevpool median
  }
  const double first = s.front().ratio;
  const double last = s.back().ratio;
  if (!(last >= kMinLargestSpeedup)) o.pass = false;
  if (!(last >= first * (1.0 - kTrendSlack))) o.pass = false;
  detail << "; largest >= " << kMinLargestSpeedup << " and >= smallest*"
         << (1.0 - kTrendSlack);
  o.detail = detail.str();
  return o;
}

Outcome memory_model(const std::vector<BenchRecord>& records) {
  Outcome o;
  std::ostringstream detail;
  detail << "plan/frustum ratios";
  double prev = INFINITY;
  for (const auto& cell : default_bench_config(0).ladder) {
    const BenchRecord* bp = nullptr;
    const BenchRecord* v2 = nullptr;
    for (const auto& r : records) {
      if (!(r.cell == cell)) continue;
      if (r.kind == KernelKind::kBevPool) bp = &r;
      if (r.kind == KernelKind::kBevPoolV2) v2 = &r;
    }
    if (!bp || !v2 || !bp->ok || !v2->ok) {
      return {false, "missing record for " + cell.label()};
    }
    const double ratio = double(v2->model.plan + v2->model.auxiliary) /
                         double(bp->model.auxiliary);
    detail << ' ' << cell.feat_h << 'x' << cell.feat_w << '='
           << fmt(100 * ratio) << '%';
    if (!(ratio <= kMaxMemoryRatio) || !(ratio <= prev)) o.pass = false;
    prev = ratio;
    const std::int64_t frustum_bytes = std::int64_t{6} * cell.depth_bins *
                                       cell.feat_h * cell.feat_w *
                                       cell.channels * 4;
    if (v2->aux_bytes_measured != 0 || v2->worker_scratch_bytes != 0) {
      o.pass = false;
      detail << " [v2 measured " << v2->aux_bytes_measured << " B]";
    }
    if (bp->aux_bytes_measured < frustum_bytes) {
      o.pass = false;
      detail << " [bevpool measured " << bp->aux_bytes_measured << " < "
             << frustum_bytes << " B]";
    }
  }
  detail << "; <= " << 100 * kMaxMemoryRatio
         << "% and non-increasing; v2 measured scratch 0 B; bevpool measured >= "
            "N*D*H*W*C*4";
  o.detail = detail.str();
  return o;
}

Outcome offline_precompute() {
  // Plan from the default 16x44 cell geometry; tensors are never consulted.
  const BenchConfig config = default_bench_config(7);
  BenchFixture fx = make_fixture(config.ladder[0], config);
  const auto vmap = compute_voxel_map(fx.rig, fx.frustum, fx.grid);
  const std::uint64_t digest = build_plan(vmap, 64, 1).meta.digest;
  bool stable = true;
  for (int i = 0; i < 10; ++i) {
    stable &= compute_voxel_map(fx.rig, fx.frustum, fx.grid).indices ==
              vmap.indices;
    stable &= build_plan(vmap, 64, 1).meta.digest == digest;
  }
  for (int workers : {1, 4}) {
    stable &= build_plan(vmap, 64, workers).meta.digest == digest;
  }
  stable &= fx.plan.meta.digest == digest;

  int round_trips = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const PoolingPlan plan = random_instance(1000 + seed).plan;
    const auto bytes = serialize_plan(plan);
    const PoolingPlan back = deserialize_plan(bytes);
    if (back == plan && serialize_plan(back) == bytes) ++round_trips;
  }
  Outcome o;
  o.pass = stable && round_trips == 100;
  std::ostringstream detail;
  detail << "digest " << std::hex << digest << std::dec
         << (stable ? " identical" : " DIFFERS")
         << " over 10 rebuilds and workers {1,4}; round trips "
         << round_trips << "/100 bit-identical";
  o.detail = detail.str();
  return o;
}

Outcome determinism_and_safety() {
  bool identical = true;
  bool zeros = true;
  double multi_err = 0;
  std::int64_t points = 0;
  PoolOptions single;
  single.workers = 1;
  PoolOptions many;
  many.workers = 4;
  many.min_intervals_per_task = 1;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const PoolingInstance inst = random_instance(20240607 + seed);
    points += inst.plan.num_points();
    const BEVFeature first =
        pool_bevpoolv2(inst.depth, inst.feat, inst.plan, single);
    for (int i = 0; i < 10; ++i) {
      identical &=
          pool_bevpoolv2(inst.depth, inst.feat, inst.plan, single).data ==
          first.data;
    }
    const BEVFeature ref =
        pool_oracle(inst.depth, inst.feat, inst.rig, inst.frustum, inst.grid);
    zeros &= !first_nonzero_unplanned_voxel(ref, inst.plan);
    for (const auto& k : plan_kernels()) {
      const auto out = k.run(inst.depth, inst.feat, inst.plan, many);
      multi_err = std::max(multi_err, relative_error(out, ref));
      zeros &= !first_nonzero_unplanned_voxel(out, inst.plan);
      zeros &= !first_nonzero_unplanned_voxel(
          k.run(inst.depth, inst.feat, inst.plan, single), inst.plan);
    }
  }
  Outcome o;
  o.pass = identical && multi_err <= kRelTol && zeros;
  o.detail = std::string("single-worker bevpoolv2 ") +
             (identical ? "bit-identical" : "DIFFERS") +
             " over 10 runs x 20 instances; 4-worker max_rel_err=" +
             fmt(multi_err) + "; unplanned voxels " +
             (zeros ? "exactly zero" : "NONZERO") +
             " in all kernels (total P=" + std::to_string(points) + ")";
  return o;
}

double linearity_error(const BEVFeature& lhs, double a, const BEVFeature& x,
                       double b, const BEVFeature& y) {
  double diff = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < lhs.data.size(); ++i) {
    diff = std::max(diff, std::abs(lhs.data[i] - (a * x.data[i] + b * y.data[i])));
    sx = std::max(sx, std::abs(double(x.data[i])));
    sy = std::max(sy, std::abs(double(y.data[i])));
  }
  const double scale = std::abs(a) * sx + std::abs(b) * sy;
  return scale > 0 ? diff / scale : diff;
}

Outcome linearity() {
  double worst = 0;
  int instances = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const PoolingInstance inst = random_instance(5000 + seed);
    Rng rng(seed);
    std::vector<NamedKernel> kernels = plan_kernels();
    kernels.push_back({"oracle", [&](const DepthScores& d,
                                     const ImageFeatures& f,
                                     const PoolingPlan&, const PoolOptions& o) {
                         return pool_oracle(d, f, inst.rig, inst.frustum,
                                            inst.grid, o);
                       }});
    const float a = static_cast<float>(rng.uniform(-2, 2));
    const float b = static_cast<float>(rng.uniform(-2, 2));
    const auto f2 = random_features(inst.feat.num_views, inst.feat.height,
                                    inst.feat.width, inst.feat.channels, rng);
    ImageFeatures fmix = inst.feat;
    for (std::size_t i = 0; i < fmix.data.size(); ++i) {
      fmix.data[i] = a * inst.feat.data[i] + b * f2.data[i];
    }
    const float da = static_cast<float>(rng.uniform(0, 2));
    const float db = static_cast<float>(rng.uniform(0, 2));
    const auto d2 =
        random_depth_scores(inst.depth.num_views, inst.depth.depth_bins,
                            inst.depth.height, inst.depth.width, rng);
    DepthScores dmix = inst.depth;
    for (std::size_t i = 0; i < dmix.data.size(); ++i) {
      dmix.data[i] = da * inst.depth.data[i] + db * d2.data[i];
    }
    for (const auto& k : kernels) {
      const auto p1 = k.run(inst.depth, inst.feat, inst.plan, {});
      const auto pf = k.run(inst.depth, f2, inst.plan, {});
      const auto pd = k.run(d2, inst.feat, inst.plan, {});
      worst = std::max(worst, linearity_error(k.run(inst.depth, fmix,
                                                    inst.plan, {}),
                                              a, p1, b, pf));
      worst = std::max(worst, linearity_error(k.run(dmix, inst.feat,
                                                    inst.plan, {}),
                                              da, p1, db, pd));
    }
    ++instances;
  }
  Outcome o;
  o.pass = worst <= kRelTol;
  o.detail = std::to_string(instances) +
             " instances x 4 kernels, feature and depth; max_rel_err=" +
             fmt(worst) + " (<= " + fmt(kRelTol) + ")";
  return o;
}

}  // namespace

int main() {
  std::cout << "bevpool acceptance suite\n";
  report("C1", "oracle equivalence", oracle_equivalence());

  BenchConfig config = default_bench_config(7);
  config.kernels = {KernelKind::kBevPool, KernelKind::kBevPoolV2};
  std::cout << "  running default ladder sweep (" << config.ladder.size()
            << " cells, " << config.repeats << " repeats, " << config.warmup
            << " warmups)..." << std::endl;
  const auto records = sweep(config);
  std::cout << render_table(records);
  report("C2", "speedup direction and trend", speedup_trend(records));
  report("C3", "memory model", memory_model(records));
  report("C4", "offline precompute contract", offline_precompute());
  report("C5", "determinism and safety", determinism_and_safety());
  report("C6", "linearity", linearity());

  std::cout << (failures == 0 ? "ALL CRITERIA PASS" : "SOME CRITERIA FAIL")
            << " (" << failures << " failing)\n";
  return failures == 0 ? 0 : 1;
}
