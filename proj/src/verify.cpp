// SPDX-License-Identifier: Apache-2.0
#include "bevpool/verify.hpp"

#include "bevpool/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace bevpool {

PoolingInstance random_instance(std::uint64_t seed,
                                const InstanceLimits& limits) {
  Rng rng(seed);
  PoolingInstance inst;
  const int views = rng.uniform_int(1, limits.max_views);
  inst.frustum.feat_h = rng.uniform_int(1, limits.max_height);
  inst.frustum.feat_w = rng.uniform_int(1, limits.max_width);
  inst.frustum.downsample = 1 << rng.uniform_int(0, 3);
  const int bins = rng.uniform_int(1, limits.max_depth_bins);
  inst.frustum.depth_start = rng.uniform(0.5, 2.0);
  inst.frustum.depth_step = rng.uniform(0.5, 3.0);
  inst.frustum.depth_end =
      inst.frustum.depth_start + bins * inst.frustum.depth_step;

  const double image_h = inst.frustum.feat_h * inst.frustum.downsample;
  const double image_w = inst.frustum.feat_w * inst.frustum.downsample;
  const double pi = std::numbers::pi;
  for (int i = 0; i < views; ++i) {
    CameraView v;
    const double hfov = rng.uniform(40.0, 120.0) * pi / 180.0;
    v.fx = image_w / (2.0 * std::tan(hfov / 2.0));
    v.fy = v.fx * rng.uniform(0.8, 1.2);
    v.cx = image_w / 2.0 + rng.uniform(-0.1, 0.1) * image_w;
    v.cy = image_h / 2.0 + rng.uniform(-0.1, 0.1) * image_h;
    v.rot = camera_to_ego_rotation(rng.uniform(0.0, 2.0 * pi),
                                   rng.uniform(-0.3, 0.3));
    v.trans = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
               rng.uniform(0.0, 2.0)};
    inst.rig.views.push_back(v);
  }

  const int nx = rng.uniform_int(1, limits.max_grid_xy);
  const int ny = rng.uniform_int(1, limits.max_grid_xy);
  const int nz = rng.uniform_int(1, limits.max_grid_z);
  const double reach = inst.frustum.depth_end * rng.uniform(0.5, 1.2);
  inst.grid = VoxelGridSpec::ego_centered(
      {2.0 * reach / nx, 2.0 * reach / ny, rng.uniform(2.0, 8.0) / nz},
      {nx, ny, nz}, rng.uniform(-6.0, -1.0));

  const int channels = rng.uniform_int(1, limits.max_channels);
  inst.depth = random_depth_scores(views, bins, inst.frustum.feat_h,
                                   inst.frustum.feat_w, rng);
  inst.feat = random_features(views, inst.frustum.feat_h, inst.frustum.feat_w,
                              channels, rng);
  inst.plan = build_plan(compute_voxel_map(inst.rig, inst.frustum, inst.grid),
                         static_cast<std::uint32_t>(channels));
  return inst;
}

double relative_error(const BEVFeature& got, const BEVFeature& ref) {
  if (got.data.size() != ref.data.size()) return INFINITY;
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < ref.data.size(); ++i) {
    diff = std::max(diff, std::abs(double(got.data[i]) - double(ref.data[i])));
    scale = std::max(scale, std::abs(double(ref.data[i])));
    if (std::isnan(got.data[i])) return INFINITY;
  }
  return scale > 0.0 ? diff / scale : diff;
}

double max_abs_on_zero_reference(const BEVFeature& got,
                                 const BEVFeature& ref) {
  if (got.data.size() != ref.data.size()) return INFINITY;
  double worst = 0.0;
  for (std::size_t i = 0; i < ref.data.size(); ++i) {
    if (ref.data[i] == 0.0f) {
      worst = std::max(worst, std::abs(double(got.data[i])));
    }
  }
  return worst;
}

std::optional<std::size_t> first_nonzero_unplanned_voxel(
    const BEVFeature& bev, const PoolingPlan& plan) {
  std::vector<bool> planned(bev.num_voxels(), false);
  for (std::int32_t v : plan.ranks_bev) {
    if (v >= 0 && static_cast<std::size_t>(v) < planned.size()) {
      planned[v] = true;
    }
  }
  for (std::size_t v = 0; v < planned.size(); ++v) {
    if (planned[v]) continue;
    for (float x : bev.row(v)) {
      if (x != 0.0f) return v;
    }
  }
  return std::nullopt;
}

std::vector<NamedKernel> plan_kernels() {
  return {
      {"cumsum",
       [](const auto& d, const auto& f, const auto& p, const auto& o) {
         return pool_cumsum(d, f, p, o);
       }},
      {"bevpool",
       [](const auto& d, const auto& f, const auto& p, const auto& o) {
         return pool_bevpool(d, f, p, o);
       }},
      {"bevpoolv2",
       [](const auto& d, const auto& f, const auto& p, const auto& o) {
         return pool_bevpoolv2(d, f, p, o);
       }},
  };
}

namespace {

std::vector<NamedKernel> kernels_under_test(Mutation mutation) {
  auto kernels = plan_kernels();
  if (mutation == Mutation::kIntervalOffByOne) {
    for (auto& k : kernels) {
      if (k.name != "bevpoolv2") continue;
      k.run = [](const DepthScores& d, const ImageFeatures& f,
                 const PoolingPlan& p, const PoolOptions& o) {
        PoolingPlan shortened = p;
        for (auto& len : shortened.interval_lengths) len -= 1;
        return pool_bevpoolv2(d, f, shortened, o);
      };
    }
  }
  return kernels;
}

std::string describe(const PoolingInstance& inst) {
  std::ostringstream os;
  os << "N=" << inst.rig.num_views() << " D=" << inst.depth.depth_bins
     << " H=" << inst.depth.height << " W=" << inst.depth.width
     << " C=" << inst.feat.channels << " grid=" << inst.grid.nx() << 'x'
     << inst.grid.ny() << 'x' << inst.grid.nz()
     << " P=" << inst.plan.num_points() << " M=" << inst.plan.num_intervals();
  return os.str();
}

}  // namespace

VerifyResult run_verification(const VerifyOptions& opts) {
  VerifyResult result;
  const auto kernels = kernels_under_test(opts.mutation);
  PoolOptions pool;
  pool.workers = opts.workers;

  auto fail = [&](std::uint64_t seed, const std::string& why) {
    result.passed = false;
    result.failing_seed = seed;
    result.failure = why;
  };

  for (int c = 0; c < opts.cases && result.passed; ++c) {
    const std::uint64_t seed = opts.seed + static_cast<std::uint64_t>(c);
    const PoolingInstance inst = random_instance(seed, opts.limits);
    ++result.cases_run;

    if (const auto violations = validate_plan(inst.plan); !violations.empty()) {
      fail(seed, "plan invariant violated: " + violations.front());
      break;
    }
    const BEVFeature ref = pool_oracle(inst.depth, inst.feat, inst.rig,
                                       inst.frustum, inst.grid, pool);
    if (auto v = first_nonzero_unplanned_voxel(ref, inst.plan)) {
      fail(seed, "oracle wrote unplanned voxel " + std::to_string(*v));
      break;
    }
    for (const NamedKernel& k : kernels) {
      BEVFeature got;
      try {
        got = k.run(inst.depth, inst.feat, inst.plan, pool);
      } catch (const std::exception& e) {
        fail(seed, k.name + " threw: " + e.what());
        break;
      }
      const double rel = relative_error(got, ref);
      result.max_relative_error = std::max(result.max_relative_error, rel);
      std::ostringstream why;
      if (!(rel <= kEquivalenceRelTol)) {
        why << k.name << " relative error " << rel << " exceeds "
            << kEquivalenceRelTol << " (" << describe(inst) << ')';
      } else if (const double z = max_abs_on_zero_reference(got, ref);
                 !(z <= kZeroAbsTol)) {
        why << k.name << " is " << z << " where the oracle is zero ("
            << describe(inst) << ')';
      } else if (auto v = first_nonzero_unplanned_voxel(got, inst.plan)) {
        why << k.name << " wrote unplanned voxel " << *v << " ("
            << describe(inst) << ')';
      }
      if (!why.str().empty()) {
        fail(seed, why.str());
        break;
      }
    }
  }
  return result;
}

}  // namespace bevpool
