// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "bevpool/geometry.hpp"
#include "bevpool/kernels.hpp"
#include "bevpool/plan.hpp"
#include "bevpool/tensor.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bevpool {

/// Upper bounds for fuzzed instances.
struct InstanceLimits {
  int max_views = 3;
  int max_depth_bins = 8;
  int max_height = 16;
  int max_width = 16;
  int max_channels = 8;
  int max_grid_xy = 32;
  int max_grid_z = 2;
};

/// One complete, self-consistent pooling problem.
struct PoolingInstance {
  CameraRig rig;
  FrustumSpec frustum;
  VoxelGridSpec grid;
  DepthScores depth;
  ImageFeatures feat;
  PoolingPlan plan;
};

/// Random rig, frustum and grid arranged so that a good share of frustum
/// points lands inside the grid, plus normalized depth scores and features.
PoolingInstance random_instance(std::uint64_t seed,
                                const InstanceLimits& limits = {});

/// Norm-wise relative error max|got - ref| / max|ref|. Falls back to the
/// absolute error when the reference is all zero.
double relative_error(const BEVFeature& got, const BEVFeature& ref);

/// Largest |got| over entries where the reference is exactly zero.
double max_abs_on_zero_reference(const BEVFeature& got, const BEVFeature& ref);

/// First voxel not referenced by the plan whose output row is not exactly
/// zero, if any.
std::optional<std::size_t> first_nonzero_unplanned_voxel(
    const BEVFeature& bev, const PoolingPlan& plan);

using PlanKernel = std::function<BEVFeature(
    const DepthScores&, const ImageFeatures&, const PoolingPlan&,
    const PoolOptions&)>;

struct NamedKernel {
  std::string name;
  PlanKernel run;
};

/// cumsum, bevpool and bevpoolv2.
std::vector<NamedKernel> plan_kernels();

/// Faults that the verification suite must detect.
enum class Mutation {
  kNone,
  /// bevpoolv2 drops the last point of every interval.
  kIntervalOffByOne,
};

inline constexpr double kEquivalenceRelTol = 1e-5;
inline constexpr double kZeroAbsTol = 1e-6;

struct VerifyOptions {
  std::uint64_t seed = 0;
  int cases = 1;
  int workers = 0;
  Mutation mutation = Mutation::kNone;
  InstanceLimits limits;
};

struct VerifyResult {
  bool passed = true;
  int cases_run = 0;
  double max_relative_error = 0.0;
  /// Seed of the first failing case; `--seed <it> --cases 1` reproduces it.
  std::optional<std::uint64_t> failing_seed;
  std::string failure;
};

/// Case i uses seed `opts.seed + i`. Per case: plan invariants, every plan
/// kernel against the float64 oracle, and exact zeros outside the plan.
/// Stops at the first failing case.
VerifyResult run_verification(const VerifyOptions& opts);

}  // namespace bevpool
