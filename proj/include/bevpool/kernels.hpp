// SPDX-License-Identifier: Apache-2.0
#pragma once

// Camera-to-BEV pooling kernels. Every kernel computes, for each voxel v,
//
//   BEV[v, :] = sum over frustum points p in v of depth[p] * feat[pixel(p), :]
//
// and they differ only in how they get there:
//
//   oracle     dense loop over all frustum points, geometry recomputed inline,
//              float64 accumulation. Ground truth.
//   cumsum     gathers the sorted P x C product matrix, takes an inclusive
//              prefix sum along P and differences it at interval boundaries.
//   bevpool    materializes the full (N, D, H, W, C) frustum feature, then
//              sums each interval's rows in parallel.
//   bevpoolv2  reads depth and feature values through the plan's frustum
//              indices; no frustum feature is ever formed.
//
// Kernel-private buffers come from PoolOptions::scratch so callers can
// measure them.

#include "bevpool/geometry.hpp"
#include "bevpool/plan.hpp"
#include "bevpool/tensor.hpp"

#include <cstdint>
#include <memory_resource>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bevpool {

enum class KernelKind { kOracle, kCumsum, kBevPool, kBevPoolV2 };

inline constexpr KernelKind kAllKernels[] = {
    KernelKind::kOracle, KernelKind::kCumsum, KernelKind::kBevPool,
    KernelKind::kBevPoolV2};

std::string_view kernel_name(KernelKind kind);
std::optional<KernelKind> parse_kernel(std::string_view name);

class ShapeMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class AllocationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PoolOptions {
  int workers = 0;  // 0 = hardware concurrency
  std::pmr::memory_resource* scratch = nullptr;  // null = new/delete
  /// Intervals per parallel task.
  std::size_t min_intervals_per_task = 64;
};

BEVFeature pool_oracle(const DepthScores& depth, const ImageFeatures& feat,
                       const CameraRig& rig, const FrustumSpec& fspec,
                       const VoxelGridSpec& grid, const PoolOptions& opts = {});

BEVFeature pool_cumsum(const DepthScores& depth, const ImageFeatures& feat,
                       const PoolingPlan& plan, const PoolOptions& opts = {});

BEVFeature pool_bevpool(const DepthScores& depth, const ImageFeatures& feat,
                        const PoolingPlan& plan, const PoolOptions& opts = {});

BEVFeature pool_bevpoolv2(const DepthScores& depth, const ImageFeatures& feat,
                          const PoolingPlan& plan,
                          const PoolOptions& opts = {});

/// Everything the analytic memory model needs to know about a workload.
struct WorkloadShape {
  std::int64_t views = 0;
  std::int64_t depth_bins = 0;
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::int64_t channels = 0;
  std::int64_t points = 0;     // P, kept frustum points
  std::int64_t intervals = 0;  // M, occupied voxels
  std::array<std::int64_t, 3> grid_dims{0, 0, 0};
};

/// Byte counts per category, all for float32 tensors and int32 indices.
struct WorkingSetModel {
  std::int64_t inputs = 0;
  std::int64_t plan = 0;
  std::int64_t auxiliary = 0;
  std::int64_t output = 0;

  bool operator==(const WorkingSetModel&) const = default;
};

/// Closed-form model:
///   inputs    = (N*D*H*W + N*H*W*C) * 4
///   plan      = P*12 + M*8 + header           (0 for the oracle)
///   auxiliary = oracle: nz*ny*nx*C*8 (float64 accumulator)
///               cumsum: 2*P*C*4 (product matrix + prefix sums)
///               bevpool: N*D*H*W*C*4 (frustum feature)
///               bevpoolv2: 0
///   output    = nz*ny*nx*C*4
/// Throws std::overflow_error past 2^63 - 1 and std::invalid_argument on
/// negative shapes.
WorkingSetModel estimate_working_set(KernelKind kind,
                                     const WorkloadShape& shape);

WorkloadShape workload_of(const PoolingPlan& plan, int channels);

}  // namespace bevpool
