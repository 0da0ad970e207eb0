// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "bevpool/geometry.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bevpool {

struct PlanMeta {
  std::uint32_t num_views = 0;
  std::uint32_t depth_bins = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;  // expected C, 0 = any
  std::array<std::uint32_t, 3> grid_dims{1, 1, 1};
  std::uint32_t flat_order = kFlatOrderZYX;
  std::uint64_t digest = 0;

  std::int64_t num_frustum_points() const {
    return std::int64_t{num_views} * depth_bins * height * width;
  }
  std::int64_t num_pixels() const {
    return std::int64_t{num_views} * height * width;
  }
  std::int64_t num_voxels() const {
    return std::int64_t{grid_dims[0]} * grid_dims[1] * grid_dims[2];
  }

  bool operator==(const PlanMeta&) const = default;
};

/// The precomputed pooling trace. Position i refers to frustum point
/// ranks_depth[i] (flat N*D*H*W index), its image feature row ranks_feat[i]
/// (flat N*H*W index) and its voxel ranks_bev[i]. Positions are sorted by
/// voxel, then by frustum index; each interval is one maximal run of equal
/// voxel and is owned by exactly one voxel.
struct PoolingPlan {
  PlanMeta meta;
  std::vector<std::int32_t> ranks_depth;
  std::vector<std::int32_t> ranks_feat;
  std::vector<std::int32_t> ranks_bev;
  std::vector<std::int32_t> interval_starts;
  std::vector<std::int32_t> interval_lengths;

  std::size_t num_points() const { return ranks_bev.size(); }
  std::size_t num_intervals() const { return interval_starts.size(); }

  bool operator==(const PoolingPlan&) const = default;
};

/// Sorts and filters a voxel map into a plan. The result does not depend on
/// `workers`. Throws std::invalid_argument when the frustum does not fit the
/// int32 index range.
PoolingPlan build_plan(const VoxelIndexMap& vmap, std::uint32_t channels = 0,
                       int workers = 1);

/// 64-bit FNV-1a over the five index arrays (little-endian bytes).
std::uint64_t compute_plan_digest(const PoolingPlan& plan);

/// Empty iff every plan invariant holds. Each entry reads
/// "<invariant> @<first offending position>".
std::vector<std::string> validate_plan(const PoolingPlan& plan);

class PlanFormatError : public std::runtime_error {
 public:
  enum class Code {
    kBadMagic,
    kVersionMismatch,
    kDigestMismatch,
    kTruncated,
    kTrailingData,
  };

  PlanFormatError(Code code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Code code() const { return code_; }

 private:
  Code code_;
};

inline constexpr char kPlanMagic[4] = {'B', 'V', 'P', '2'};
inline constexpr std::uint16_t kPlanVersion = 1;
/// magic + version + nine u32 meta fields + P, M, digest as u64.
inline constexpr std::size_t kPlanHeaderBytes = 4 + 2 + 9 * 4 + 3 * 8;

/// Layout: magic "BVP2", u16 version, u32 N D H W C nx ny nz flat_order,
/// u64 P, u64 M, u64 digest, then i32 arrays ranks_depth[P] ranks_feat[P]
/// ranks_bev[P] interval_starts[M] interval_lengths[M]. All little-endian.
std::vector<std::uint8_t> serialize_plan(const PoolingPlan& plan);
PoolingPlan deserialize_plan(std::span<const std::uint8_t> bytes);

void save_plan(const PoolingPlan& plan, const std::string& path);
PoolingPlan load_plan(const std::string& path);

}  // namespace bevpool
