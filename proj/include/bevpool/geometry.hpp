// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <vector>

namespace bevpool {

/// Pinhole intrinsics plus camera-to-ego extrinsics for one view.
///
/// The camera frame is x right, y down, z forward. `rot` and `trans` map a
/// camera-frame point into the ego frame: p_ego = rot * p_cam + trans.
struct CameraView {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
  Eigen::Vector3d trans = Eigen::Vector3d::Zero();
};

struct CameraRig {
  std::vector<CameraView> views;

  int num_views() const { return static_cast<int>(views.size()); }
};

/// Tolerance used when checking that a rotation is orthonormal.
inline constexpr double kRotationTolerance = 1e-9;

/// Throws std::invalid_argument if the rig is empty, has non-positive focal
/// lengths, or a rotation that is not a proper orthonormal matrix.
void validate_rig(const CameraRig& rig);

struct FrustumSpec {
  int feat_h = 1;
  int feat_w = 1;
  int downsample = 1;
  double depth_start = 1.0;
  double depth_end = 2.0;
  double depth_step = 1.0;

  /// Number of depth bins, round((end - start) / step).
  int depth_bins() const;
};

void validate_frustum_spec(const FrustumSpec& spec);

struct VoxelGridSpec {
  Eigen::Vector3d lower = Eigen::Vector3d::Zero();
  Eigen::Vector3d voxel_size = Eigen::Vector3d::Ones();
  std::array<int, 3> dims{1, 1, 1};  // nx, ny, nz

  int nx() const { return dims[0]; }
  int ny() const { return dims[1]; }
  int nz() const { return dims[2]; }
  std::int64_t num_voxels() const {
    return std::int64_t{dims[0]} * dims[1] * dims[2];
  }

  /// Grid whose x/y extent is centered on the ego origin. `z_lower` stays
  /// explicit because the ground plane sits below the IMU.
  static VoxelGridSpec ego_centered(const Eigen::Vector3d& voxel_size,
                                    std::array<int, 3> dims, double z_lower);
};

void validate_grid(const VoxelGridSpec& grid);

struct FrustumSample {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;

  bool operator==(const FrustumSample&) const = default;
};

/// (D, H, W) lattice of pixel/depth samples, W fastest.
struct FrustumPoints {
  int depth_bins = 0;
  int height = 0;
  int width = 0;
  std::vector<FrustumSample> samples;

  const FrustumSample& at(int d, int h, int w) const {
    return samples[(static_cast<std::size_t>(d) * height + h) * width + w];
  }
};

/// (N, D, H, W) ego-frame points, W fastest.
struct EgoPoints {
  int num_views = 0;
  int depth_bins = 0;
  int height = 0;
  int width = 0;
  std::vector<Eigen::Vector3d> points;
};

/// Flat voxel index order tag: (iz * ny + iy) * nx + ix.
inline constexpr std::uint32_t kFlatOrderZYX = 0x0078797a;  // "zyx\0"

inline constexpr std::int32_t kInvalidVoxel = -1;

/// (N, D, H, W) flat voxel indices, W fastest. kInvalidVoxel marks points
/// outside the grid.
struct VoxelIndexMap {
  int num_views = 0;
  int depth_bins = 0;
  int height = 0;
  int width = 0;
  std::array<int, 3> grid_dims{1, 1, 1};
  std::vector<std::int32_t> indices;

  std::size_t size() const { return indices.size(); }
};

FrustumPoints create_frustum(const FrustumSpec& spec);

/// Unprojects a single sample through one view.
inline Eigen::Vector3d unproject(const CameraView& view,
                                 const FrustumSample& s) {
  const Eigen::Vector3d cam{s.depth * (s.u - view.cx) / view.fx,
                            s.depth * (s.v - view.cy) / view.fy, s.depth};
  return view.rot * cam + view.trans;
}

/// Flat voxel index of an ego point, or kInvalidVoxel. Cells are half-open.
std::int32_t voxel_of(const Eigen::Vector3d& p, const VoxelGridSpec& grid);

EgoPoints frustum_to_ego(const FrustumPoints& frustum, const CameraRig& rig);

VoxelIndexMap voxelize(const EgoPoints& points, const VoxelGridSpec& grid);

/// create_frustum -> frustum_to_ego -> voxelize.
VoxelIndexMap compute_voxel_map(const CameraRig& rig, const FrustumSpec& spec,
                                const VoxelGridSpec& grid);

}  // namespace bevpool
