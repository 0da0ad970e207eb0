// SPDX-License-Identifier: Apache-2.0
#include "bevpool/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace bevpool {

void validate_rig(const CameraRig& rig) {
  if (rig.views.empty()) {
    throw std::invalid_argument("camera rig has no views");
  }
  for (std::size_t i = 0; i < rig.views.size(); ++i) {
    const CameraView& v = rig.views[i];
    const std::string tag = "view " + std::to_string(i) + ": ";
    if (!(v.fx > 0.0) || !(v.fy > 0.0) || !std::isfinite(v.fx) ||
        !std::isfinite(v.fy)) {
      throw std::invalid_argument(tag + "focal lengths must be positive");
    }
    if (!std::isfinite(v.cx) || !std::isfinite(v.cy) || !v.rot.allFinite() ||
        !v.trans.allFinite()) {
      throw std::invalid_argument(tag + "non-finite camera parameter");
    }
    const double ortho =
        (v.rot.transpose() * v.rot - Eigen::Matrix3d::Identity())
            .cwiseAbs()
            .maxCoeff();
    if (ortho > kRotationTolerance ||
        std::abs(v.rot.determinant() - 1.0) > kRotationTolerance) {
      throw std::invalid_argument(tag + "rotation is not orthonormal");
    }
  }
}

int FrustumSpec::depth_bins() const {
  const double bins = std::round((depth_end - depth_start) / depth_step);
  if (!std::isfinite(bins) || bins < 0.0 ||
      bins > std::numeric_limits<int>::max()) {
    return 0;
  }
  return static_cast<int>(bins);
}

void validate_frustum_spec(const FrustumSpec& spec) {
  if (!std::isfinite(spec.depth_start) || !std::isfinite(spec.depth_end) ||
      !std::isfinite(spec.depth_step)) {
    throw std::invalid_argument("frustum depth bounds must be finite");
  }
  if (!(spec.depth_step > 0.0) || !(spec.depth_end > spec.depth_start)) {
    throw std::invalid_argument(
        "frustum requires depth_end > depth_start and depth_step > 0");
  }
  if (spec.depth_bins() < 1) {
    throw std::invalid_argument("frustum has zero depth bins");
  }
  if (spec.feat_h < 1 || spec.feat_w < 1 || spec.downsample < 1) {
    throw std::invalid_argument(
        "frustum feature size and downsample must be >= 1");
  }
}

VoxelGridSpec VoxelGridSpec::ego_centered(const Eigen::Vector3d& voxel_size,
                                          std::array<int, 3> dims,
                                          double z_lower) {
  VoxelGridSpec grid;
  grid.voxel_size = voxel_size;
  grid.dims = dims;
  grid.lower = {-dims[0] * voxel_size.x() / 2.0,
                -dims[1] * voxel_size.y() / 2.0, z_lower};
  return grid;
}

void validate_grid(const VoxelGridSpec& grid) {
  if (!grid.lower.allFinite() || !grid.voxel_size.allFinite()) {
    throw std::invalid_argument("voxel grid has non-finite bounds");
  }
  if ((grid.voxel_size.array() <= 0.0).any()) {
    throw std::invalid_argument("voxel sizes must be positive");
  }
  for (int d : grid.dims) {
    if (d < 1) throw std::invalid_argument("voxel grid dims must be >= 1");
  }
  if (grid.num_voxels() > std::numeric_limits<std::int32_t>::max()) {
    throw std::invalid_argument("voxel grid exceeds int32 index range");
  }
}

FrustumPoints create_frustum(const FrustumSpec& spec) {
  validate_frustum_spec(spec);
  FrustumPoints out;
  out.depth_bins = spec.depth_bins();
  out.height = spec.feat_h;
  out.width = spec.feat_w;
  out.samples.reserve(static_cast<std::size_t>(out.depth_bins) * out.height *
                      out.width);
  const double ds = spec.downsample;
  for (int d = 0; d < out.depth_bins; ++d) {
    const double depth = spec.depth_start + d * spec.depth_step;
    for (int h = 0; h < out.height; ++h) {
      const double v = (h + 0.5) * ds - 0.5;
      for (int w = 0; w < out.width; ++w) {
        out.samples.push_back({(w + 0.5) * ds - 0.5, v, depth});
      }
    }
  }
  return out;
}

std::int32_t voxel_of(const Eigen::Vector3d& p, const VoxelGridSpec& grid) {
  std::int64_t idx[3];
  for (int a = 0; a < 3; ++a) {
    const double f = std::floor((p[a] - grid.lower[a]) / grid.voxel_size[a]);
    // NaN fails both comparisons.
    if (!(f >= 0.0 && f < grid.dims[a])) return kInvalidVoxel;
    idx[a] = static_cast<std::int64_t>(f);
  }
  return static_cast<std::int32_t>((idx[2] * grid.dims[1] + idx[1]) *
                                       grid.dims[0] +
                                   idx[0]);
}

EgoPoints frustum_to_ego(const FrustumPoints& frustum, const CameraRig& rig) {
  validate_rig(rig);
  EgoPoints out;
  out.num_views = rig.num_views();
  out.depth_bins = frustum.depth_bins;
  out.height = frustum.height;
  out.width = frustum.width;
  out.points.reserve(frustum.samples.size() * rig.views.size());
  for (const CameraView& view : rig.views) {
    for (const FrustumSample& s : frustum.samples) {
      out.points.push_back(unproject(view, s));
    }
  }
  return out;
}

VoxelIndexMap voxelize(const EgoPoints& points, const VoxelGridSpec& grid) {
  validate_grid(grid);
  VoxelIndexMap out;
  out.num_views = points.num_views;
  out.depth_bins = points.depth_bins;
  out.height = points.height;
  out.width = points.width;
  out.grid_dims = grid.dims;
  out.indices.resize(points.points.size());
  for (std::size_t i = 0; i < points.points.size(); ++i) {
    out.indices[i] = voxel_of(points.points[i], grid);
  }
  return out;
}

VoxelIndexMap compute_voxel_map(const CameraRig& rig, const FrustumSpec& spec,
                                const VoxelGridSpec& grid) {
  return voxelize(frustum_to_ego(create_frustum(spec), rig), grid);
}

}  // namespace bevpool
