// SPDX-License-Identifier: Apache-2.0
#pragma once

// Seeded synthetic rigs and tensors. Everything is derived from
// std::mt19937_64 bit output, which the standard pins down exactly, so the
// same seed gives the same bytes on every conforming platform.

#include "bevpool/geometry.hpp"
#include "bevpool/tensor.hpp"

#include <cstdint>
#include <random>
#include <span>

namespace bevpool {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next() % span);
  }

 private:
  std::mt19937_64 engine_;
};

/// Camera-to-ego rotation for a camera looking along ego heading `yaw`
/// (radians, counter-clockwise from +x) and pitched down by `pitch`.
Eigen::Matrix3d camera_to_ego_rotation(double yaw, double pitch);

/// `views` cameras spread evenly around the vehicle, slightly tilted toward
/// the ground, with intrinsics sized for an image_h x image_w image.
CameraRig make_surround_rig(int views, int image_h, int image_w,
                            std::uint64_t seed);

/// Ego-centered grid of 0.8 m cells spanning +-51.2 m in x/y and
/// [-5, 3] m in z (128 x 128 x 1).
VoxelGridSpec default_bev_grid();

/// Uniform scores in [0, 1); when `normalized`, each pixel's scores are
/// scaled to sum to one over the depth axis.
DepthScores random_depth_scores(int n, int d, int h, int w, Rng& rng,
                                bool normalized = true);

/// Uniform features in [-1, 1).
ImageFeatures random_features(int n, int h, int w, int c, Rng& rng);

/// 64-bit FNV-1a over the raw bytes of a float tensor.
std::uint64_t tensor_digest(std::span<const float> values);

}  // namespace bevpool
