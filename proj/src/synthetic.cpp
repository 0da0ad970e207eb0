// SPDX-License-Identifier: Apache-2.0
#include "bevpool/synthetic.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

namespace bevpool {

Eigen::Matrix3d camera_to_ego_rotation(double yaw, double pitch) {
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const Eigen::Vector3d forward{cp * cy, cp * sy, -sp};
  const Eigen::Vector3d right{sy, -cy, 0.0};
  const Eigen::Vector3d down{-sp * cy, -sp * sy, -cp};
  Eigen::Matrix3d rot;
  rot.col(0) = right;
  rot.col(1) = down;
  rot.col(2) = forward;
  return rot;
}

CameraRig make_surround_rig(int views, int image_h, int image_w,
                            std::uint64_t seed) {
  Rng rng(seed);
  CameraRig rig;
  const double pi = std::numbers::pi;
  for (int i = 0; i < views; ++i) {
    const double yaw = 2.0 * pi * i / views + rng.uniform(-0.05, 0.05);
    const double pitch = rng.uniform(0.0, 0.08);
    const double hfov = rng.uniform(65.0, 75.0) * pi / 180.0;
    CameraView v;
    v.fx = image_w / (2.0 * std::tan(hfov / 2.0));
    v.fy = v.fx * rng.uniform(0.99, 1.01);
    v.cx = image_w / 2.0 + rng.uniform(-2.0, 2.0);
    v.cy = image_h / 2.0 + rng.uniform(-2.0, 2.0);
    v.rot = camera_to_ego_rotation(yaw, pitch);
    v.trans = {1.2 * std::cos(yaw) + rng.uniform(-0.1, 0.1),
               0.6 * std::sin(yaw) + rng.uniform(-0.1, 0.1),
               1.6 + rng.uniform(-0.05, 0.05)};
    rig.views.push_back(v);
  }
  return rig;
}

VoxelGridSpec default_bev_grid() {
  return VoxelGridSpec::ego_centered({0.8, 0.8, 8.0}, {128, 128, 1}, -5.0);
}

DepthScores random_depth_scores(int n, int d, int h, int w, Rng& rng,
                                bool normalized) {
  DepthScores scores(n, d, h, w);
  for (float& v : scores.data) v = static_cast<float>(rng.uniform());
  if (normalized) {
    for (int vi = 0; vi < n; ++vi) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          double sum = 0.0;
          for (int k = 0; k < d; ++k) sum += scores.at(vi, k, y, x);
          if (sum <= 0.0) continue;
          for (int k = 0; k < d; ++k) {
            scores.at(vi, k, y, x) =
                static_cast<float>(scores.at(vi, k, y, x) / sum);
          }
        }
      }
    }
  }
  return scores;
}

ImageFeatures random_features(int n, int h, int w, int c, Rng& rng) {
  ImageFeatures feat(n, h, w, c);
  for (float& v : feat.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return feat;
}

std::uint64_t tensor_digest(std::span<const float> values) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (float f : values) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, &f, sizeof bits);
    for (int b = 0; b < 4; ++b) {
      hash ^= (bits >> (8 * b)) & 0xffu;
      hash *= 0x100000001b3ull;
    }
  }
  return hash;
}

}  // namespace bevpool
