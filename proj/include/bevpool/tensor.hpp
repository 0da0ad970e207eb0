// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bevpool {

/// (N, D, H, W) non-negative depth weights, W fastest.
struct DepthScores {
  int num_views = 0;
  int depth_bins = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  DepthScores() = default;
  DepthScores(int n, int d, int h, int w)
      : num_views(n), depth_bins(d), height(h), width(w),
        data(static_cast<std::size_t>(n) * d * h * w, 0.0f) {}

  float& at(int n, int d, int h, int w) {
    return data[((static_cast<std::size_t>(n) * depth_bins + d) * height + h) *
                    width +
                w];
  }
  float at(int n, int d, int h, int w) const {
    return const_cast<DepthScores*>(this)->at(n, d, h, w);
  }
};

/// (N, H, W, C) image features, C fastest.
struct ImageFeatures {
  int num_views = 0;
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  ImageFeatures() = default;
  ImageFeatures(int n, int h, int w, int c)
      : num_views(n), height(h), width(w), channels(c),
        data(static_cast<std::size_t>(n) * h * w * c, 0.0f) {}

  std::span<float> row(std::size_t pixel) {
    return {data.data() + pixel * channels, static_cast<std::size_t>(channels)};
  }
  std::span<const float> row(std::size_t pixel) const {
    return {data.data() + pixel * channels, static_cast<std::size_t>(channels)};
  }
};

/// (nz, ny, nx, C) pooled output, C fastest. Row index is the flat voxel
/// index.
struct BEVFeature {
  int nz = 0;
  int ny = 0;
  int nx = 0;
  int channels = 0;
  std::vector<float> data;

  BEVFeature() = default;
  BEVFeature(int z, int y, int x, int c)
      : nz(z), ny(y), nx(x), channels(c),
        data(static_cast<std::size_t>(z) * y * x * c, 0.0f) {}

  std::size_t num_voxels() const {
    return static_cast<std::size_t>(nz) * ny * nx;
  }
  std::span<float> row(std::size_t voxel) {
    return {data.data() + voxel * channels, static_cast<std::size_t>(channels)};
  }
  std::span<const float> row(std::size_t voxel) const {
    return {data.data() + voxel * channels, static_cast<std::size_t>(channels)};
  }
};

}  // namespace bevpool
