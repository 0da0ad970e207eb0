// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "bevpool/geometry.hpp"
#include "bevpool/plan.hpp"
#include "bevpool/synthetic.hpp"

#include <vector>

namespace bevpool::testing {

inline VoxelIndexMap make_vmap(int n, int d, int h, int w,
                               std::array<int, 3> grid,
                               std::vector<std::int32_t> indices) {
  VoxelIndexMap m;
  m.num_views = n;
  m.depth_bins = d;
  m.height = h;
  m.width = w;
  m.grid_dims = grid;
  m.indices = std::move(indices);
  return m;
}

/// Random voxel map where roughly `invalid_share` of points are INVALID.
inline VoxelIndexMap random_vmap(Rng& rng, double invalid_share = 0.3) {
  const int n = rng.uniform_int(1, 3), d = rng.uniform_int(1, 8),
            h = rng.uniform_int(1, 12), w = rng.uniform_int(1, 12);
  const std::array<int, 3> grid{rng.uniform_int(1, 16), rng.uniform_int(1, 16),
                                rng.uniform_int(1, 2)};
  const int voxels = grid[0] * grid[1] * grid[2];
  std::vector<std::int32_t> idx(static_cast<std::size_t>(n) * d * h * w);
  for (auto& v : idx) {
    v = rng.uniform() < invalid_share ? kInvalidVoxel
                                      : rng.uniform_int(0, voxels - 1);
  }
  return make_vmap(n, d, h, w, grid, std::move(idx));
}

/// Re-stamps the digest after a test edits plan arrays by hand.
inline void restamp(PoolingPlan& plan) {
  plan.meta.digest = compute_plan_digest(plan);
}

}  // namespace bevpool::testing
