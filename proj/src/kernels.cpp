// SPDX-License-Identifier: Apache-2.0
#include "bevpool/kernels.hpp"

#include "bevpool/parallel.hpp"

#include <algorithm>
#include <cstddef>
#include <limits>
#include <new>
#include <vector>

namespace bevpool {
namespace {

std::pmr::memory_resource* scratch_of(const PoolOptions& opts) {
  return opts.scratch ? opts.scratch : std::pmr::new_delete_resource();
}

// Uninitialized kernel-private buffer drawn from the scratch resource.
template <class T>
class ScratchBuffer {
 public:
  ScratchBuffer(std::size_t count, const PoolOptions& opts, const char* what)
      : resource_(scratch_of(opts)), count_(count) {
    if (count > std::numeric_limits<std::size_t>::max() / sizeof(T)) {
      throw AllocationFailure(std::string("cannot allocate ") + what +
                              " (size exceeds address space)");
    }
    try {
      data_ = static_cast<T*>(
          resource_->allocate(count * sizeof(T), alignof(std::max_align_t)));
    } catch (const std::bad_alloc&) {
      throw AllocationFailure(std::string("cannot allocate ") + what + " (" +
                              std::to_string(count * sizeof(T)) + " bytes)");
    }
  }
  ~ScratchBuffer() {
    resource_->deallocate(data_, count_ * sizeof(T), alignof(std::max_align_t));
  }
  ScratchBuffer(const ScratchBuffer&) = delete;
  ScratchBuffer& operator=(const ScratchBuffer&) = delete;

  T* data() { return data_; }
  T* begin() { return data_; }
  T* end() { return data_ + count_; }

 private:
  std::pmr::memory_resource* resource_;
  std::size_t count_;
  T* data_ = nullptr;
};

void check_inputs(const DepthScores& depth, const ImageFeatures& feat) {
  if (depth.num_views != feat.num_views || depth.height != feat.height ||
      depth.width != feat.width) {
    throw ShapeMismatch("depth scores and image features disagree on N/H/W");
  }
  if (feat.channels < 1) throw ShapeMismatch("image features have no channels");
  if (depth.data.size() != static_cast<std::size_t>(depth.num_views) *
                               depth.depth_bins * depth.height * depth.width ||
      feat.data.size() != static_cast<std::size_t>(feat.num_views) *
                              feat.height * feat.width * feat.channels) {
    throw ShapeMismatch("tensor storage does not match its shape");
  }
}

void check_plan(const DepthScores& depth, const ImageFeatures& feat,
                const PoolingPlan& plan) {
  check_inputs(depth, feat);
  const PlanMeta& m = plan.meta;
  if (static_cast<std::int64_t>(depth.num_views) != m.num_views ||
      static_cast<std::int64_t>(depth.depth_bins) != m.depth_bins ||
      static_cast<std::int64_t>(depth.height) != m.height ||
      static_cast<std::int64_t>(depth.width) != m.width) {
    throw ShapeMismatch("depth scores do not match the plan's frustum shape");
  }
  if (m.channels != 0 && m.channels != static_cast<std::uint32_t>(feat.channels)) {
    throw ShapeMismatch("feature channels do not match the plan");
  }
  if (plan.ranks_depth.size() != plan.ranks_bev.size() ||
      plan.ranks_feat.size() != plan.ranks_bev.size() ||
      plan.interval_starts.size() != plan.interval_lengths.size()) {
    throw ShapeMismatch("plan arrays are inconsistent");
  }
}

BEVFeature empty_output(const PoolingPlan& plan, int channels) {
  return BEVFeature(static_cast<int>(plan.meta.grid_dims[2]),
                    static_cast<int>(plan.meta.grid_dims[1]),
                    static_cast<int>(plan.meta.grid_dims[0]), channels);
}

}  // namespace

std::string_view kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::kOracle:
      return "oracle";
    case KernelKind::kCumsum:
      return "cumsum";
    case KernelKind::kBevPool:
      return "bevpool";
    case KernelKind::kBevPoolV2:
      return "bevpoolv2";
  }
  return "?";
}

std::optional<KernelKind> parse_kernel(std::string_view name) {
  for (KernelKind k : kAllKernels) {
    if (kernel_name(k) == name) return k;
  }
  return std::nullopt;
}

BEVFeature pool_oracle(const DepthScores& depth, const ImageFeatures& feat,
                       const CameraRig& rig, const FrustumSpec& fspec,
                       const VoxelGridSpec& grid, const PoolOptions& opts) {
  check_inputs(depth, feat);
  validate_rig(rig);
  validate_frustum_spec(fspec);
  validate_grid(grid);
  if (depth.num_views != rig.num_views() ||
      depth.depth_bins != fspec.depth_bins() || depth.height != fspec.feat_h ||
      depth.width != fspec.feat_w) {
    throw ShapeMismatch("depth scores do not match the rig/frustum shape");
  }

  const int channels = feat.channels;
  ScratchBuffer<double> acc(
      static_cast<std::size_t>(grid.num_voxels()) * channels, opts,
      "oracle accumulator");
  std::fill(acc.begin(), acc.end(), 0.0);
  const double ds = fspec.downsample;
  for (int n = 0; n < depth.num_views; ++n) {
    const CameraView& view = rig.views[n];
    for (int d = 0; d < depth.depth_bins; ++d) {
      const double z = fspec.depth_start + d * fspec.depth_step;
      for (int h = 0; h < depth.height; ++h) {
        for (int w = 0; w < depth.width; ++w) {
          const FrustumSample s{(w + 0.5) * ds - 0.5, (h + 0.5) * ds - 0.5, z};
          const std::int32_t voxel = voxel_of(unproject(view, s), grid);
          if (voxel == kInvalidVoxel) continue;
          const double score = depth.at(n, d, h, w);
          const auto f = feat.row(
              (static_cast<std::size_t>(n) * depth.height + h) * depth.width +
              w);
          double* out = acc.data() + static_cast<std::size_t>(voxel) * channels;
          for (int c = 0; c < channels; ++c) {
            out[c] += score * static_cast<double>(f[c]);
          }
        }
      }
    }
  }
  BEVFeature bev(grid.nz(), grid.ny(), grid.nx(), channels);
  std::transform(acc.begin(), acc.end(), bev.data.begin(),
                 [](double v) { return static_cast<float>(v); });
  return bev;
}

BEVFeature pool_cumsum(const DepthScores& depth, const ImageFeatures& feat,
                       const PoolingPlan& plan, const PoolOptions& opts) {
  check_plan(depth, feat, plan);
  const std::size_t channels = feat.channels;
  const std::size_t points = plan.num_points();
  BEVFeature bev = empty_output(plan, feat.channels);

  ScratchBuffer<float> product(points * channels, opts, "product matrix");
  ScratchBuffer<float> prefix(points * channels, opts, "prefix sums");

  parallel_for(points, 4096, opts.workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const float score = depth.data[plan.ranks_depth[i]];
      const float* f = feat.data.data() + plan.ranks_feat[i] * channels;
      float* p = product.data() + i * channels;
      for (std::size_t c = 0; c < channels; ++c) p[c] = score * f[c];
    }
  });

  // Inclusive prefix sum along P, one running total per channel.
  if (points > 0) {
    std::copy_n(product.data(), channels, prefix.data());
    for (std::size_t i = 1; i < points; ++i) {
      const float* prev = prefix.data() + (i - 1) * channels;
      const float* cur = product.data() + i * channels;
      float* out = prefix.data() + i * channels;
      for (std::size_t c = 0; c < channels; ++c) out[c] = prev[c] + cur[c];
    }
  }

  const std::size_t intervals = plan.num_intervals();
  parallel_for(intervals, opts.min_intervals_per_task, opts.workers,
               [&](std::size_t b, std::size_t e) {
                 for (std::size_t j = b; j < e; ++j) {
                   const std::size_t start = plan.interval_starts[j];
                   const std::size_t last =
                       start + plan.interval_lengths[j] - 1;
                   float* out = bev.data.data() +
                                plan.ranks_bev[start] * channels;
                   const float* hi = prefix.data() + last * channels;
                   if (start == 0) {
                     std::copy_n(hi, channels, out);
                   } else {
                     const float* lo = prefix.data() + (start - 1) * channels;
                     for (std::size_t c = 0; c < channels; ++c) {
                       out[c] = hi[c] - lo[c];
                     }
                   }
                 }
               });
  return bev;
}

BEVFeature pool_bevpool(const DepthScores& depth, const ImageFeatures& feat,
                        const PoolingPlan& plan, const PoolOptions& opts) {
  check_plan(depth, feat, plan);
  const std::size_t channels = feat.channels;
  BEVFeature bev = empty_output(plan, feat.channels);

  // Frustum feature (N, D, H, W, C), built for every frustum point.
  const std::size_t pixels_per_view =
      static_cast<std::size_t>(depth.height) * depth.width;
  ScratchBuffer<float> frustum(depth.data.size() * channels, opts,
                               "frustum feature");
  const std::size_t rows = static_cast<std::size_t>(depth.num_views) *
                           depth.depth_bins;  // one (n, d) slab per row
  parallel_for(rows, 1, opts.workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t nd = b; nd < e; ++nd) {
      const std::size_t view = nd / depth.depth_bins;
      const float* scores = depth.data.data() + nd * pixels_per_view;
      const float* f = feat.data.data() + view * pixels_per_view * channels;
      float* out = frustum.data() + nd * pixels_per_view * channels;
      for (std::size_t px = 0; px < pixels_per_view; ++px) {
        const float s = scores[px];
        for (std::size_t c = 0; c < channels; ++c) {
          out[px * channels + c] = s * f[px * channels + c];
        }
      }
    }
  });

  parallel_for(plan.num_intervals(), opts.min_intervals_per_task, opts.workers,
               [&](std::size_t b, std::size_t e) {
                 for (std::size_t j = b; j < e; ++j) {
                   const std::size_t start = plan.interval_starts[j];
                   const std::size_t end = start + plan.interval_lengths[j];
                   float* out = bev.data.data() +
                                plan.ranks_bev[start] * channels;
                   for (std::size_t i = start; i < end; ++i) {
                     const float* src =
                         frustum.data() + plan.ranks_depth[i] * channels;
                     for (std::size_t c = 0; c < channels; ++c) {
                       out[c] += src[c];
                     }
                   }
                 }
               });
  return bev;
}

BEVFeature pool_bevpoolv2(const DepthScores& depth, const ImageFeatures& feat,
                          const PoolingPlan& plan, const PoolOptions& opts) {
  check_plan(depth, feat, plan);
  const std::size_t channels = feat.channels;
  BEVFeature bev = empty_output(plan, feat.channels);
  const float* scores = depth.data.data();
  const float* features = feat.data.data();

  // Intervals own disjoint voxels, so tasks never write the same row.
  parallel_for(plan.num_intervals(), opts.min_intervals_per_task, opts.workers,
               [&](std::size_t b, std::size_t e) {
                 for (std::size_t j = b; j < e; ++j) {
                   const std::size_t start = plan.interval_starts[j];
                   const std::size_t end = start + plan.interval_lengths[j];
                   float* out = bev.data.data() +
                                plan.ranks_bev[start] * channels;
                   for (std::size_t i = start; i < end; ++i) {
                     const float s = scores[plan.ranks_depth[i]];
                     const float* f = features + plan.ranks_feat[i] * channels;
                     for (std::size_t c = 0; c < channels; ++c) {
                       out[c] += s * f[c];
                     }
                   }
                 }
               });
  return bev;
}

namespace {

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) {
    throw std::overflow_error("working-set byte count overflows int64");
  }
  return r;
}

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r = 0;
  if (__builtin_add_overflow(a, b, &r)) {
    throw std::overflow_error("working-set byte count overflows int64");
  }
  return r;
}

template <class... Ts>
std::int64_t product(std::int64_t first, Ts... rest) {
  std::int64_t r = first;
  ((r = checked_mul(r, rest)), ...);
  return r;
}

}  // namespace

WorkingSetModel estimate_working_set(KernelKind kind,
                                     const WorkloadShape& s) {
  for (std::int64_t v : {s.views, s.depth_bins, s.height, s.width, s.channels,
                         s.points, s.intervals, s.grid_dims[0], s.grid_dims[1],
                         s.grid_dims[2]}) {
    if (v < 0) throw std::invalid_argument("workload shape is negative");
  }
  WorkingSetModel m;
  const std::int64_t frustum = product(s.views, s.depth_bins, s.height, s.width);
  const std::int64_t voxels = product(s.grid_dims[0], s.grid_dims[1],
                                      s.grid_dims[2]);
  m.inputs = checked_mul(
      checked_add(frustum, product(s.views, s.height, s.width, s.channels)), 4);
  m.output = product(voxels, s.channels, 4);
  if (kind != KernelKind::kOracle) {
    m.plan = checked_add(
        checked_add(checked_mul(s.points, 12), checked_mul(s.intervals, 8)),
        static_cast<std::int64_t>(kPlanHeaderBytes));
  }
  switch (kind) {
    case KernelKind::kOracle:
      m.auxiliary = product(voxels, s.channels, 8);
      break;
    case KernelKind::kCumsum:
      m.auxiliary = product(s.points, s.channels, 4, 2);
      break;
    case KernelKind::kBevPool:
      m.auxiliary = product(frustum, s.channels, 4);
      break;
    case KernelKind::kBevPoolV2:
      m.auxiliary = 0;
      break;
  }
  return m;
}

WorkloadShape workload_of(const PoolingPlan& plan, int channels) {
  const PlanMeta& m = plan.meta;
  WorkloadShape s;
  s.views = m.num_views;
  s.depth_bins = m.depth_bins;
  s.height = m.height;
  s.width = m.width;
  s.channels = channels;
  s.points = static_cast<std::int64_t>(plan.num_points());
  s.intervals = static_cast<std::int64_t>(plan.num_intervals());
  s.grid_dims = {m.grid_dims[0], m.grid_dims[1], m.grid_dims[2]};
  return s;
}

}  // namespace bevpool
