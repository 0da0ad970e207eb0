// SPDX-License-Identifier: Apache-2.0
#include "bevpool/plan.hpp"

#include "bevpool/parallel.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <limits>

namespace bevpool {
namespace {

constexpr std::int64_t kIndexLimit = std::numeric_limits<std::int32_t>::max();

class Fnv1a {
 public:
  void add(std::span<const std::int32_t> values) {
    for (std::int32_t v : values) {
      const auto u = static_cast<std::uint32_t>(v);
      for (int b = 0; b < 4; ++b) {
        hash_ ^= (u >> (8 * b)) & 0xffu;
        hash_ *= 0x100000001b3ull;
      }
    }
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void array(const std::vector<std::int32_t>& a) {
    for (std::int32_t v : a) u32(static_cast<std::uint32_t>(v));
  }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back((v >> (8 * i)) & 0xffu);
  }
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  std::vector<std::int32_t> array(std::uint64_t n) {
    if (n > remaining() / 4) truncated();
    std::vector<std::int32_t> a(n);
    for (auto& v : a) v = static_cast<std::int32_t>(u32());
    return a;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::uint64_t get(int n) {
    if (remaining() < static_cast<std::size_t>(n)) truncated();
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{in_[pos_ + i]} << (8 * i);
    pos_ += n;
    return v;
  }
  [[noreturn]] static void truncated() {
    throw PlanFormatError(PlanFormatError::Code::kTruncated,
                          "plan stream is truncated");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

PoolingPlan build_plan(const VoxelIndexMap& vmap, std::uint32_t channels,
                       int workers) {
  const std::int64_t points = std::int64_t{vmap.num_views} * vmap.depth_bins *
                              vmap.height * vmap.width;
  if (vmap.num_views < 1 || vmap.depth_bins < 1 || vmap.height < 1 ||
      vmap.width < 1) {
    throw std::invalid_argument("voxel map has an empty dimension");
  }
  if (points > kIndexLimit) {
    throw std::invalid_argument("frustum has more points than int32 indexes");
  }
  if (static_cast<std::int64_t>(vmap.indices.size()) != points) {
    throw std::invalid_argument("voxel map size does not match its shape");
  }

  PoolingPlan plan;
  plan.meta.num_views = vmap.num_views;
  plan.meta.depth_bins = vmap.depth_bins;
  plan.meta.height = vmap.height;
  plan.meta.width = vmap.width;
  plan.meta.channels = channels;
  for (int a = 0; a < 3; ++a) plan.meta.grid_dims[a] = vmap.grid_dims[a];
  if (plan.meta.num_voxels() > kIndexLimit) {
    throw std::invalid_argument("voxel grid exceeds int32 index range");
  }

  // (voxel << 32 | frustum index) is unique per point, so any correct sort
  // yields the canonical order regardless of how the work is split.
  std::vector<std::uint64_t> keys;
  keys.reserve(vmap.indices.size());
  for (std::size_t i = 0; i < vmap.indices.size(); ++i) {
    const std::int32_t v = vmap.indices[i];
    if (v == kInvalidVoxel) continue;
    if (v < 0 || v >= plan.meta.num_voxels()) {
      throw std::invalid_argument("voxel map holds an out-of-range index");
    }
    keys.push_back(std::uint64_t(v) << 32 | i);
  }

  const std::size_t n = keys.size();
  const std::size_t blocks = std::clamp<std::size_t>(
      n / 4096, 1, static_cast<std::size_t>(resolve_workers(workers)));
  const std::size_t step = (n + blocks - 1) / std::max<std::size_t>(blocks, 1);
  std::vector<std::size_t> bounds;
  for (std::size_t b = 0; b < n; b += step) bounds.push_back(b);
  bounds.push_back(n);
  parallel_for(bounds.size() - 1, 1, workers,
               [&](std::size_t first, std::size_t last) {
                 for (std::size_t k = first; k < last; ++k) {
                   std::sort(keys.begin() + bounds[k],
                             keys.begin() + bounds[k + 1]);
                 }
               });
  while (bounds.size() > 2) {
    std::vector<std::size_t> next{0};
    for (std::size_t k = 0; k + 2 < bounds.size(); k += 2) {
      std::inplace_merge(keys.begin() + bounds[k], keys.begin() + bounds[k + 1],
                         keys.begin() + bounds[k + 2]);
      next.push_back(bounds[k + 2]);
    }
    if (bounds.size() % 2 == 0) next.push_back(bounds.back());
    bounds = std::move(next);
  }

  const std::int64_t pixels_per_view = std::int64_t{vmap.height} * vmap.width;
  const std::int64_t points_per_view = pixels_per_view * vmap.depth_bins;
  plan.ranks_depth.resize(n);
  plan.ranks_feat.resize(n);
  plan.ranks_bev.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto frustum = static_cast<std::int64_t>(keys[i] & 0xffffffffu);
    const auto voxel = static_cast<std::int32_t>(keys[i] >> 32);
    const std::int64_t view = frustum / points_per_view;
    const std::int64_t pixel = frustum % pixels_per_view;
    plan.ranks_depth[i] = static_cast<std::int32_t>(frustum);
    plan.ranks_feat[i] =
        static_cast<std::int32_t>(view * pixels_per_view + pixel);
    plan.ranks_bev[i] = voxel;
    if (i == 0 || voxel != plan.ranks_bev[i - 1]) {
      plan.interval_starts.push_back(static_cast<std::int32_t>(i));
    }
  }
  plan.interval_lengths.resize(plan.interval_starts.size());
  for (std::size_t j = 0; j < plan.interval_starts.size(); ++j) {
    const std::size_t end = j + 1 < plan.interval_starts.size()
                                ? plan.interval_starts[j + 1]
                                : n;
    plan.interval_lengths[j] =
        static_cast<std::int32_t>(end - plan.interval_starts[j]);
  }
  plan.meta.digest = compute_plan_digest(plan);
  return plan;
}

std::uint64_t compute_plan_digest(const PoolingPlan& plan) {
  Fnv1a h;
  h.add(plan.ranks_depth);
  h.add(plan.ranks_feat);
  h.add(plan.ranks_bev);
  h.add(plan.interval_starts);
  h.add(plan.interval_lengths);
  return h.value();
}

std::vector<std::string> validate_plan(const PoolingPlan& plan) {
  std::vector<std::string> out;
  auto report = [&](const std::string& what, std::size_t pos) {
    out.push_back(what + " @" + std::to_string(pos));
  };
  const PlanMeta& m = plan.meta;
  const std::size_t p = plan.ranks_bev.size();
  if (plan.ranks_depth.size() != p || plan.ranks_feat.size() != p) {
    report("rank arrays differ in length", std::min(plan.ranks_depth.size(),
                                                    plan.ranks_feat.size()));
    return out;
  }
  if (plan.interval_lengths.size() != plan.interval_starts.size()) {
    report("interval arrays differ in length", 0);
    return out;
  }
  if (m.flat_order != kFlatOrderZYX) report("unknown flat order", 0);
  if (m.num_frustum_points() > kIndexLimit || m.num_voxels() > kIndexLimit) {
    report("meta sizes exceed int32 range", 0);
    return out;
  }
  if (static_cast<std::int64_t>(p) > m.num_frustum_points()) {
    report("more points than frustum points", p);
  }

  const std::int64_t hw = std::int64_t{m.height} * m.width;
  const std::int64_t dhw = hw * m.depth_bins;
  auto first_bad = [&](auto&& pred) -> std::ptrdiff_t {
    for (std::size_t i = 0; i < p; ++i) {
      if (pred(i)) return static_cast<std::ptrdiff_t>(i);
    }
    return -1;
  };
  if (auto i = first_bad([&](std::size_t i) {
        return plan.ranks_depth[i] < 0 ||
               plan.ranks_depth[i] >= m.num_frustum_points();
      });
      i >= 0) {
    report("ranks_depth out of range", i);
  }
  if (auto i = first_bad([&](std::size_t i) {
        return plan.ranks_feat[i] < 0 || plan.ranks_feat[i] >= m.num_pixels();
      });
      i >= 0) {
    report("ranks_feat out of range", i);
  }
  if (auto i = first_bad([&](std::size_t i) {
        return plan.ranks_bev[i] < 0 || plan.ranks_bev[i] >= m.num_voxels();
      });
      i >= 0) {
    report("ranks_bev out of range", i);
  }
  if (auto i = first_bad([&](std::size_t i) {
        return i > 0 && plan.ranks_bev[i] < plan.ranks_bev[i - 1];
      });
      i >= 0) {
    report("ranks_bev not sorted", i);
  }
  if (dhw > 0) {
    if (auto i = first_bad([&](std::size_t i) {
          const std::int64_t d = plan.ranks_depth[i];
          return plan.ranks_feat[i] != (d / dhw) * hw + d % hw;
        });
        i >= 0) {
      report("ranks_feat inconsistent with ranks_depth", i);
    }
  }

  // Partition of [0, P) into maximal runs.
  const std::size_t intervals = plan.interval_starts.size();
  std::int64_t expected_start = 0;
  bool partition_ok = true;
  for (std::size_t j = 0; j < intervals; ++j) {
    if (plan.interval_starts[j] != expected_start ||
        plan.interval_lengths[j] <= 0) {
      report("interval partition broken", j);
      partition_ok = false;
      break;
    }
    expected_start += plan.interval_lengths[j];
    if (expected_start > static_cast<std::int64_t>(p)) break;
  }
  if (partition_ok && expected_start != static_cast<std::int64_t>(p)) {
    report("interval lengths sum to " + std::to_string(expected_start) +
               ", expected " + std::to_string(p),
           intervals);
    partition_ok = false;
  }
  if (partition_ok) {
    for (std::size_t j = 0; j < intervals; ++j) {
      const std::size_t s = plan.interval_starts[j];
      const std::size_t e = s + plan.interval_lengths[j];
      for (std::size_t i = s + 1; i < e; ++i) {
        if (plan.ranks_bev[i] != plan.ranks_bev[s]) {
          report("interval holds several voxels", i);
          j = intervals;
          break;
        }
      }
    }
    for (std::size_t j = 1; j < intervals; ++j) {
      if (plan.ranks_bev[plan.interval_starts[j]] ==
          plan.ranks_bev[plan.interval_starts[j - 1]]) {
        report("adjacent intervals share a voxel", j);
        break;
      }
    }
  }
  if (m.digest != compute_plan_digest(plan)) report("digest mismatch", 0);
  return out;
}

std::vector<std::uint8_t> serialize_plan(const PoolingPlan& plan) {
  std::vector<std::uint8_t> out;
  out.reserve(kPlanHeaderBytes + 12 * plan.num_points() +
              8 * plan.num_intervals());
  out.insert(out.end(), std::begin(kPlanMagic), std::end(kPlanMagic));
  Writer w(out);
  const PlanMeta& m = plan.meta;
  w.u16(kPlanVersion);
  for (std::uint32_t v : {m.num_views, m.depth_bins, m.height, m.width,
                          m.channels, m.grid_dims[0], m.grid_dims[1],
                          m.grid_dims[2], m.flat_order}) {
    w.u32(v);
  }
  w.u64(plan.num_points());
  w.u64(plan.num_intervals());
  w.u64(m.digest);
  w.array(plan.ranks_depth);
  w.array(plan.ranks_feat);
  w.array(plan.ranks_bev);
  w.array(plan.interval_starts);
  w.array(plan.interval_lengths);
  return out;
}

PoolingPlan deserialize_plan(std::span<const std::uint8_t> bytes) {
  using Code = PlanFormatError::Code;
  if (bytes.size() < 4) throw PlanFormatError(Code::kTruncated, "plan stream is truncated");
  if (!std::equal(std::begin(kPlanMagic), std::end(kPlanMagic),
                  bytes.begin())) {
    throw PlanFormatError(Code::kBadMagic, "not a plan stream (bad magic)");
  }
  Reader r(bytes.subspan(4));
  const std::uint16_t version = r.u16();
  if (version != kPlanVersion) {
    throw PlanFormatError(Code::kVersionMismatch,
                          "unsupported plan version " + std::to_string(version));
  }
  PoolingPlan plan;
  PlanMeta& m = plan.meta;
  m.num_views = r.u32();
  m.depth_bins = r.u32();
  m.height = r.u32();
  m.width = r.u32();
  m.channels = r.u32();
  for (auto& d : m.grid_dims) d = r.u32();
  m.flat_order = r.u32();
  const std::uint64_t points = r.u64();
  const std::uint64_t intervals = r.u64();
  m.digest = r.u64();
  plan.ranks_depth = r.array(points);
  plan.ranks_feat = r.array(points);
  plan.ranks_bev = r.array(points);
  plan.interval_starts = r.array(intervals);
  plan.interval_lengths = r.array(intervals);
  if (r.remaining() != 0) {
    throw PlanFormatError(Code::kTrailingData,
                          "unexpected bytes after plan arrays");
  }
  if (compute_plan_digest(plan) != m.digest) {
    throw PlanFormatError(Code::kDigestMismatch, "plan digest mismatch");
  }
  return plan;
}

void save_plan(const PoolingPlan& plan, const std::string& path) {
  const auto bytes = serialize_plan(plan);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("cannot write plan to '" + path + "'");
}

PoolingPlan load_plan(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open plan '" + path + "'");
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), {}};
  return deserialize_plan(bytes);
}

}  // namespace bevpool
