// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstddef>
#include <limits>
#include <memory_resource>

namespace bevpool {

/// Memory resource that counts live and peak bytes handed out to kernels.
/// An optional byte limit turns oversized requests into std::bad_alloc.
class AllocationTracker : public std::pmr::memory_resource {
 public:
  explicit AllocationTracker(
      std::pmr::memory_resource* upstream = std::pmr::new_delete_resource())
      : upstream_(upstream) {}

  std::size_t current_bytes() const { return current_.load(); }
  std::size_t peak_bytes() const { return peak_.load(); }
  std::size_t allocation_count() const { return count_.load(); }

  /// Starts a new measurement window; live allocations carry over.
  void reset_peak() {
    peak_.store(current_.load());
    count_.store(0);
  }

  void set_limit(std::size_t bytes) { limit_ = bytes; }

 private:
  void* do_allocate(std::size_t bytes, std::size_t align) override {
    if (bytes > limit_ || current_.load() > limit_ - bytes) {
      throw std::bad_alloc();
    }
    void* p = upstream_->allocate(bytes, align);
    const std::size_t now = current_.fetch_add(bytes) + bytes;
    std::size_t prev = peak_.load();
    while (now > prev && !peak_.compare_exchange_weak(prev, now)) {
    }
    count_.fetch_add(1);
    return p;
  }

  void do_deallocate(void* p, std::size_t bytes, std::size_t align) override {
    upstream_->deallocate(p, bytes, align);
    current_.fetch_sub(bytes);
  }

  bool do_is_equal(const std::pmr::memory_resource& other) const
      noexcept override {
    return this == &other;
  }

  std::pmr::memory_resource* upstream_;
  std::atomic<std::size_t> current_{0};
  std::atomic<std::size_t> peak_{0};
  std::atomic<std::size_t> count_{0};
  std::size_t limit_ = std::numeric_limits<std::size_t>::max();
};

}  // namespace bevpool
