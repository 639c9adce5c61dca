#pragma once

// Deterministic flash device simulator.
//
// Flash is organised in blocks of pages; the logical space is split into
// block-sized regions. Writes land in a per-region log block held in a small
// LRU log buffer (write_cache_blocks regions). Evicted logs wait on a pending
// list until reclamation merges them: the pages of the region that are not in
// the log are copied into it, after which the region's previous data block
// holds no valid page and can be erased. Reclamation picks the pending region
// with the fewest pages left to copy.
//
// Synchronous GC reclaims inside the write that finds the free pool empty.
// Deferred GC does the same, but additionally refills the pool of
// free_block_pool spare blocks in the background while the host is idle or
// reading, at drain_rate blocks per second, slowing reads meanwhile.

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "json.hpp"
#include "uflip/device.hpp"

namespace uflip {

enum class GcMode { Synchronous, Deferred };

struct SimProfile {
  std::string name = "custom";
  std::uint64_t capacity = 64 * MiB;
  std::uint64_t page_size = 2048;
  std::uint64_t pages_per_block = 64;
  double read_page_us = 50;
  double program_page_us = 200;
  double erase_block_us = 2000;
  double controller_overhead_us = 100;
  std::uint64_t map_granularity = 2048;
  std::uint64_t write_cache_blocks = 4;
  std::uint64_t free_block_pool = 0;
  std::uint64_t reserve_blocks = 2;
  std::uint64_t gc_batch = 1;
  GcMode gc_mode = GcMode::Synchronous;
  double drain_rate = 0;              // blocks per second (Deferred)
  double drain_interference_us = 0;   // added to reads while draining
  // Log blocks only accept writes at or beyond the region's write pointer;
  // anything else forces a merge. Otherwise the log buffer absorbs
  // rewrites in RAM.
  bool sequential_log = false;
  double jitter = 0;                  // multiplicative, uniform in +-jitter
  std::uint64_t seed = 0;

  std::uint64_t block_size() const { return page_size * pages_per_block; }
  void validate() const;
  bool operator==(const SimProfile&) const = default;
};

void to_json(nlohmann::json& j, const SimProfile& p);
void from_json(const nlohmann::json& j, SimProfile& p);

// Reference profiles: "highend-ssd" and "lowend-usb".
SimProfile builtin_profile(const std::string& name);
std::vector<std::string> builtin_profile_names();

struct SimCounters {
  std::uint64_t host_reads = 0;
  std::uint64_t host_writes = 0;
  std::uint64_t pages_programmed = 0;  // flash programs, host + copies
  std::uint64_t pages_copied = 0;
  std::uint64_t erases = 0;
  std::uint64_t merges = 0;
  std::uint64_t initial_free_pages = 0;
};

class SimDevice final : public BlockDevice {
 public:
  explicit SimDevice(SimProfile profile);

  std::uint64_t capacity() const override { return profile_.capacity; }
  std::string id() const override { return "sim-" + profile_.name; }
  bool simulated() const override { return true; }

  double read(std::uint64_t lba, std::uint64_t size) override;
  double write(std::uint64_t lba, std::uint64_t size,
               std::span<const std::byte> payload = {}) override;
  void idle(double us) override { sim_idle(us); }

  // Runs deferred reclamation for `us` of idle time; returns blocks freed.
  std::uint64_t sim_idle(double us);

  std::vector<std::uint8_t> snapshot_state() const override;
  void restore_state(std::span<const std::uint8_t> image) override;

  // Full scan of the mapping structures; throws on any inconsistency.
  void check_consistency() const;

  const SimProfile& profile() const { return profile_; }
  const SimCounters& counters() const { return counters_; }
  std::uint64_t free_blocks() const { return free_.size(); }
  std::uint64_t pending_merges() const { return pending_.size(); }
  std::uint64_t erase_count(std::uint64_t block) const { return erase_count_[block]; }
  std::uint64_t physical_blocks() const { return block_state_.size(); }
  bool draining() const;

 private:
  enum class BlockState : std::uint8_t { Free, Log, Closed };
  static constexpr std::uint32_t kNone = UINT32_MAX;

  struct Region {
    std::uint32_t log_block = kNone;
    std::uint64_t write_pointer = 0;  // bytes into the region
    std::uint64_t last_use = 0;
    std::uint64_t evicted_at = 0;
    bool cached = false;
    bool pending = false;
  };

  double write_region(std::uint64_t region, std::uint64_t first_page,
                      std::uint64_t end_page, std::uint64_t byte_begin,
                      std::uint64_t byte_end);
  double admit(std::uint64_t region);
  void evict_lru();
  double allocate_block(std::uint32_t& block);
  double merge(std::uint64_t region);
  bool reclaim_one(double& cost, bool allow_force);
  double erase(std::uint32_t block);
  void invalidate(std::uint32_t phys);
  void map(std::uint64_t logical, std::uint32_t phys);
  std::uint64_t drain(double elapsed_us);
  double apply_jitter(double cost);
  std::uint64_t pool_target() const;

  SimProfile profile_;
  std::uint64_t profile_hash_ = 0;
  std::uint64_t logical_pages_ = 0;
  std::uint64_t regions_ = 0;

  std::vector<std::uint32_t> direct_;     // logical page -> physical page
  std::vector<std::uint32_t> inverse_;    // physical page -> logical page
  std::vector<std::uint8_t> programmed_;  // physical page holds data
  std::vector<std::uint32_t> valid_;      // per block
  std::vector<std::uint32_t> erase_count_;
  std::vector<BlockState> block_state_;
  std::deque<std::uint32_t> free_;        // FIFO, front = next to use
  std::vector<std::uint32_t> empty_closed_;
  std::vector<Region> region_;
  std::vector<std::uint64_t> cache_;      // cached region ids
  std::vector<std::uint64_t> pending_;    // evicted region ids
  std::uint64_t tick_ = 0;
  std::uint64_t op_counter_ = 0;
  double drain_credit_ = 0;
  SimCounters counters_;
};

}  // namespace uflip
