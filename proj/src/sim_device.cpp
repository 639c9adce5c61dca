#include "uflip/sim_device.hpp"

#include <algorithm>

namespace uflip {

SimDevice::SimDevice(SimProfile profile) : profile_(std::move(profile)) {
  profile_.validate();
  profile_hash_ = fnv1a(nlohmann::json(profile_).dump());
  const std::uint64_t ppb = profile_.pages_per_block;
  logical_pages_ = profile_.capacity / profile_.page_size;
  regions_ = profile_.capacity / profile_.block_size();
  const std::uint64_t blocks = regions_ + profile_.write_cache_blocks +
                               profile_.free_block_pool + profile_.reserve_blocks;

  // Region r starts out fully written in block r.
  direct_.resize(logical_pages_);
  inverse_.assign(blocks * ppb, kNone);
  programmed_.assign(blocks * ppb, 0);
  for (std::uint64_t k = 0; k < logical_pages_; ++k) {
    direct_[k] = static_cast<std::uint32_t>(k);
    inverse_[k] = static_cast<std::uint32_t>(k);
    programmed_[k] = 1;
  }
  valid_.assign(blocks, 0);
  erase_count_.assign(blocks, 0);
  block_state_.assign(blocks, BlockState::Free);
  for (std::uint64_t b = 0; b < regions_; ++b) {
    valid_[b] = static_cast<std::uint32_t>(ppb);
    block_state_[b] = BlockState::Closed;
  }
  for (std::uint64_t b = regions_; b < blocks; ++b)
    free_.push_back(static_cast<std::uint32_t>(b));
  region_.resize(regions_);
  counters_.initial_free_pages = (blocks - regions_) * ppb;
}

std::uint64_t SimDevice::pool_target() const {
  return profile_.reserve_blocks + profile_.free_block_pool;
}

bool SimDevice::draining() const {
  return profile_.gc_mode == GcMode::Deferred && free_.size() < pool_target() &&
         (!empty_closed_.empty() || !pending_.empty());
}

double SimDevice::apply_jitter(double cost) {
  const std::uint64_t n = op_counter_++;
  if (profile_.jitter == 0) return cost;
  const double u = uniform_unit(profile_.seed, n);
  return cost * (1.0 + profile_.jitter * (2.0 * u - 1.0));
}

double SimDevice::read(std::uint64_t lba, std::uint64_t size) {
  check_range(lba, size);
  ++counters_.host_reads;
  const std::uint64_t pages = (size + profile_.page_size - 1) / profile_.page_size;
  double cost = profile_.controller_overhead_us +
                static_cast<double>(pages) * profile_.read_page_us;
  if (draining()) cost += profile_.drain_interference_us;
  drain(cost);
  return apply_jitter(cost);
}

double SimDevice::write(std::uint64_t lba, std::uint64_t size,
                        std::span<const std::byte>) {
  check_range(lba, size);
  ++counters_.host_writes;
  const std::uint64_t page = profile_.page_size;
  const std::uint64_t ppb = profile_.pages_per_block;
  const std::uint64_t bs = profile_.block_size();
  const std::uint64_t end = lba + size;

  // Partial mapping units are read back and rewritten whole.
  const std::uint64_t unit = profile_.map_granularity / page;
  const std::uint64_t p0 = lba / page;
  const std::uint64_t p1 = (end + page - 1) / page;
  const std::uint64_t e0 = p0 / unit * unit;
  const std::uint64_t e1 = (p1 + unit - 1) / unit * unit;
  const std::uint64_t full_lo = (lba + page - 1) / page;
  const std::uint64_t full_hi = end / page;
  const std::uint64_t covered = full_hi > full_lo ? full_hi - full_lo : 0;

  double cost = profile_.controller_overhead_us +
                static_cast<double>(e1 - e0 - covered) * profile_.read_page_us;
  for (std::uint64_t k = e0; k < e1;) {
    const std::uint64_t r = k / ppb;
    const std::uint64_t stop = std::min(e1, (r + 1) * ppb);
    const std::uint64_t base = r * bs;
    const std::uint64_t b0 = std::max(lba, base) - base;
    const std::uint64_t b1 = std::min(end, base + bs) - base;
    cost += write_region(r, k, stop, b0, b1);
    k = stop;
  }
  return apply_jitter(cost);
}

double SimDevice::write_region(std::uint64_t r, std::uint64_t first_page,
                               std::uint64_t end_page, std::uint64_t byte_begin,
                               std::uint64_t byte_end) {
  double cost = 0;
  Region& reg = region_[r];
  if (reg.cached) {
    if (profile_.sequential_log && byte_begin < reg.write_pointer) {
      cost += merge(r);
      cost += admit(r);
    }
  } else {
    if (reg.pending) cost += merge(r);
    cost += admit(r);
  }

  const std::uint64_t ppb = profile_.pages_per_block;
  const std::uint64_t log = reg.log_block;
  for (std::uint64_t k = first_page; k < end_page; ++k) {
    const auto phys = static_cast<std::uint32_t>(log * ppb + (k - r * ppb));
    if (direct_[k] != phys) {
      invalidate(direct_[k]);
      map(k, phys);
    }
    if (!programmed_[phys]) {
      programmed_[phys] = 1;
      ++counters_.pages_programmed;
    }
    cost += profile_.program_page_us;
  }
  reg.write_pointer = std::max(reg.write_pointer, byte_end);
  reg.last_use = ++tick_;
  return cost;
}

double SimDevice::admit(std::uint64_t r) {
  if (cache_.size() >= profile_.write_cache_blocks) evict_lru();
  std::uint32_t block = kNone;
  const double cost = allocate_block(block);
  block_state_[block] = BlockState::Log;
  Region& reg = region_[r];
  reg.log_block = block;
  reg.cached = true;
  reg.pending = false;
  reg.write_pointer = 0;
  cache_.push_back(r);
  return cost;
}

void SimDevice::evict_lru() {
  auto it = std::min_element(cache_.begin(), cache_.end(),
                             [&](std::uint64_t a, std::uint64_t b) {
                               return region_[a].last_use < region_[b].last_use;
                             });
  const std::uint64_t r = *it;
  cache_.erase(it);
  region_[r].cached = false;
  region_[r].pending = true;
  region_[r].evicted_at = ++tick_;
  pending_.push_back(r);
}

double SimDevice::allocate_block(std::uint32_t& block) {
  double cost = 0;
  if (free_.size() <= profile_.reserve_blocks) {
    const std::uint64_t target = profile_.reserve_blocks + profile_.gc_batch;
    while (free_.size() < target)
      if (!reclaim_one(cost, true)) break;
  }
  if (free_.empty()) fail(ErrorKind::Io, id() + ": out of free flash blocks");
  block = free_.front();
  free_.pop_front();
  return cost;
}

bool SimDevice::reclaim_one(double& cost, bool allow_force) {
  auto erase_empty = [&] {
    if (empty_closed_.empty()) return false;
    const std::uint32_t b = empty_closed_.back();
    empty_closed_.pop_back();
    cost += erase(b);
    return true;
  };
  if (erase_empty()) return true;

  const std::uint64_t ppb = profile_.pages_per_block;
  if (!pending_.empty()) {
    auto best = std::min_element(
        pending_.begin(), pending_.end(), [&](std::uint64_t a, std::uint64_t b) {
          const std::uint64_t ca = ppb - valid_[region_[a].log_block];
          const std::uint64_t cb = ppb - valid_[region_[b].log_block];
          if (ca != cb) return ca < cb;
          return region_[a].evicted_at < region_[b].evicted_at;
        });
    cost += merge(*best);
    erase_empty();
    return true;
  }
  if (allow_force && !cache_.empty()) {
    auto lru = std::min_element(cache_.begin(), cache_.end(),
                                [&](std::uint64_t a, std::uint64_t b) {
                                  return region_[a].last_use < region_[b].last_use;
                                });
    cost += merge(*lru);
    erase_empty();
    return true;
  }
  return false;
}

double SimDevice::merge(std::uint64_t r) {
  Region& reg = region_[r];
  const std::uint64_t ppb = profile_.pages_per_block;
  const std::uint64_t log = reg.log_block;
  double cost = 0;
  for (std::uint64_t slot = 0; slot < ppb; ++slot) {
    const std::uint64_t k = r * ppb + slot;
    const auto phys = static_cast<std::uint32_t>(log * ppb + slot);
    if (direct_[k] == phys) continue;
    invalidate(direct_[k]);
    map(k, phys);
    programmed_[phys] = 1;
    ++counters_.pages_programmed;
    ++counters_.pages_copied;
    cost += profile_.read_page_us + profile_.program_page_us;
  }
  block_state_[log] = BlockState::Closed;
  if (reg.cached) cache_.erase(std::find(cache_.begin(), cache_.end(), r));
  if (reg.pending) pending_.erase(std::find(pending_.begin(), pending_.end(), r));
  reg = Region{};
  ++counters_.merges;
  return cost;
}

double SimDevice::erase(std::uint32_t block) {
  if (valid_[block] != 0 || block_state_[block] != BlockState::Closed)
    fail(ErrorKind::Io, id() + ": internal error, erasing a live block");
  const std::uint64_t ppb = profile_.pages_per_block;
  for (std::uint64_t i = block * ppb; i < (block + 1) * ppb; ++i) {
    programmed_[i] = 0;
    inverse_[i] = kNone;
  }
  ++erase_count_[block];
  block_state_[block] = BlockState::Free;
  free_.push_back(block);
  ++counters_.erases;
  return profile_.erase_block_us;
}

void SimDevice::invalidate(std::uint32_t phys) {
  if (phys == kNone) return;
  inverse_[phys] = kNone;
  const std::uint32_t b = phys / static_cast<std::uint32_t>(profile_.pages_per_block);
  if (--valid_[b] == 0 && block_state_[b] == BlockState::Closed)
    empty_closed_.push_back(b);
}

void SimDevice::map(std::uint64_t logical, std::uint32_t phys) {
  direct_[logical] = phys;
  inverse_[phys] = static_cast<std::uint32_t>(logical);
  ++valid_[phys / profile_.pages_per_block];
}

std::uint64_t SimDevice::sim_idle(double us) {
  require(us >= 0, "idle time must be non-negative");
  return drain(us);
}

std::uint64_t SimDevice::drain(double elapsed_us) {
  if (profile_.gc_mode != GcMode::Deferred) return 0;
  if (free_.size() >= pool_target()) {
    drain_credit_ = 0;
    return 0;
  }
  drain_credit_ += elapsed_us * profile_.drain_rate / 1e6;
  std::uint64_t freed = 0;
  while (drain_credit_ >= 1 && free_.size() < pool_target()) {
    double ignored = 0;
    const std::uint64_t before = free_.size();
    if (!reclaim_one(ignored, false)) {
      drain_credit_ = 0;
      break;
    }
    drain_credit_ -= 1;
    freed += free_.size() - before;
  }
  if (free_.size() >= pool_target()) drain_credit_ = 0;
  return freed;
}

}  // namespace uflip
