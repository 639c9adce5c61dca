// Snapshot image and consistency checking for the simulator.

#include <cstring>
#include <type_traits>

#include "uflip/sim_device.hpp"

namespace uflip {

namespace {

constexpr char kMagic[8] = {'U', 'F', 'S', 'I', 'M', 'S', 'T', '1'};
constexpr std::uint32_t kImageVersion = 1;

class Writer {
 public:
  template <typename T>
  void put(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
  }
  template <typename T>
  void put_vec(const T& v) {
    put<std::uint64_t>(v.size());
    for (const auto& x : v) put(x);
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  template <typename T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    if (pos_ + sizeof(T) > in_.size())
      fail(ErrorKind::Version, "simulator state image is truncated");
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  template <typename C>
  void get_vec(C& c, std::uint64_t expected) {
    const auto n = get<std::uint64_t>();
    if (expected != UINT64_MAX && n != expected)
      fail(ErrorKind::Version, "simulator state image has a wrong table size");
    if (n > in_.size()) fail(ErrorKind::Version, "simulator state image is corrupt");
    c.clear();
    for (std::uint64_t i = 0; i < n; ++i)
      c.push_back(get<typename C::value_type>());
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> SimDevice::snapshot_state() const {
  Writer w;
  for (char c : kMagic) w.put(c);
  w.put(kImageVersion);
  w.put(profile_hash_);
  w.put_vec(direct_);
  w.put_vec(inverse_);
  w.put_vec(programmed_);
  w.put_vec(valid_);
  w.put_vec(erase_count_);
  w.put<std::uint64_t>(block_state_.size());
  for (BlockState s : block_state_) w.put(static_cast<std::uint8_t>(s));
  w.put_vec(free_);
  w.put_vec(empty_closed_);
  w.put<std::uint64_t>(region_.size());
  for (const Region& r : region_) {
    w.put(r.log_block);
    w.put(r.write_pointer);
    w.put(r.last_use);
    w.put(r.evicted_at);
    w.put(static_cast<std::uint8_t>(r.cached));
    w.put(static_cast<std::uint8_t>(r.pending));
  }
  w.put_vec(cache_);
  w.put_vec(pending_);
  w.put(tick_);
  w.put(op_counter_);
  w.put(drain_credit_);
  w.put(counters_);
  return std::move(w.out);
}

void SimDevice::restore_state(std::span<const std::uint8_t> image) {
  Reader rd(image);
  for (char c : kMagic)
    if (rd.get<char>() != c) fail(ErrorKind::Version, "not a simulator state image");
  if (rd.get<std::uint32_t>() != kImageVersion)
    fail(ErrorKind::Version, "unsupported simulator state image version");
  if (rd.get<std::uint64_t>() != profile_hash_)
    fail(ErrorKind::Version,
         "simulator state image was produced with a different profile");

  SimDevice next(profile_);
  const std::uint64_t pages = inverse_.size();
  const std::uint64_t blocks = block_state_.size();
  rd.get_vec(next.direct_, logical_pages_);
  rd.get_vec(next.inverse_, pages);
  rd.get_vec(next.programmed_, pages);
  rd.get_vec(next.valid_, blocks);
  rd.get_vec(next.erase_count_, blocks);
  if (rd.get<std::uint64_t>() != blocks)
    fail(ErrorKind::Version, "simulator state image has a wrong table size");
  for (auto& s : next.block_state_) {
    const auto v = rd.get<std::uint8_t>();
    if (v > 2) fail(ErrorKind::Version, "simulator state image is corrupt");
    s = static_cast<BlockState>(v);
  }
  rd.get_vec(next.free_, UINT64_MAX);
  rd.get_vec(next.empty_closed_, UINT64_MAX);
  if (rd.get<std::uint64_t>() != regions_)
    fail(ErrorKind::Version, "simulator state image has a wrong table size");
  for (Region& r : next.region_) {
    r.log_block = rd.get<std::uint32_t>();
    r.write_pointer = rd.get<std::uint64_t>();
    r.last_use = rd.get<std::uint64_t>();
    r.evicted_at = rd.get<std::uint64_t>();
    r.cached = rd.get<std::uint8_t>() != 0;
    r.pending = rd.get<std::uint8_t>() != 0;
  }
  rd.get_vec(next.cache_, UINT64_MAX);
  rd.get_vec(next.pending_, UINT64_MAX);
  next.tick_ = rd.get<std::uint64_t>();
  next.op_counter_ = rd.get<std::uint64_t>();
  next.drain_credit_ = rd.get<double>();
  next.counters_ = rd.get<SimCounters>();
  if (!rd.done()) fail(ErrorKind::Version, "simulator state image has trailing data");
  try {
    next.check_consistency();
  } catch (const Error& e) {
    fail(ErrorKind::Version, std::string("simulator state image is inconsistent: ") +
                                 e.what());
  }
  *this = std::move(next);
}

void SimDevice::check_consistency() const {
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::Io, id() + ": inconsistent state: " + what);
  };
  const std::uint64_t ppb = profile_.pages_per_block;
  const std::uint64_t blocks = block_state_.size();
  const std::uint64_t pages = blocks * ppb;
  check(direct_.size() == logical_pages_ && inverse_.size() == pages &&
            programmed_.size() == pages && valid_.size() == blocks &&
            region_.size() == regions_,
        "table sizes");

  for (std::uint64_t k = 0; k < logical_pages_; ++k) {
    const std::uint32_t phys = direct_[k];
    check(phys < pages, "logical page " + std::to_string(k) + " unmapped");
    check(inverse_[phys] == k, "inverse map of logical page " + std::to_string(k));
    check(programmed_[phys] != 0, "mapped page not programmed");
    check(phys % ppb == k % ppb, "page slot mismatch");
  }
  std::vector<std::uint32_t> count(blocks, 0);
  for (std::uint64_t p = 0; p < pages; ++p) {
    if (inverse_[p] == kNone) continue;
    check(inverse_[p] < logical_pages_ && direct_[inverse_[p]] == p,
          "stale inverse entry at physical page " + std::to_string(p));
    ++count[p / ppb];
  }

  std::vector<int> log_owner(blocks, 0);
  for (std::uint64_t r = 0; r < regions_; ++r) {
    const Region& reg = region_[r];
    check(!(reg.cached && reg.pending), "region both cached and pending");
    if (reg.cached || reg.pending) {
      check(reg.log_block < blocks && block_state_[reg.log_block] == BlockState::Log,
            "region log block");
      ++log_owner[reg.log_block];
    } else {
      check(reg.log_block == kNone, "idle region holds a log block");
    }
  }
  check(cache_.size() <= profile_.write_cache_blocks, "log buffer overflow");

  std::uint64_t free_count = 0;
  std::vector<int> listed(blocks, 0);
  for (std::uint32_t b : empty_closed_) {
    check(b < blocks && block_state_[b] == BlockState::Closed && valid_[b] == 0,
          "empty-block list");
    ++listed[b];
  }
  for (std::uint32_t b : free_) check(b < blocks, "free list entry");
  for (std::uint64_t b = 0; b < blocks; ++b) {
    check(count[b] == valid_[b], "valid count of block " + std::to_string(b));
    switch (block_state_[b]) {
      case BlockState::Free:
        ++free_count;
        check(valid_[b] == 0, "free block holds valid pages");
        for (std::uint64_t p = b * ppb; p < (b + 1) * ppb; ++p)
          check(programmed_[p] == 0, "free block not erased");
        break;
      case BlockState::Log:
        check(log_owner[b] == 1, "log block ownership");
        break;
      case BlockState::Closed:
        check((valid_[b] == 0) == (listed[b] == 1), "empty closed block tracking");
        break;
    }
  }
  check(free_count == free_.size(), "free list size");
}

}  // namespace uflip
