#include <set>

#include "uflip/sim_device.hpp"

namespace uflip {

namespace {

const char* gc_name(GcMode m) {
  return m == GcMode::Deferred ? "Deferred" : "Synchronous";
}

GcMode gc_from(const std::string& s) {
  if (s == "Synchronous") return GcMode::Synchronous;
  if (s == "Deferred") return GcMode::Deferred;
  fail(ErrorKind::Spec, "unknown gc_mode: " + s);
}

const std::set<std::string> kProfileKeys = {
    "name", "capacity", "page_size", "pages_per_block", "read_page_us",
    "program_page_us", "erase_block_us", "controller_overhead_us",
    "map_granularity", "write_cache_blocks", "free_block_pool",
    "reserve_blocks", "gc_batch", "gc_mode", "drain_rate",
    "drain_interference_us", "sequential_log", "jitter", "seed"};

}  // namespace

void SimProfile::validate() const {
  require(page_size > 0 && page_size % kSector == 0,
          "page_size must be a positive multiple of 512");
  require(pages_per_block > 0, "pages_per_block must be positive");
  require(capacity > 0 && capacity % block_size() == 0,
          "capacity must be a positive multiple of the block size");
  require(map_granularity >= page_size && map_granularity % page_size == 0 &&
              block_size() % map_granularity == 0,
          "map_granularity must be a multiple of page_size dividing the block size");
  require(write_cache_blocks >= 1, "write_cache_blocks must be at least 1");
  require(reserve_blocks >= 1, "reserve_blocks must be at least 1");
  require(gc_batch >= 1, "gc_batch must be at least 1");
  require(read_page_us > 0 && program_page_us > 0 && erase_block_us > 0 &&
              controller_overhead_us > 0,
          "flash latencies must be positive");
  require(drain_interference_us >= 0, "drain_interference_us must be non-negative");
  require(gc_mode == GcMode::Synchronous || drain_rate > 0,
          "Deferred gc_mode needs a positive drain_rate");
  require(jitter >= 0 && jitter < 1, "jitter must be in [0, 1)");
  const std::uint64_t blocks = capacity / block_size() + write_cache_blocks +
                               free_block_pool + reserve_blocks;
  require(blocks * pages_per_block < UINT32_MAX,
          "device too large for the simulator's 32-bit page map");
}

void to_json(nlohmann::json& j, const SimProfile& p) {
  j = nlohmann::json{{"name", p.name},
                     {"capacity", p.capacity},
                     {"page_size", p.page_size},
                     {"pages_per_block", p.pages_per_block},
                     {"read_page_us", p.read_page_us},
                     {"program_page_us", p.program_page_us},
                     {"erase_block_us", p.erase_block_us},
                     {"controller_overhead_us", p.controller_overhead_us},
                     {"map_granularity", p.map_granularity},
                     {"write_cache_blocks", p.write_cache_blocks},
                     {"free_block_pool", p.free_block_pool},
                     {"reserve_blocks", p.reserve_blocks},
                     {"gc_batch", p.gc_batch},
                     {"gc_mode", gc_name(p.gc_mode)},
                     {"drain_rate", p.drain_rate},
                     {"drain_interference_us", p.drain_interference_us},
                     {"sequential_log", p.sequential_log},
                     {"jitter", p.jitter},
                     {"seed", p.seed}};
}

void from_json(const nlohmann::json& j, SimProfile& p) {
  require(j.is_object(), "simulator profile must be a JSON object");
  for (const auto& [k, v] : j.items())
    require(kProfileKeys.count(k) != 0, "unknown simulator profile field: " + k);
  SimProfile d;
  p.name = j.value("name", d.name);
  p.capacity = j.value("capacity", d.capacity);
  p.page_size = j.value("page_size", d.page_size);
  p.pages_per_block = j.value("pages_per_block", d.pages_per_block);
  p.read_page_us = j.value("read_page_us", d.read_page_us);
  p.program_page_us = j.value("program_page_us", d.program_page_us);
  p.erase_block_us = j.value("erase_block_us", d.erase_block_us);
  p.controller_overhead_us = j.value("controller_overhead_us", d.controller_overhead_us);
  p.map_granularity = j.value("map_granularity", p.page_size);
  p.write_cache_blocks = j.value("write_cache_blocks", d.write_cache_blocks);
  p.free_block_pool = j.value("free_block_pool", d.free_block_pool);
  p.reserve_blocks = j.value("reserve_blocks", d.reserve_blocks);
  p.gc_batch = j.value("gc_batch", d.gc_batch);
  p.gc_mode = gc_from(j.value("gc_mode", std::string(gc_name(d.gc_mode))));
  p.drain_rate = j.value("drain_rate", d.drain_rate);
  p.drain_interference_us = j.value("drain_interference_us", d.drain_interference_us);
  p.sequential_log = j.value("sequential_log", d.sequential_log);
  p.jitter = j.value("jitter", d.jitter);
  p.seed = j.value("seed", d.seed);
  p.validate();
}

SimProfile builtin_profile(const std::string& name) {
  SimProfile p;
  p.name = name;
  if (name == "highend-ssd") {
    p.capacity = 512 * MiB;
    p.page_size = 2048;
    p.pages_per_block = 256;
    p.read_page_us = 15;
    p.program_page_us = 20;
    p.erase_block_us = 800;
    p.controller_overhead_us = 300;
    p.map_granularity = 2048;
    p.write_cache_blocks = 16;
    p.free_block_pool = 125;
    p.reserve_blocks = 2;
    p.gc_batch = 16;
    p.gc_mode = GcMode::Deferred;
    p.drain_rate = 45;
    p.drain_interference_us = 293;
    p.sequential_log = false;
  } else if (name == "lowend-usb") {
    p.capacity = 256 * MiB;
    p.page_size = 2048;
    p.pages_per_block = 2048;
    p.read_page_us = 25;
    p.program_page_us = 60;
    p.erase_block_us = 20000;
    p.controller_overhead_us = 1500;
    p.map_granularity = 2048;
    p.write_cache_blocks = 4;
    p.free_block_pool = 0;
    p.reserve_blocks = 2;
    p.gc_batch = 1;
    p.gc_mode = GcMode::Synchronous;
    p.sequential_log = true;
  } else {
    fail(ErrorKind::Spec, "unknown built-in profile: " + name);
  }
  p.validate();
  return p;
}

std::vector<std::string> builtin_profile_names() {
  return {"highend-ssd", "lowend-usb"};
}

}  // namespace uflip
