#include "uflip/methodology.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "uflip/analysis.hpp"
#include "uflip/runner.hpp"

namespace uflip {

CoverageBitmap::CoverageBitmap(std::uint64_t capacity)
    : words_((capacity / kSector + 63) / 64, 0), sectors_(capacity / kSector) {}

void CoverageBitmap::mark(std::uint64_t lba, std::uint64_t size) {
  const std::uint64_t first = lba / kSector;
  const std::uint64_t last = std::min(sectors_, (lba + size + kSector - 1) / kSector);
  for (std::uint64_t s = first; s < last; ++s) {
    std::uint64_t& w = words_[s / 64];
    const std::uint64_t bit = 1ULL << (s % 64);
    if (!(w & bit)) {
      w |= bit;
      ++covered_;
    }
  }
}

bool CoverageBitmap::covered(std::uint64_t sector) const {
  return (words_[sector / 64] >> (sector % 64)) & 1;
}

double CoverageBitmap::fraction() const {
  return sectors_ == 0 ? 1.0
                       : static_cast<double>(covered_) / static_cast<double>(sectors_);
}

std::uint64_t CoverageBitmap::next_uncovered(std::uint64_t from) const {
  for (std::uint64_t wi = from / 64; wi < words_.size(); ++wi) {
    std::uint64_t free_bits = ~words_[wi];
    if (wi == from / 64) free_bits &= ~0ULL << (from % 64);
    if (free_bits) {
      const std::uint64_t s = wi * 64 + static_cast<std::uint64_t>(std::countr_zero(free_bits));
      return std::min(s, sectors_);
    }
  }
  return sectors_;
}

std::vector<std::uint8_t> CoverageBitmap::to_bytes() const {
  std::vector<std::uint8_t> out(words_.size() * 8);
  for (std::size_t i = 0; i < words_.size(); ++i)
    for (int b = 0; b < 8; ++b) out[i * 8 + b] = static_cast<std::uint8_t>(words_[i] >> (8 * b));
  return out;
}

CoverageBitmap CoverageBitmap::from_bytes(std::uint64_t capacity,
                                          const std::vector<std::uint8_t>& bytes) {
  CoverageBitmap bm(capacity);
  if (bytes.size() != bm.words_.size() * 8)
    fail(ErrorKind::Version, "coverage bitmap does not match the device capacity");
  for (std::size_t i = 0; i < bm.words_.size(); ++i) {
    std::uint64_t w = 0;
    for (int b = 0; b < 8; ++b) w |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    bm.words_[i] = w;
  }
  // Bits past the last sector are never set by mark(); drop them if present.
  if (bm.sectors_ % 64 != 0 && !bm.words_.empty())
    bm.words_.back() &= (1ULL << (bm.sectors_ % 64)) - 1;
  for (std::uint64_t w : bm.words_) bm.covered_ += static_cast<std::uint64_t>(std::popcount(w));
  return bm;
}

EnforceState enforce_random_state(BlockDevice& dev, std::uint64_t seed,
                                  const EnforceOptions& opts) {
  EnforceState st;
  st.seed = seed;
  st.bitmap = CoverageBitmap(dev.capacity());
  enforce_random_state(dev, st, opts);
  return st;
}

void enforce_random_state(BlockDevice& dev, EnforceState& st, const EnforceOptions& opts) {
  require(opts.max_io_size >= kSector && opts.max_io_size % kSector == 0,
          "max_io_size must be a positive multiple of 512");
  const std::uint64_t cap = dev.capacity();
  if (st.bitmap.sectors() == 0) st.bitmap = CoverageBitmap(cap);
  require(st.bitmap.sectors() == cap / kSector, "coverage bitmap does not match the device");
  const std::uint64_t sizes = opts.max_io_size / kSector;
  const std::uint64_t max_run = sizes;
  std::uint64_t cursor = 0;
  std::uint64_t issued = 0;
  while (!st.bitmap.complete() && issued < opts.max_writes) {
    std::uint64_t lba = 0, size = 0;
    if (st.bitmap.fraction() < opts.random_phase_coverage) {
      const std::uint64_t i = st.next_index++;
      size = std::min(cap, kSector * (1 + uniform_below(st.seed, 2 * i, sizes)));
      lba = kSector * uniform_below(st.seed, 2 * i + 1, (cap - size) / kSector + 1);
    } else {
      const std::uint64_t s = st.bitmap.next_uncovered(cursor);
      std::uint64_t e = s + 1;
      while (e < st.bitmap.sectors() && e - s < max_run && !st.bitmap.covered(e)) ++e;
      cursor = e;
      lba = s * kSector;
      size = (e - s) * kSector;
    }
    try {
      st.elapsed_us += dev.write(lba, size);
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::Io) throw;
      fail(ErrorKind::Io, std::string(err.what()) + " (coverage " +
                              std::to_string(st.bitmap.fraction() * 100) + "%)");
    }
    st.bitmap.mark(lba, size);
    ++st.writes;
    ++issued;
    if (opts.progress && opts.progress_every && st.writes % opts.progress_every == 0)
      opts.progress(st.bitmap.fraction(), st.writes);
  }
  if (opts.progress) opts.progress(st.bitmap.fraction(), st.writes);
}

std::uint64_t DeviceProfile::startup(Baseline b) const {
  auto it = baselines.find(b);
  return it == baselines.end() ? 0 : it->second.startup;
}

std::uint64_t recommend_io_count(Baseline b, std::uint64_t startup, std::uint64_t period,
                                 double running_mean_us, const CalibrateOptions& o) {
  std::uint64_t floor = b == Baseline::RW ? o.rw_floor : o.fast_floor;
  if (running_mean_us > o.slow_device_us) floor = o.slow_floor;
  return startup + std::max(o.period_multiple * period, floor);
}

DeviceProfile calibrate_phases(BlockDevice& dev, const CalibrateOptions& o) {
  require(o.long_io_count >= 2, "long_io_count must be at least 2");
  DeviceProfile prof;
  prof.device_id = dev.id();
  const std::uint64_t target = dev.capacity() / o.io_size * o.io_size;
  require(target >= o.io_size, "device smaller than the calibration IO size");
  for (Baseline b : {Baseline::SR, Baseline::RR, Baseline::RW, Baseline::SW}) {
    dev.idle(o.settle_us);
    const std::uint64_t t =
        baseline_is_random(b) ? target : std::min(target, o.long_io_count * o.io_size);
    const auto spec = make_baseline(b, o.io_size, 0, t, o.long_io_count, 0,
                                    derive_seed(o.seed, static_cast<std::uint64_t>(b)));
    const Trace trace =
        execute_run(dev, spec, RunContext{std::string("calibrate/") + to_string(b), 0});
    if (trace.failed()) fail(ErrorKind::Io, trace.meta.error);
    const auto rts = trace.response_times();
    BaselineCalibration c;
    const auto st = detect_startup(rts);
    c.startup = st.startup;
    c.startup_inconclusive = st.inconclusive;
    const auto per = estimate_period(std::span<const double>(rts).subspan(c.startup));
    c.period = per.period;
    c.period_low_confidence = per.low_confidence;
    c.running_mean_us = summarize(rts, c.startup).mean;
    c.io_count_recommendation =
        recommend_io_count(b, c.startup, c.period, c.running_mean_us, o);
    prof.baselines[b] = c;
  }
  return prof;
}

PauseResult calibrate_pause(BlockDevice& dev, const PauseOptions& o) {
  const std::uint64_t slots = dev.capacity() / o.io_size;
  require(slots >= 1, "device smaller than the calibration IO size");
  dev.idle(o.settle_us);
  std::uint64_t cursor = 0;
  auto sequential_read = [&] {
    const double rt = dev.read(cursor * o.io_size, o.io_size);
    cursor = (cursor + 1) % slots;
    return rt;
  };

  PauseResult res;
  std::vector<double> pre;
  for (std::uint64_t i = 0; i < o.sr_batch; ++i) pre.push_back(sequential_read());
  const RunStats ps = summarize(pre, 0);
  res.pre_mean_us = ps.mean;
  res.pre_stddev_us = ps.stddev;
  const double threshold = ps.mean + o.k_sigma * ps.stddev;

  const std::uint64_t seed = derive_seed(o.seed, 0x5257);
  for (std::uint64_t i = 0; i < o.rw_batch; ++i)
    dev.write(uniform_below(seed, i, slots) * o.io_size, o.io_size);

  for (std::uint64_t c = 0; c < o.max_chunks; ++c) {
    std::uint64_t affected = 0;
    for (std::uint64_t i = 0; i < o.chunk; ++i) {
      const double rt = sequential_read();
      if (rt > threshold) {
        ++affected;
        res.lingering_us += rt;
      }
    }
    res.affected_reads += affected;
    if (affected == 0) break;
  }
  res.pause_us = std::max(o.overestimate * res.lingering_us, o.floor_us);
  return res;
}

namespace {

nlohmann::json baseline_json(const BaselineCalibration& c) {
  return {{"startup", c.startup},
          {"period", c.period},
          {"startup_inconclusive", c.startup_inconclusive},
          {"period_low_confidence", c.period_low_confidence},
          {"running_mean_us", c.running_mean_us},
          {"io_count_recommendation", c.io_count_recommendation}};
}

}  // namespace

void to_json(nlohmann::json& j, const DeviceProfile& p) {
  nlohmann::json b = nlohmann::json::object();
  for (const auto& [k, v] : p.baselines) b[to_string(k)] = baseline_json(v);
  j = {{"schema_version", kSchemaVersion},
       {"device_id", p.device_id},
       {"baselines", b},
       {"inter_run_pause_us", p.inter_run_pause_us},
       {"affected_reads", p.affected_reads},
       {"lingering_us", p.lingering_us}};
}

void from_json(const nlohmann::json& j, DeviceProfile& p) {
  if (j.value("schema_version", 0) != kSchemaVersion)
    fail(ErrorKind::Version, "device profile has an unsupported schema version");
  p = DeviceProfile{};
  p.device_id = j.value("device_id", "");
  for (const auto& [k, v] : j.at("baselines").items()) {
    BaselineCalibration c;
    c.startup = v.at("startup").get<std::uint64_t>();
    c.period = v.at("period").get<std::uint64_t>();
    require(c.period >= 1, "period must be at least 1");
    c.startup_inconclusive = v.value("startup_inconclusive", false);
    c.period_low_confidence = v.value("period_low_confidence", false);
    c.running_mean_us = v.value("running_mean_us", 0.0);
    c.io_count_recommendation = v.value("io_count_recommendation", std::uint64_t{0});
    p.baselines[baseline_from_string(k)] = c;
  }
  p.inter_run_pause_us = j.at("inter_run_pause_us").get<double>();
  require(p.inter_run_pause_us >= 0, "inter_run_pause_us must be non-negative");
  p.affected_reads = j.value("affected_reads", std::uint64_t{0});
  p.lingering_us = j.value("lingering_us", 0.0);
}

}  // namespace uflip
