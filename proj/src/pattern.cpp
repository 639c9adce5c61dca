#include "uflip/pattern.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

namespace uflip {

const char* to_string(Baseline b) {
  switch (b) {
    case Baseline::SR: return "SR";
    case Baseline::RR: return "RR";
    case Baseline::SW: return "SW";
    case Baseline::RW: return "RW";
  }
  return "?";
}

Baseline baseline_from_string(const std::string& s) {
  if (s == "SR") return Baseline::SR;
  if (s == "RR") return Baseline::RR;
  if (s == "SW") return Baseline::SW;
  if (s == "RW") return Baseline::RW;
  fail(ErrorKind::Spec, "unknown baseline: " + s);
}

Mode baseline_mode(Baseline b) {
  return (b == Baseline::SR || b == Baseline::RR) ? Mode::Read : Mode::Write;
}

bool baseline_is_random(Baseline b) {
  return b == Baseline::RR || b == Baseline::RW;
}

PatternSpec make_baseline(Baseline b, std::uint64_t io_size,
                          std::uint64_t target_offset,
                          std::uint64_t target_size, std::uint64_t io_count,
                          std::uint64_t io_ignore, std::uint64_t seed) {
  PatternSpec s;
  s.timing = Timing::consecutive();
  s.location = baseline_is_random(b) ? Location::random() : Location::sequential();
  s.mode = baseline_mode(b);
  s.io_size = io_size;
  s.target_offset = target_offset;
  s.target_size = target_size;
  s.io_count = io_count;
  s.io_ignore = io_ignore;
  s.seed = seed;
  return s;
}

void validate(const PatternSpec& s, std::uint64_t capacity) {
  require(s.io_size >= kSector && s.io_size % kSector == 0,
          "io_size must be a positive multiple of 512 bytes");
  require(s.io_shift % kSector == 0, "io_shift must be a multiple of 512");
  require(s.io_shift < s.io_size, "io_shift must be smaller than io_size");
  require(s.target_offset % kSector == 0,
          "target_offset must be a multiple of 512");
  require(s.target_size >= s.io_size, "target_size must be >= io_size");
  require(s.io_ignore < s.io_count, "io_ignore must be smaller than io_count");
  if (capacity != 0) {
    require(s.target_offset + s.target_size + s.io_shift <= capacity,
            "pattern target space exceeds device capacity");
  }
  switch (s.timing.kind) {
    case TimingKind::Consecutive: break;
    case TimingKind::Pause:
      require(s.timing.pause_us >= 0, "pause must be non-negative");
      break;
    case TimingKind::Burst:
      require(s.timing.pause_us >= 0, "pause must be non-negative");
      require(s.timing.burst_count >= 1, "burst_count must be >= 1");
      break;
  }
  if (s.location.kind == LocationKind::Partitioned) {
    const auto n = s.location.partitions;
    require(n >= 1, "partitions must be >= 1");
    require(s.target_size % n == 0,
            "target_size must be divisible by partitions");
    const auto ps = s.target_size / n;
    require(ps >= s.io_size && ps % s.io_size == 0,
            "partition size must be a multiple of io_size");
  }
}

void validate(const MixSpec& mix, std::uint64_t capacity) {
  validate(mix.first, capacity);
  validate(mix.second, capacity);
  require(mix.ratio >= 1, "mix ratio must be >= 1");
  for (const auto* p : {&mix.first, &mix.second}) {
    require(p->timing.kind == TimingKind::Consecutive &&
                (p->location.kind == LocationKind::Sequential ||
                 p->location.kind == LocationKind::Random),
            "mix components must be baseline patterns");
  }
  require(!footprint(mix.first).overlaps(footprint(mix.second)),
          "mix components must use disjoint target spaces");
}

void validate(const ParallelSpec& par, std::uint64_t capacity) {
  validate(par.base, capacity);
  require(par.parallel_degree >= 1, "parallel_degree must be >= 1");
  require(par.base.target_size % par.parallel_degree == 0,
          "target_size must be divisible by parallel_degree");
  require(par.base.target_size / par.parallel_degree >= par.base.io_size,
          "per-worker target space smaller than io_size");
  require(par.base.io_count / par.parallel_degree >= 1,
          "io_count smaller than parallel_degree");
}

ByteRange footprint(const PatternSpec& s) {
  return {s.target_offset, s.target_offset + s.target_size + s.io_shift};
}

namespace {

[[noreturn]] void out_of_range(std::uint64_t i) {
  fail(ErrorKind::Schedule,
       "address of IO " + std::to_string(i) + " falls outside the target space");
}

}  // namespace

std::uint64_t lba_at(const PatternSpec& s, std::uint64_t i) {
  const std::uint64_t slots = s.target_size / s.io_size;
  std::uint64_t rel = 0;  // relative to target_offset, before io_shift
  switch (s.location.kind) {
    case LocationKind::Sequential:
      rel = (i * s.io_size) % (slots * s.io_size);
      break;
    case LocationKind::Random:
      rel = uniform_below(s.seed, i, slots) * s.io_size;
      break;
    case LocationKind::Ordered: {
      const std::int64_t incr = s.location.incr;
      const auto step = static_cast<std::uint64_t>(incr < 0 ? -incr : incr);
      // Overflow-safe check: step * i slots must stay inside the target.
      if (step != 0 && i > (slots - 1) / step) out_of_range(i);
      const std::uint64_t off = step * i * s.io_size;
      rel = incr >= 0 ? off : (slots - 1) * s.io_size - off;
      break;
    }
    case LocationKind::Partitioned: {
      const std::uint64_t n = s.location.partitions;
      const std::uint64_t ps = s.target_size / n;
      const std::uint64_t p = i % n;
      const std::uint64_t o = ((i / n) * s.io_size) % ps;
      rel = p * ps + o;
      break;
    }
  }
  if (rel + s.io_size > s.target_size) out_of_range(i);
  return s.target_offset + rel + s.io_shift;
}

double next_submit_time(const PatternSpec& s, std::uint64_t i,
                        double prev_submit, double prev_rt) {
  const double base = prev_submit + prev_rt;
  switch (s.timing.kind) {
    case TimingKind::Consecutive:
      return base;
    case TimingKind::Pause:
      return base + s.timing.pause_us;
    case TimingKind::Burst:
      // The pause separates groups of burst_count IOs.
      return (i % s.timing.burst_count == 0) ? base + s.timing.pause_us : base;
  }
  return base;
}

Schedule generate_schedule(const PatternSpec& s) {
  validate(s);
  Schedule out;
  out.reserve(s.io_count);
  double t = 0.0;
  for (std::uint64_t i = 0; i < s.io_count; ++i) {
    if (i > 0) t = next_submit_time(s, i, t, 0.0);
    out.push_back({i, t, lba_at(s, i), s.io_size, s.mode});
  }
  return out;
}

Schedule interleave_mix(const MixSpec& mix) {
  validate(mix);
  Schedule out;
  out.reserve(mix.first.io_count + mix.second.io_count);
  std::uint64_t i1 = 0, i2 = 0;
  for (;;) {
    bool exhausted = false;
    for (std::uint64_t k = 0; k < mix.ratio; ++k) {
      if (i1 == mix.first.io_count) { exhausted = true; break; }
      out.push_back({out.size(), 0.0, lba_at(mix.first, i1), mix.first.io_size,
                     mix.first.mode});
      ++i1;
    }
    if (exhausted || i2 == mix.second.io_count) break;
    out.push_back({out.size(), 0.0, lba_at(mix.second, i2), mix.second.io_size,
                   mix.second.mode});
    ++i2;
  }
  return out;
}

std::vector<PatternSpec> split_parallel(const ParallelSpec& par) {
  validate(par);
  const auto d = par.parallel_degree;
  if (d == 1) return {par.base};
  std::vector<PatternSpec> out;
  out.reserve(d);
  const auto sub_size = par.base.target_size / d;
  const auto sub_count = par.base.io_count / d;
  for (std::uint64_t p = 0; p < d; ++p) {
    PatternSpec s = par.base;
    s.target_offset = par.base.target_offset + p * sub_size;
    s.target_size = sub_size;
    s.io_count = sub_count;
    s.io_ignore = std::min(par.base.io_ignore / d, sub_count - 1);
    s.seed = derive_seed(par.base.seed, p + 1);
    if (s.location.kind == LocationKind::Partitioned)
      require(sub_size % s.location.partitions == 0,
              "per-worker target not divisible by partitions");
    out.push_back(s);
  }
  return out;
}

void write_schedule_csv(std::ostream& out, const Schedule& schedule) {
  out << "index,earliest_submit_us,lba,size,mode\n";
  char buf[64];
  for (const auto& r : schedule) {
    std::snprintf(buf, sizeof buf, "%.3f", r.earliest_submit);
    out << r.index << ',' << buf << ',' << r.lba << ',' << r.size << ','
        << to_string(r.mode) << '\n';
  }
}

// ---- JSON ------------------------------------------------------------------

void to_json(nlohmann::json& j, const Timing& t) {
  switch (t.kind) {
    case TimingKind::Consecutive: j = {{"kind", "Consecutive"}}; break;
    case TimingKind::Pause: j = {{"kind", "Pause"}, {"pause_us", t.pause_us}}; break;
    case TimingKind::Burst:
      j = {{"kind", "Burst"}, {"pause_us", t.pause_us},
           {"burst_count", t.burst_count}};
      break;
  }
}

void from_json(const nlohmann::json& j, Timing& t) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "Consecutive") t = Timing::consecutive();
  else if (kind == "Pause") t = Timing::pause(j.at("pause_us").get<double>());
  else if (kind == "Burst")
    t = Timing::burst(j.at("pause_us").get<double>(),
                      j.at("burst_count").get<std::uint64_t>());
  else fail(ErrorKind::Spec, "unknown timing: " + kind);
}

void to_json(nlohmann::json& j, const Location& l) {
  switch (l.kind) {
    case LocationKind::Sequential: j = {{"kind", "Sequential"}}; break;
    case LocationKind::Random: j = {{"kind", "Random"}}; break;
    case LocationKind::Ordered: j = {{"kind", "Ordered"}, {"incr", l.incr}}; break;
    case LocationKind::Partitioned:
      j = {{"kind", "Partitioned"}, {"partitions", l.partitions}};
      break;
  }
}

void from_json(const nlohmann::json& j, Location& l) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "Sequential") l = Location::sequential();
  else if (kind == "Random") l = Location::random();
  else if (kind == "Ordered") l = Location::ordered(j.at("incr").get<std::int64_t>());
  else if (kind == "Partitioned")
    l = Location::partitioned(j.at("partitions").get<std::uint64_t>());
  else fail(ErrorKind::Spec, "unknown location: " + kind);
}

void to_json(nlohmann::json& j, const PatternSpec& s) {
  j = {{"timing", s.timing},           {"location", s.location},
       {"mode", s.mode},               {"io_size", s.io_size},
       {"io_shift", s.io_shift},       {"target_offset", s.target_offset},
       {"target_size", s.target_size}, {"io_count", s.io_count},
       {"io_ignore", s.io_ignore},     {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, PatternSpec& s) {
  j.at("timing").get_to(s.timing);
  j.at("location").get_to(s.location);
  j.at("mode").get_to(s.mode);
  j.at("io_size").get_to(s.io_size);
  j.at("io_shift").get_to(s.io_shift);
  j.at("target_offset").get_to(s.target_offset);
  j.at("target_size").get_to(s.target_size);
  j.at("io_count").get_to(s.io_count);
  j.at("io_ignore").get_to(s.io_ignore);
  j.at("seed").get_to(s.seed);
}

void to_json(nlohmann::json& j, const MixSpec& s) {
  j = {{"first", s.first}, {"second", s.second}, {"ratio", s.ratio}};
}

void from_json(const nlohmann::json& j, MixSpec& s) {
  j.at("first").get_to(s.first);
  j.at("second").get_to(s.second);
  j.at("ratio").get_to(s.ratio);
}

void to_json(nlohmann::json& j, const ParallelSpec& s) {
  j = {{"base", s.base}, {"parallel_degree", s.parallel_degree}};
}

void from_json(const nlohmann::json& j, ParallelSpec& s) {
  j.at("base").get_to(s.base);
  j.at("parallel_degree").get_to(s.parallel_degree);
}

}  // namespace uflip
