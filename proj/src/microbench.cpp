#include "uflip/microbench.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>

namespace uflip {

namespace {

constexpr Baseline kBaselines[] = {Baseline::SR, Baseline::RR, Baseline::SW,
                                   Baseline::RW};


std::uint64_t round_up(std::uint64_t v, std::uint64_t m) {
  return m == 0 ? v : (v + m - 1) / m * m;
}

std::uint64_t round_down(std::uint64_t v, std::uint64_t m) {
  return m == 0 ? v : v / m * m;
}

struct Builder {
  const SuiteConfig& cfg;
  Micro micro;
  std::vector<ExperimentSpec> out;

  PatternSpec baseline(Baseline b, std::uint64_t io_size) const {
    const auto count = cfg.io_count(b);
    const auto target =
        baseline_is_random(b) ? cfg.base_target_size : count * io_size;
    return make_baseline(b, io_size, cfg.base_target_offset, target, count,
                         std::min(cfg.io_ignore(b), count - 1), 0);
  }

  void add(std::string label, const char* param, std::int64_t value,
           PatternVariant pattern) {
    ExperimentSpec e;
    e.micro = micro;
    e.baseline = std::move(label);
    e.varying = {param, value};
    e.repetitions = cfg.repetitions;
    e.pattern = std::move(pattern);
    const auto seed = derive_seed(cfg.seed, fnv1a(e.id()));
    std::uint64_t k = 0;
    for (auto* p : components(e)) p->seed = derive_seed(seed, k++);
    out.push_back(std::move(e));
  }
};

void expand_granularity(Builder& b) {
  std::vector<std::uint64_t> sizes;
  for (int k = 0; k <= 9; ++k) sizes.push_back(kSector << k);
  for (auto s : b.cfg.extra_io_sizes) sizes.push_back(s);
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  for (auto size : sizes) {
    for (auto bl : kBaselines) {
      if (baseline_is_random(bl) && size > b.cfg.base_target_size) continue;
      b.add(to_string(bl), "IOSize", static_cast<std::int64_t>(size),
            b.baseline(bl, size));
    }
  }
}

void expand_alignment(Builder& b) {
  const auto io = b.cfg.base_io_size;
  // IOShift = IOSize is equivalent to 0 modulo the IO size; 0 is the
  // aligned control point.
  std::vector<std::uint64_t> shifts = {0};
  for (std::uint64_t s = kSector; s < io; s *= 2) shifts.push_back(s);
  for (auto shift : shifts) {
    for (auto bl : kBaselines) {
      auto p = b.baseline(bl, io);
      p.io_shift = shift;
      b.add(to_string(bl), "IOShift", static_cast<std::int64_t>(shift), p);
    }
  }
}

void expand_locality(Builder& b) {
  const auto io = b.cfg.base_io_size;
  for (auto bl : kBaselines) {
    const int max_exp = baseline_is_random(bl) ? 16 : 8;
    for (int k = 0; k <= max_exp; ++k) {
      const std::uint64_t target = io << k;
      if (target > b.cfg.base_target_size) break;
      auto p = b.baseline(bl, io);
      p.target_size = target;
      b.add(to_string(bl), "TargetSize", static_cast<std::int64_t>(target), p);
    }
  }
}

void expand_partitioning(Builder& b) {
  const auto io = b.cfg.base_io_size;
  for (auto bl : {Baseline::SR, Baseline::SW}) {
    const auto count = b.cfg.io_count(bl);
    // At least four IO slots per partition, so that 256 partitions still
    // scatter consecutive IOs over distinct ranges.
    const auto target = round_up(std::max<std::uint64_t>(count, 4 * 256) * io, 256 * io);
    for (std::uint64_t n = 1; n <= 256; n *= 2) {
      auto p = b.baseline(bl, io);
      p.location = Location::partitioned(n);
      p.target_size = target;
      b.add(to_string(bl), "Partitions", static_cast<std::int64_t>(n), p);
    }
  }
}

void expand_order(Builder& b) {
  const auto io = b.cfg.base_io_size;
  std::vector<std::int64_t> incrs = {-1, 0};
  for (std::int64_t v = 1; v <= 256; v *= 2) incrs.push_back(v);
  for (auto bl : {Baseline::SR, Baseline::SW}) {
    for (auto incr : incrs) {
      auto p = b.baseline(bl, io);
      p.location = Location::ordered(incr);
      const std::uint64_t step = incr == 0 ? 0 : static_cast<std::uint64_t>(std::abs(incr));
      if (step == 0) {
        p.target_size = io;
      } else {
        // Ordered patterns do not wrap: large strides get fewer IOs so the
        // pattern fits in the baseline target size.
        const auto max_count = b.cfg.base_target_size / (step * io);
        if (max_count < 2) continue;
        p.io_count = std::min(p.io_count, max_count);
        p.io_ignore = std::min(p.io_ignore, p.io_count - 1);
        p.target_size = step * p.io_count * io;
      }
      b.add(to_string(bl), "Incr", incr, p);
    }
  }
}

void expand_parallelism(Builder& b) {
  const auto io = b.cfg.base_io_size;
  constexpr std::uint64_t kMaxDegree = 16;
  for (auto bl : kBaselines) {
    for (std::uint64_t d = 1; d <= kMaxDegree; d *= 2) {
      auto p = b.baseline(bl, io);
      if (baseline_is_random(bl)) {
        p.target_size = round_down(b.cfg.base_target_size, kMaxDegree * io);
      } else {
        p.target_size = round_up(p.io_count * io, kMaxDegree * io);
      }
      if (p.io_count < d) continue;
      b.add(to_string(bl), "ParallelDegree", static_cast<std::int64_t>(d),
            ParallelSpec{p, d});
    }
  }
}

void expand_mix(Builder& b) {
  const auto io = b.cfg.base_io_size;
  const std::pair<Baseline, Baseline> pairs[] = {
      {Baseline::SR, Baseline::RR}, {Baseline::SR, Baseline::SW},
      {Baseline::SR, Baseline::RW}, {Baseline::RR, Baseline::SW},
      {Baseline::RR, Baseline::RW}, {Baseline::SW, Baseline::RW}};
  const auto half = std::max(io, round_down(b.cfg.base_target_size / 2, io));
  for (const auto& [b1, b2] : pairs) {
    for (std::uint64_t ratio = 1; ratio <= 64; ratio *= 2) {
      auto second = b.baseline(b2, io);
      auto first = b.baseline(b1, io);
      first.io_count = ratio * second.io_count;
      first.io_ignore = std::min(first.io_ignore, first.io_count - 1);
      for (auto* p : {&first, &second}) {
        p->target_size = p->location.kind == LocationKind::Random
                             ? half
                             : std::min(p->io_count * io, half);
      }
      second.target_offset = footprint(first).end;
      const std::string label = std::string(to_string(b1)) + "+" + to_string(b2);
      b.add(label, "Ratio", static_cast<std::int64_t>(ratio),
            MixSpec{first, second, ratio});
    }
  }
}

void expand_pause(Builder& b) {
  for (auto bl : kBaselines) {
    for (std::int64_t k = 1; k <= 256; k *= 2) {
      auto p = b.baseline(bl, b.cfg.base_io_size);
      const double pause = 100.0 * static_cast<double>(k);
      p.timing = Timing::pause(pause);
      b.add(to_string(bl), "Pause", static_cast<std::int64_t>(pause), p);
    }
  }
}

void expand_bursts(Builder& b) {
  for (auto bl : kBaselines) {
    for (std::uint64_t k = 1; k <= 64; k *= 2) {
      auto p = b.baseline(bl, b.cfg.base_io_size);
      p.timing = Timing::burst(b.cfg.burst_pause_us, 10 * k);
      b.add(to_string(bl), "Burst", static_cast<std::int64_t>(10 * k), p);
    }
  }
}

}  // namespace

const char* to_string(Micro m) {
  switch (m) {
    case Micro::Granularity: return "Granularity";
    case Micro::Alignment: return "Alignment";
    case Micro::Locality: return "Locality";
    case Micro::Partitioning: return "Partitioning";
    case Micro::Order: return "Order";
    case Micro::Parallelism: return "Parallelism";
    case Micro::Mix: return "Mix";
    case Micro::Pause: return "Pause";
    case Micro::Bursts: return "Bursts";
  }
  return "?";
}

Micro micro_from_string(const std::string& s) {
  for (auto m : kAllMicros)
    if (s == to_string(m)) return m;
  fail(ErrorKind::Spec, "unknown micro-benchmark: " + s);
}

std::string ExperimentSpec::id() const {
  return std::string(to_string(micro)) + "/" + baseline + "/" + varying.name +
         "=" + std::to_string(varying.value);
}

std::uint64_t SuiteConfig::io_count(Baseline b) const {
  auto it = io_count_by_pattern.find(b);
  require(it != io_count_by_pattern.end(),
          std::string("no io_count for ") + to_string(b));
  return it->second;
}

std::uint64_t SuiteConfig::io_ignore(Baseline b) const {
  auto it = io_ignore_by_pattern.find(b);
  return it == io_ignore_by_pattern.end() ? 0 : it->second;
}

void SuiteConfig::validate() const {
  require(base_io_size >= kSector && base_io_size % kSector == 0,
          "base_io_size must be a multiple of 512");
  require(base_target_size >= base_io_size, "base_target_size < base_io_size");
  require(base_target_offset % kSector == 0, "base_target_offset unaligned");
  require(repetitions >= 1, "repetitions must be >= 1");
  for (auto b : kBaselines) require(io_count(b) >= 1, "io_count must be >= 1");
}

std::vector<ExperimentSpec> expand(Micro micro, const SuiteConfig& cfg) {
  cfg.validate();
  Builder b{cfg, micro, {}};
  switch (micro) {
    case Micro::Granularity: expand_granularity(b); break;
    case Micro::Alignment: expand_alignment(b); break;
    case Micro::Locality: expand_locality(b); break;
    case Micro::Partitioning: expand_partitioning(b); break;
    case Micro::Order: expand_order(b); break;
    case Micro::Parallelism: expand_parallelism(b); break;
    case Micro::Mix: expand_mix(b); break;
    case Micro::Pause: expand_pause(b); break;
    case Micro::Bursts: expand_bursts(b); break;
  }
  return std::move(b.out);
}

std::vector<ExperimentSpec> expand_all(const SuiteConfig& cfg) {
  std::vector<ExperimentSpec> all;
  for (auto m : kAllMicros) {
    auto part = expand(m, cfg);
    all.insert(all.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return all;
}

std::vector<const PatternSpec*> components(const ExperimentSpec& e) {
  return std::visit(
      [](const auto& p) -> std::vector<const PatternSpec*> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PatternSpec>) return {&p};
        else if constexpr (std::is_same_v<T, MixSpec>) return {&p.first, &p.second};
        else return {&p.base};
      },
      e.pattern);
}

std::vector<PatternSpec*> components(ExperimentSpec& e) {
  return std::visit(
      [](auto& p) -> std::vector<PatternSpec*> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PatternSpec>) return {&p};
        else if constexpr (std::is_same_v<T, MixSpec>) return {&p.first, &p.second};
        else return {&p.base};
      },
      e.pattern);
}

namespace {
bool is_sw(const PatternSpec& p) {
  return p.mode == Mode::Write && p.location.kind != LocationKind::Random;
}
}  // namespace

bool is_sw_bearing(const ExperimentSpec& e) {
  for (const auto* p : components(e))
    if (is_sw(*p)) return true;
  return false;
}

std::vector<ByteRange> sw_ranges(const ExperimentSpec& e) {
  std::vector<ByteRange> out;
  for (const auto* p : components(e))
    if (is_sw(*p)) out.push_back(footprint(*p));
  return out;
}

std::vector<ByteRange> all_ranges(const ExperimentSpec& e) {
  std::vector<ByteRange> out;
  for (const auto* p : components(e)) out.push_back(footprint(*p));
  return out;
}

std::vector<ExperimentSpec> assign_target_offsets(
    std::vector<ExperimentSpec> experiments, std::uint64_t capacity,
    const SuiteConfig& cfg) {
  const std::uint64_t base = cfg.base_target_offset;
  const std::uint64_t align = std::max<std::uint64_t>(cfg.sw_alignment, kSector);
  std::uint64_t cursor = base;

  auto place = [&](ExperimentSpec& e, std::uint64_t size) -> std::uint64_t {
    require(base + size <= capacity,
            "experiment " + e.id() + " needs more sequential-write space than "
            "the device capacity");
    std::uint64_t at = round_up(cursor, align);
    if (at + size > capacity) {
      // Epoch exhausted: the state must be reset before this experiment.
      e.reset_before = true;
      at = round_up(base, align);
      if (at + size > capacity) at = base;
    }
    cursor = at + size;
    return at;
  };

  for (auto& e : experiments) {
    e.reset_before = false;
    if (!is_sw_bearing(e)) {
      for (const auto& r : all_ranges(e))
        require(r.end <= capacity,
                "experiment " + e.id() + " exceeds device capacity");
      continue;
    }
    if (auto* mix = std::get_if<MixSpec>(&e.pattern)) {
      PatternSpec* sw = is_sw(mix->first) ? &mix->first : &mix->second;
      PatternSpec* other = sw == &mix->first ? &mix->second : &mix->first;
      sw->target_offset = place(e, footprint(*sw).size());
      const auto sw_fp = footprint(*sw);
      const auto osize = footprint(*other).size();
      if (is_sw(*other)) {
        other->target_offset = place(e, osize);
      } else if (ByteRange{base, base + osize}.overlaps(sw_fp) == false &&
                 base + osize <= capacity) {
        other->target_offset = base;
      } else if (sw_fp.end + osize <= capacity) {
        other->target_offset = round_up(sw_fp.end, kSector);
      } else if (sw_fp.begin >= base + osize) {
        other->target_offset = round_down(sw_fp.begin - osize, kSector);
      } else {
        fail(ErrorKind::Spec, "no disjoint space for mix " + e.id());
      }
    } else {
      auto* p = components(e).front();
      p->target_offset = place(e, footprint(*p).size());
    }
  }
  return experiments;
}

std::string describe(const ExperimentSpec& e) {
  std::ostringstream os;
  os << to_string(e.micro) << ' ' << e.baseline << ' ' << e.varying.name << '='
     << e.varying.value;
  const auto comps = components(e);
  os << " offset=" << comps.front()->target_offset;
  std::uint64_t count = 0;
  for (const auto* p : comps) count += p->io_count;
  os << " io_count=" << count;
  if (e.reset_before) os << " [reset]";
  return os.str();
}

// ---- JSON ------------------------------------------------------------------

void to_json(nlohmann::json& j, const ExperimentSpec& e) {
  j = {{"micro", to_string(e.micro)},
       {"baseline", e.baseline},
       {"varying", {{"name", e.varying.name}, {"value", e.varying.value}}},
       {"repetitions", e.repetitions},
       {"reset_before", e.reset_before}};
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PatternSpec>) j["kind"] = "basic";
        else if constexpr (std::is_same_v<T, MixSpec>) j["kind"] = "mix";
        else j["kind"] = "parallel";
        j["pattern"] = p;
      },
      e.pattern);
}

void from_json(const nlohmann::json& j, ExperimentSpec& e) {
  e.micro = micro_from_string(j.at("micro").get<std::string>());
  e.baseline = j.at("baseline").get<std::string>();
  e.varying.name = j.at("varying").at("name").get<std::string>();
  e.varying.value = j.at("varying").at("value").get<std::int64_t>();
  e.repetitions = j.at("repetitions").get<std::uint64_t>();
  e.reset_before = j.value("reset_before", false);
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "basic") e.pattern = j.at("pattern").get<PatternSpec>();
  else if (kind == "mix") e.pattern = j.at("pattern").get<MixSpec>();
  else if (kind == "parallel") e.pattern = j.at("pattern").get<ParallelSpec>();
  else fail(ErrorKind::Spec, "unknown experiment kind: " + kind);
}

namespace {
nlohmann::json baseline_map(const std::map<Baseline, std::uint64_t>& m) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : m) j[to_string(k)] = v;
  return j;
}
std::map<Baseline, std::uint64_t> baseline_map(const nlohmann::json& j) {
  std::map<Baseline, std::uint64_t> m;
  for (const auto& [k, v] : j.items()) m[baseline_from_string(k)] = v.get<std::uint64_t>();
  return m;
}
}  // namespace

void to_json(nlohmann::json& j, const SuiteConfig& c) {
  j = {{"base_io_size", c.base_io_size},
       {"base_target_size", c.base_target_size},
       {"base_target_offset", c.base_target_offset},
       {"io_count_by_pattern", baseline_map(c.io_count_by_pattern)},
       {"io_ignore_by_pattern", baseline_map(c.io_ignore_by_pattern)},
       {"seed", c.seed},
       {"extra_io_sizes", c.extra_io_sizes},
       {"burst_pause_us", c.burst_pause_us},
       {"repetitions", c.repetitions},
       {"sw_alignment", c.sw_alignment}};
}

void from_json(const nlohmann::json& j, SuiteConfig& c) {
  SuiteConfig d;
  c.base_io_size = j.value("base_io_size", d.base_io_size);
  c.base_target_size = j.value("base_target_size", d.base_target_size);
  c.base_target_offset = j.value("base_target_offset", d.base_target_offset);
  c.io_count_by_pattern = j.contains("io_count_by_pattern")
                              ? baseline_map(j.at("io_count_by_pattern"))
                              : d.io_count_by_pattern;
  c.io_ignore_by_pattern = j.contains("io_ignore_by_pattern")
                               ? baseline_map(j.at("io_ignore_by_pattern"))
                               : d.io_ignore_by_pattern;
  c.seed = j.value("seed", d.seed);
  c.extra_io_sizes = j.value("extra_io_sizes", d.extra_io_sizes);
  c.burst_pause_us = j.value("burst_pause_us", d.burst_pause_us);
  c.repetitions = j.value("repetitions", d.repetitions);
  c.sw_alignment = j.value("sw_alignment", d.sw_alignment);
}

}  // namespace uflip
