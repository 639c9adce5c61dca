#pragma once

// IO pattern algebra: timing, location and mode functions, and the
// deterministic schedules they generate.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "uflip/common.hpp"

namespace uflip {

struct IORequest {
  std::uint64_t index = 0;
  double earliest_submit = 0.0;  // us from run start; lower bound
  std::uint64_t lba = 0;         // byte offset
  std::uint64_t size = 0;        // bytes
  Mode mode = Mode::Read;

  bool operator==(const IORequest&) const = default;
};

using Schedule = std::vector<IORequest>;

enum class TimingKind { Consecutive, Pause, Burst };
enum class LocationKind { Sequential, Random, Ordered, Partitioned };

struct Timing {
  TimingKind kind = TimingKind::Consecutive;
  double pause_us = 0.0;            // Pause, Burst
  std::uint64_t burst_count = 1;    // Burst

  static Timing consecutive() { return {}; }
  static Timing pause(double us) { return {TimingKind::Pause, us, 1}; }
  static Timing burst(double us, std::uint64_t count) {
    return {TimingKind::Burst, us, count};
  }
  bool operator==(const Timing&) const = default;
};

struct Location {
  LocationKind kind = LocationKind::Sequential;
  std::int64_t incr = 1;              // Ordered
  std::uint64_t partitions = 1;       // Partitioned

  static Location sequential() { return {}; }
  static Location random() { return {LocationKind::Random, 1, 1}; }
  static Location ordered(std::int64_t incr) {
    return {LocationKind::Ordered, incr, 1};
  }
  static Location partitioned(std::uint64_t n) {
    return {LocationKind::Partitioned, 1, n};
  }
  bool operator==(const Location&) const = default;
};

struct PatternSpec {
  Timing timing;
  Location location;
  Mode mode = Mode::Read;
  std::uint64_t io_size = 32 * KiB;
  std::uint64_t io_shift = 0;
  std::uint64_t target_offset = 0;
  std::uint64_t target_size = 32 * KiB;
  std::uint64_t io_count = 1;
  std::uint64_t io_ignore = 0;
  std::uint64_t seed = 0;

  bool operator==(const PatternSpec&) const = default;
};

struct MixSpec {
  PatternSpec first;
  PatternSpec second;
  std::uint64_t ratio = 1;  // IOs of first per IO of second

  bool operator==(const MixSpec&) const = default;
};

struct ParallelSpec {
  PatternSpec base;
  std::uint64_t parallel_degree = 1;

  bool operator==(const ParallelSpec&) const = default;
};

// The four reference workloads: consecutive IOs of constant size.
enum class Baseline { SR, RR, SW, RW };

const char* to_string(Baseline b);
Baseline baseline_from_string(const std::string& s);
Mode baseline_mode(Baseline b);
bool baseline_is_random(Baseline b);

PatternSpec make_baseline(Baseline b, std::uint64_t io_size,
                          std::uint64_t target_offset,
                          std::uint64_t target_size, std::uint64_t io_count,
                          std::uint64_t io_ignore, std::uint64_t seed);

// Throws Error(Spec) when an invariant is violated. capacity == 0 skips the
// device-bound check.
void validate(const PatternSpec& spec, std::uint64_t capacity = 0);
void validate(const MixSpec& mix, std::uint64_t capacity = 0);
void validate(const ParallelSpec& par, std::uint64_t capacity = 0);

// Byte address of IO i. Random locations are a pure function of (seed, i).
std::uint64_t lba_at(const PatternSpec& spec, std::uint64_t i);

// Submission time of IO i given the previous IO's submit time and response
// time. i >= 1.
double next_submit_time(const PatternSpec& spec, std::uint64_t i,
                        double prev_submit, double prev_rt);

// Idle gap inserted after IO i-1 completes and before IO i is submitted.
inline double gap_before(const PatternSpec& spec, std::uint64_t i) {
  return i == 0 ? 0.0 : next_submit_time(spec, i, 0.0, 0.0);
}

Schedule generate_schedule(const PatternSpec& spec);
Schedule interleave_mix(const MixSpec& mix);
std::vector<PatternSpec> split_parallel(const ParallelSpec& par);

// Byte range [begin, end) a pattern may touch.
struct ByteRange {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
  bool overlaps(const ByteRange& o) const {
    return begin < o.end && o.begin < end;
  }
  std::uint64_t size() const { return end - begin; }
};
ByteRange footprint(const PatternSpec& spec);

void write_schedule_csv(std::ostream& out, const Schedule& schedule);

void to_json(nlohmann::json& j, const Timing& t);
void from_json(const nlohmann::json& j, Timing& t);
void to_json(nlohmann::json& j, const Location& l);
void from_json(const nlohmann::json& j, Location& l);
void to_json(nlohmann::json& j, const PatternSpec& s);
void from_json(const nlohmann::json& j, PatternSpec& s);
void to_json(nlohmann::json& j, const MixSpec& s);
void from_json(const nlohmann::json& j, MixSpec& s);
void to_json(nlohmann::json& j, const ParallelSpec& s);
void from_json(const nlohmann::json& j, ParallelSpec& s);

}  // namespace uflip

namespace nlohmann {
template <>
struct adl_serializer<uflip::Mode> {
  static void to_json(json& j, uflip::Mode m) {
    j = m == uflip::Mode::Read ? "Read" : "Write";
  }
  static void from_json(const json& j, uflip::Mode& m) {
    const auto s = j.get<std::string>();
    if (s == "Read") m = uflip::Mode::Read;
    else if (s == "Write") m = uflip::Mode::Write;
    else uflip::fail(uflip::ErrorKind::Spec, "unknown mode: " + s);
  }
};
}  // namespace nlohmann
