#pragma once

// The nine micro-benchmarks, each expanded into experiments that vary a
// single parameter around the four baseline patterns.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "uflip/pattern.hpp"

namespace uflip {

enum class Micro {
  Granularity,
  Alignment,
  Locality,
  Partitioning,
  Order,
  Parallelism,
  Mix,
  Pause,
  Bursts,
};

inline constexpr Micro kAllMicros[] = {
    Micro::Granularity, Micro::Alignment,   Micro::Locality,
    Micro::Partitioning, Micro::Order,      Micro::Parallelism,
    Micro::Mix,          Micro::Pause,      Micro::Bursts};

const char* to_string(Micro m);
Micro micro_from_string(const std::string& s);

using PatternVariant = std::variant<PatternSpec, MixSpec, ParallelSpec>;

struct VaryingParameter {
  std::string name;
  std::int64_t value = 0;
  bool operator==(const VaryingParameter&) const = default;
};

struct ExperimentSpec {
  Micro micro = Micro::Granularity;
  std::string baseline;  // "SR", ..., or "SR+RW" for mixes
  VaryingParameter varying;
  PatternVariant pattern;
  std::uint64_t repetitions = 3;
  // Set by assign_target_offsets when the sequential-write space of the
  // current epoch is exhausted.
  bool reset_before = false;

  // "<micro>/<baseline>/<param>=<value>"
  std::string id() const;
  bool operator==(const ExperimentSpec&) const = default;
};

struct SuiteConfig {
  std::uint64_t base_io_size = 32 * KiB;
  std::uint64_t base_target_size = 256 * MiB;  // random baselines
  std::uint64_t base_target_offset = 0;
  std::map<Baseline, std::uint64_t> io_count_by_pattern = {
      {Baseline::SR, 1024}, {Baseline::RR, 1024},
      {Baseline::SW, 1024}, {Baseline::RW, 5120}};
  std::map<Baseline, std::uint64_t> io_ignore_by_pattern = {
      {Baseline::SR, 0}, {Baseline::RR, 0}, {Baseline::SW, 0}, {Baseline::RW, 0}};
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> extra_io_sizes = {1536, 3072, 5120, 49152};
  double burst_pause_us = 100000.0;
  std::uint64_t repetitions = 3;
  // Sequential-write ranges are aligned to this boundary.
  std::uint64_t sw_alignment = 4 * MiB;

  std::uint64_t io_count(Baseline b) const;
  std::uint64_t io_ignore(Baseline b) const;
  void validate() const;
};

std::vector<ExperimentSpec> expand(Micro micro, const SuiteConfig& cfg);
std::vector<ExperimentSpec> expand_all(const SuiteConfig& cfg);

// True when the experiment issues sequential-family writes, which disturb
// the enforced device state and need exclusive target space.
bool is_sw_bearing(const ExperimentSpec& e);

// Byte ranges that must not overlap other sequential-write ranges within one
// reset epoch.
std::vector<ByteRange> sw_ranges(const ExperimentSpec& e);

// Every byte range the experiment may touch.
std::vector<ByteRange> all_ranges(const ExperimentSpec& e);

// Places sequential-write-bearing experiments in pairwise disjoint ranges,
// marking reset_before where the accumulated space would exceed capacity.
std::vector<ExperimentSpec> assign_target_offsets(
    std::vector<ExperimentSpec> experiments, std::uint64_t device_capacity,
    const SuiteConfig& cfg = {});

// Dry-run listing, one line per experiment.
std::string describe(const ExperimentSpec& e);

// Component patterns of an experiment (one for basic, two for mixes, the
// base pattern for parallel runs).
std::vector<const PatternSpec*> components(const ExperimentSpec& e);
std::vector<PatternSpec*> components(ExperimentSpec& e);

void to_json(nlohmann::json& j, const ExperimentSpec& e);
void from_json(const nlohmann::json& j, ExperimentSpec& e);
void to_json(nlohmann::json& j, const SuiteConfig& c);
void from_json(const nlohmann::json& j, SuiteConfig& c);

}  // namespace uflip
