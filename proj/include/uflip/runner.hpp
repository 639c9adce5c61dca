#pragma once

// Executes patterns against a device and records one response time per IO.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "uflip/device.hpp"
#include "uflip/microbench.hpp"
#include "uflip/pattern.hpp"

namespace uflip {

struct TraceRecord {
  std::uint64_t index = 0;
  double actual_submit_us = 0;
  double response_time_us = 0;
  std::uint64_t lba = 0;
  std::uint64_t size = 0;
  Mode mode = Mode::Read;
  std::uint32_t worker = 0;
  bool operator==(const TraceRecord&) const = default;
};

struct TraceMeta {
  std::string experiment_id;
  std::uint64_t run_index = 0;
  std::uint64_t seed = 0;
  std::string device_id;
  std::string wall_clock_start;  // ISO 8601, UTC
  bool simulated_clock = false;
  bool clock_warning = false;    // monotonic clock coarser than 1 us
  std::string error;             // set when the run stopped on an IO error
};

struct Trace {
  TraceMeta meta;
  std::vector<TraceRecord> records;

  std::vector<double> response_times() const;
  bool failed() const { return !meta.error.empty(); }
};

struct RunStats {
  double min = 0;
  double max = 0;
  double mean = 0;
  double stddev = 0;  // population
  std::uint64_t count_ignored = 0;
  std::uint64_t count_kept = 0;
  bool operator==(const RunStats&) const = default;
};

struct RunContext {
  std::string experiment_id;
  std::uint64_t run_index = 0;
};

// Consecutive patterns submit IO i+1 as soon as IO i completes; Pause and
// Burst timings idle for the scheduled gap first. Mixes run as one
// consecutive stream. Parallel patterns run one worker per sub-pattern; on a
// simulator the workers share a single virtual timeline ordered by
// submission time, ties going to the lower worker id. Records of parallel
// runs are numbered in merged submission order.
Trace execute_run(BlockDevice& dev, const PatternSpec& spec, const RunContext& ctx = {});
Trace execute_run(BlockDevice& dev, const MixSpec& mix, const RunContext& ctx = {});
Trace execute_run(BlockDevice& dev, const ParallelSpec& par, const RunContext& ctx = {});
Trace execute_run(BlockDevice& dev, const PatternVariant& pattern, const RunContext& ctx = {});

// Statistics over records with index >= io_ignore. Throws Error(Analysis)
// when nothing is left.
RunStats summarize(std::span<const double> rts, std::uint64_t io_ignore);
RunStats summarize(const Trace& trace, std::uint64_t io_ignore);

// Running average of rts[from..i] for each i >= from.
std::vector<double> running_average(std::span<const double> rts, std::uint64_t from = 0);

// Relative range of the run means: (max - min) / min.
double dispersion(const std::vector<RunStats>& runs);

struct ExperimentOptions {
  std::uint64_t io_ignore = 0;
  double dispersion_threshold = 0.05;
  double pause_between_runs_us = 0;
  bool keep_traces = true;
};

struct ExperimentResult {
  std::string experiment_id;
  std::vector<RunStats> runs;
  RunStats averaged;
  double dispersion = 0;
  bool dispersion_flag = false;
  std::vector<Trace> traces;
};

// Field-wise average of the per-run statistics.
RunStats average(const std::vector<RunStats>& runs);

ExperimentResult execute_experiment(BlockDevice& dev, const ExperimentSpec& exp,
                                    const ExperimentOptions& opts = {});

// Trace CSV: index,actual_submit_us,response_time_us,lba,size,mode,worker
void write_trace_csv(std::ostream& out, const Trace& trace);
Trace read_trace_csv(std::istream& in);
std::string trace_path(const std::string& device, const ExperimentSpec& exp,
                       std::uint64_t run_index);

void to_json(nlohmann::json& j, const RunStats& s);
void from_json(const nlohmann::json& j, RunStats& s);
void to_json(nlohmann::json& j, const TraceMeta& m);
void from_json(const nlohmann::json& j, TraceMeta& m);

}  // namespace uflip
