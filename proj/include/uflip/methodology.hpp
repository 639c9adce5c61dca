#pragma once

// Device state enforcement, phase and pause calibration, and benchmark plans.

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "uflip/device.hpp"
#include "uflip/microbench.hpp"

namespace uflip {

// One bit per 512-byte sector.
class CoverageBitmap {
 public:
  CoverageBitmap() = default;
  explicit CoverageBitmap(std::uint64_t capacity);

  void mark(std::uint64_t lba, std::uint64_t size);
  bool covered(std::uint64_t sector) const;
  std::uint64_t sectors() const { return sectors_; }
  std::uint64_t covered_count() const { return covered_; }
  double fraction() const;
  bool complete() const { return covered_ == sectors_; }
  // First uncovered sector at or after `from`, or sectors() if none.
  std::uint64_t next_uncovered(std::uint64_t from) const;

  std::vector<std::uint8_t> to_bytes() const;
  static CoverageBitmap from_bytes(std::uint64_t capacity,
                                   const std::vector<std::uint8_t>& bytes);

 private:
  std::vector<std::uint64_t> words_;
  std::uint64_t sectors_ = 0;
  std::uint64_t covered_ = 0;
};

struct EnforceOptions {
  std::uint64_t max_io_size = 128 * KiB;
  // The random phase stops at this coverage; uncovered sectors are then
  // written in address order.
  double random_phase_coverage = 0.99;
  std::uint64_t max_writes = UINT64_MAX;  // stop early (interrupted format)
  std::uint64_t progress_every = 4096;
  std::function<void(double coverage, std::uint64_t writes)> progress;
};

struct EnforceState {
  std::uint64_t seed = 0;
  std::uint64_t next_index = 0;  // next random-phase draw
  std::uint64_t writes = 0;
  double elapsed_us = 0;         // accumulated device time
  CoverageBitmap bitmap;
  bool complete() const { return bitmap.complete(); }
};

// Random writes of random size over the whole device until every sector has
// been written once. Pass the state of an interrupted call to resume it.
EnforceState enforce_random_state(BlockDevice& dev, std::uint64_t seed,
                                  const EnforceOptions& opts = {});
void enforce_random_state(BlockDevice& dev, EnforceState& state,
                          const EnforceOptions& opts = {});

struct BaselineCalibration {
  std::uint64_t startup = 0;
  std::uint64_t period = 1;
  bool startup_inconclusive = false;
  bool period_low_confidence = false;
  double running_mean_us = 0;
  std::uint64_t io_count_recommendation = 0;
  bool operator==(const BaselineCalibration&) const = default;
};

struct DeviceProfile {
  std::string device_id;
  std::map<Baseline, BaselineCalibration> baselines;
  double inter_run_pause_us = 1e6;
  std::uint64_t affected_reads = 0;
  double lingering_us = 0;

  std::uint64_t startup(Baseline b) const;
  bool operator==(const DeviceProfile&) const = default;
};

void to_json(nlohmann::json& j, const DeviceProfile& p);
void from_json(const nlohmann::json& j, DeviceProfile& p);

struct CalibrateOptions {
  std::uint64_t long_io_count = 51200;
  std::uint64_t io_size = 32 * KiB;
  std::uint64_t seed = 1;
  double settle_us = 60e6;  // idle before each baseline
  std::uint64_t fast_floor = 1024;
  std::uint64_t rw_floor = 5120;
  std::uint64_t slow_floor = 512;
  double slow_device_us = 20000;  // running-phase mean above which floors drop
  std::uint64_t period_multiple = 20;
};

// Runs the four baselines with a long IO count (SW last, since it rewrites
// the device sequentially) and fills startup, period and recommendations.
DeviceProfile calibrate_phases(BlockDevice& dev, const CalibrateOptions& opts = {});
std::uint64_t recommend_io_count(Baseline b, std::uint64_t startup, std::uint64_t period,
                                 double running_mean_us, const CalibrateOptions& opts);

struct PauseOptions {
  std::uint64_t io_size = 32 * KiB;
  std::uint64_t sr_batch = 1000;
  std::uint64_t rw_batch = 2048;
  std::uint64_t chunk = 1000;
  std::uint64_t max_chunks = 10000;
  double k_sigma = 3.0;
  double settle_us = 60e6;
  double overestimate = 2.0;
  double floor_us = 1e6;
  std::uint64_t seed = 1;
};

struct PauseResult {
  double pause_us = 0;
  std::uint64_t affected_reads = 0;
  double lingering_us = 0;  // total response time of the affected reads
  double pre_mean_us = 0;
  double pre_stddev_us = 0;
};

// Sequential reads, a batch of random writes, then sequential reads until a
// whole chunk is unaffected. Reads slower than pre-batch mean + k sigma count
// as affected.
PauseResult calibrate_pause(BlockDevice& dev, const PauseOptions& opts = {});

enum class StepKind { StateReset, Pause, Run };

struct PlanStep {
  StepKind kind = StepKind::Run;
  double pause_us = 0;           // Pause
  ExperimentSpec experiment;     // Run
  std::uint64_t run_index = 0;   // Run
  std::uint64_t io_ignore = 0;   // Run
  std::string key() const;       // stable journal key
};

struct BenchmarkPlan {
  std::uint64_t capacity = 0;
  double inter_run_pause_us = 0;
  std::vector<PlanStep> steps;
  std::uint64_t resets() const;
};

// io_ignore for one experiment given the calibrated start-up lengths.
std::uint64_t plan_io_ignore(const ExperimentSpec& e, const DeviceProfile& profile);

BenchmarkPlan build_plan(std::vector<ExperimentSpec> experiments,
                         const DeviceProfile& profile, std::uint64_t capacity);

struct PlanCheck {
  bool ok = true;
  std::uint64_t overlaps = 0;
  std::uint64_t capacity_violations = 0;
  std::uint64_t missing_pauses = 0;
  std::uint64_t max_epoch_bytes = 0;
  std::vector<std::string> problems;
};

// Replays the plan against a capacity ledger.
PlanCheck verify_plan(const BenchmarkPlan& plan, const DeviceProfile* profile = nullptr);

void to_json(nlohmann::json& j, const PlanStep& s);
void from_json(const nlohmann::json& j, PlanStep& s);
void to_json(nlohmann::json& j, const BenchmarkPlan& p);
void from_json(const nlohmann::json& j, BenchmarkPlan& p);

// Append-only record of completed plan steps.
class Journal {
 public:
  explicit Journal(std::string path);
  bool done(const std::string& key) const { return done_.count(key) != 0; }
  void record(const std::string& key);
  std::size_t size() const { return done_.size(); }

 private:
  std::string path_;
  std::set<std::string> done_;
};

}  // namespace uflip
