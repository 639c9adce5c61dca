#pragma once

// Derived quantities from response-time traces and experiment results.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "uflip/microbench.hpp"
#include "uflip/runner.hpp"

namespace uflip {

struct StartupResult {
  std::uint64_t startup = 0;
  bool inconclusive = false;  // series too short to decide
};

struct StartupOptions {
  std::uint64_t min_window = 32;
  double sigma_k = 3.0;
  // A start-up phase must be cheaper than the running phase by at least
  // this fraction of the running-phase mean.
  double min_relative_gap = 0.1;
};

// Step-function fit: the cut s minimising the squared error of a two-level
// approximation, accepted when the prefix is significantly cheaper than the
// suffix and longer than two running-phase periods.
StartupResult detect_startup(std::span<const double> rts, const StartupOptions& opts = {});

struct PeriodResult {
  std::uint64_t period = 1;
  double confidence = 0;  // autocorrelation at the returned lag
  bool low_confidence = true;
};

// Dominant period from the normalised autocorrelation of the mean-subtracted
// series: the smallest lag whose correlation is a local maximum within 5% of
// the best lag. Square waves with superposed periods return the longer period
// unless the shorter one explains almost all the variance.
PeriodResult estimate_period(std::span<const double> rts, std::uint64_t max_lag = 4096);

struct SweepPoint {
  std::uint64_t x = 0;
  double mean = 0;
};

struct AreaResult {
  std::optional<std::uint64_t> value;  // absent: nothing qualifies
  double factor = 0;                   // worst mean / reference within the area
  bool partial = false;                // too few sweep points
  bool operator==(const AreaResult&) const = default;
};

// Largest TargetSize such that it and every smaller one has RW mean <=
// threshold x SW mean. TargetSize == io_size (in-place writes) is skipped.
AreaResult locality_area(std::vector<SweepPoint> rw_by_target_size, double sw_mean,
                         std::uint64_t io_size, double threshold = 2.0);

// Largest partition count such that it and every smaller one has mean <=
// threshold x SW mean. One partition is sequential writing and always counts.
AreaResult partition_threshold(std::vector<SweepPoint> by_partitions, double sw_mean,
                               double threshold = 2.0);

struct OrderRatios {
  std::optional<double> reverse;     // Incr = -1 over SW
  std::optional<double> in_place;    // Incr = 0 over SW
  std::optional<double> large_incr;  // strides >= 1 MB over RW
  std::map<std::int64_t, double> by_incr;  // every Incr over SW
  bool operator==(const OrderRatios&) const = default;
};

OrderRatios order_ratios(const std::map<std::int64_t, double>& mean_by_incr,
                         double sw_mean, std::optional<double> rw_mean,
                         std::uint64_t io_size);

struct Thresholds {
  double locality = 2.0;
  double partitions = 2.0;
  double pause = 1.2;
};

struct ExperimentOutcome {
  ExperimentSpec spec;
  RunStats stats;
};

struct SummaryReport {
  std::string device;
  std::map<std::string, std::optional<double>> baseline_ms;  // SR, RR, SW, RW
  std::optional<double> rw_sw_ratio;
  std::optional<double> pause_effect_us;
  std::optional<AreaResult> locality;
  std::optional<AreaResult> partitions;
  std::optional<OrderRatios> order;
  std::map<std::string, double> alignment_penalty;  // per baseline
  std::map<std::string, double> mix_deviation;      // "<pair>/Ratio=<r>"
  std::map<std::string, std::map<std::int64_t, double>> parallel_degradation;
};

SummaryReport build_summary(const std::vector<ExperimentOutcome>& results,
                            const SuiteConfig& cfg, const std::string& device,
                            const Thresholds& th = {});

void to_json(nlohmann::json& j, const AreaResult& a);
void to_json(nlohmann::json& j, const OrderRatios& o);
void to_json(nlohmann::json& j, const SummaryReport& r);
std::string format_summary_table(const SummaryReport& r);

// Plot data: tab-separated columns under a "# axis:" header, plus a sidecar
// "<path>.meta.json" naming the axes and units.
enum class PlotKind { Granularity, Phases, Locality, Partitioning, Order };

// Experiment sweeps: x = varying parameter, one series per baseline.
void emit_plot_data(const std::vector<ExperimentOutcome>& results, PlotKind kind,
                    const std::string& path);
// Phase plot: index, rt, running average with and without the start-up phase.
void emit_phase_plot(std::span<const double> rts, std::uint64_t startup,
                     const std::string& path);

}  // namespace uflip
