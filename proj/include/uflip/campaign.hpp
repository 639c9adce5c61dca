#pragma once

// Campaign commands: format, calibrate, plan, run and report, each reading
// and writing files under one output directory.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "uflip/analysis.hpp"
#include "uflip/device.hpp"
#include "uflip/methodology.hpp"
#include "uflip/microbench.hpp"
#include "uflip/sim_device.hpp"

namespace uflip {

struct CampaignConfig {
  // Exactly one of these selects the device.
  std::string raw_path;
  std::string profile_path;  // simulator profile JSON
  std::string builtin;       // built-in simulator profile name
  std::optional<SimProfile> inline_profile;

  SuiteConfig suite;
  std::vector<Micro> micros;  // empty: all nine
  std::string output_dir = "uflip-out";
  std::uint64_t seed = 1;
  Thresholds thresholds;
  bool resume = true;
  bool force = false;  // required for destructive commands on raw devices
  bool require_direct = true;

  CalibrateOptions calibrate;
  PauseOptions pause;
  std::uint64_t format_checkpoint_writes = 65536;
  std::uint64_t run_checkpoint_steps = 64;
  double dispersion_threshold = 0.05;

  bool simulated() const { return raw_path.empty(); }
  void validate() const;
  std::string hash() const;  // stable digest of the canonical JSON
};

void to_json(nlohmann::json& j, const CampaignConfig& c);
void from_json(const nlohmann::json& j, CampaignConfig& c);
CampaignConfig load_campaign_config(const std::string& path);

// Artifact locations inside the output directory.
struct CampaignPaths {
  std::string root;
  std::string sim_state() const { return root + "/sim_state.bin"; }
  std::string format_state() const { return root + "/format_state.json"; }
  std::string format_bitmap() const { return root + "/format_bitmap.bin"; }
  std::string profile() const { return root + "/device_profile.json"; }
  std::string plan() const { return root + "/plan.json"; }
  std::string journal() const { return root + "/run.journal"; }
  std::string traces() const { return root + "/traces"; }
  std::string report_dir() const { return root + "/report"; }
  std::string manifest(const std::string& command) const {
    return root + "/manifest-" + command + ".json";
  }
};

struct FormatReport {
  bool complete = false;
  std::uint64_t writes = 0;
  double coverage = 0;
  double elapsed_us = 0;
};

struct RunReport {
  std::uint64_t runs_executed = 0;
  std::uint64_t runs_skipped = 0;
  std::uint64_t resets = 0;
  std::uint64_t ios = 0;
};

// max_writes stops the format early, as if interrupted; a later call with
// resume set picks up from the last checkpoint.
FormatReport cmd_format(const CampaignConfig& cfg, std::ostream& log,
                        std::uint64_t max_writes = UINT64_MAX);
DeviceProfile cmd_calibrate(const CampaignConfig& cfg, std::ostream& log);
BenchmarkPlan cmd_plan(const CampaignConfig& cfg, std::ostream& log);
// max_runs stops after that many executed runs, as if interrupted.
RunReport cmd_run(const CampaignConfig& cfg, std::ostream& log,
                  std::uint64_t max_runs = UINT64_MAX);
SummaryReport cmd_report(const CampaignConfig& cfg, std::ostream& log);

// Opens the configured device. Simulators resume from the saved state image
// when one exists.
std::unique_ptr<BlockDevice> open_device(const CampaignConfig& cfg, bool writable);
SimProfile campaign_sim_profile(const CampaignConfig& cfg);

// The configured experiments, placed on the device.
std::vector<ExperimentSpec> campaign_experiments(const CampaignConfig& cfg);

// 0 success, 2 validation error, 3 device IO error, 1 anything else.
int exit_code_for(const std::exception& e);

}  // namespace uflip
