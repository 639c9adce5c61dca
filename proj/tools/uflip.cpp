// uflip command-line driver.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "uflip/campaign.hpp"

using namespace uflip;

namespace {

struct Common {
  std::string config;
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
  bool force = false;
  bool fresh = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Campaign configuration (JSON)")->required();
  cmd->add_option("--output", c.output, "Override the output directory");
  cmd->add_option("--seed", c.seed, "Override the campaign seed");
  cmd->add_flag("--force", c.force, "Allow destructive IO on raw devices");
  cmd->add_flag("--fresh", c.fresh, "Ignore saved progress and start over");
}

CampaignConfig load(const Common& c) {
  CampaignConfig cfg = load_campaign_config(c.config);
  if (c.output) cfg.output_dir = *c.output;
  if (c.seed) cfg.seed = *c.seed;
  cfg.force = cfg.force || c.force;
  if (c.fresh) cfg.resume = false;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flash IO micro-benchmark harness"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  Common common;
  bool dry_run = false;

  auto* format = app.add_subcommand("format", "Enforce a random-write state on the device");
  add_common(format, common);
  auto* calibrate = app.add_subcommand("calibrate", "Measure start-up, period and pause");
  add_common(calibrate, common);
  auto* plan = app.add_subcommand("plan", "Expand the suite and schedule it");
  add_common(plan, common);
  plan->add_flag("--dry-run", dry_run, "List experiments without writing a plan");
  auto* run = app.add_subcommand("run", "Execute the plan, resuming where it stopped");
  add_common(run, common);
  auto* report = app.add_subcommand("report", "Summarize traces and write plot data");
  add_common(report, common);
  std::string profile_name;
  auto* profile = app.add_subcommand("profile", "Print a built-in simulator profile as JSON");
  profile->add_option("name", profile_name, "Profile name")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (profile->parsed()) {
      std::cout << nlohmann::json(builtin_profile(profile_name)).dump(2) << "\n";
      return 0;
    }
    const CampaignConfig cfg = load(common);
    if (format->parsed()) {
      const auto r = cmd_format(cfg, std::cerr);
      std::cout << "format " << (r.complete ? "complete" : "incomplete") << ": " << r.writes
                << " writes, coverage " << r.coverage * 100 << "%\n";
    } else if (calibrate->parsed()) {
      cmd_calibrate(cfg, std::cerr);
    } else if (plan->parsed()) {
      if (dry_run) {
        const auto exps = campaign_experiments(cfg);
        for (const auto& e : exps) std::cout << describe(e) << "\n";
      } else {
        cmd_plan(cfg, std::cerr);
      }
    } else if (run->parsed()) {
      cmd_run(cfg, std::cerr);
    } else if (report->parsed()) {
      cmd_report(cfg, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "uflip: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}
