#include "uflip/campaign.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>

#include "uflip/raw_device.hpp"
#include "uflip/runner.hpp"

namespace fs = std::filesystem;

namespace uflip {

namespace {

constexpr std::uint64_t kFormatStream = 0x464f524d;
constexpr std::uint64_t kResetStream = 0x52455345;
constexpr std::uint64_t kCalibrateStream = 0x43414c49;
constexpr std::uint64_t kPauseStream = 0x50415553;

void write_file(const std::string& path, const std::string& bytes) {
  fs::create_directories(fs::path(path).parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::Io, "cannot write " + path);
  }
  fs::rename(tmp, path);
}

void write_json(const std::string& path, const nlohmann::json& j) {
  write_file(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const std::string& path, const std::string& hint) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Spec, "missing " + path + " (" + hint + ")");
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Spec, path + ": " + e.what());
  }
}

void write_manifest(const CampaignConfig& cfg, const std::string& command,
                    const std::string& device_id) {
  const CampaignPaths paths{cfg.output_dir};
  write_json(paths.manifest(command), {{"tool_version", kToolVersion},
                                       {"schema_version", kSchemaVersion},
                                       {"command", command},
                                       {"config_hash", cfg.hash()},
                                       {"seed", cfg.seed},
                                       {"device", device_id},
                                       {"config", cfg}});
}

void save_sim_state(const BlockDevice& dev, const CampaignPaths& paths) {
  if (!dev.simulated()) return;
  const auto image = dev.snapshot_state();
  write_file(paths.sim_state(), std::string(image.begin(), image.end()));
}

void require_force(const CampaignConfig& cfg, const char* command) {
  if (!cfg.simulated() && !cfg.force)
    fail(ErrorKind::Spec, std::string(command) +
                              " overwrites data on " + cfg.raw_path + "; pass --force to proceed");
}

struct FormatCheckpoint {
  EnforceState state;
  bool loaded = false;
};

FormatCheckpoint load_format_state(const CampaignConfig& cfg, std::uint64_t capacity) {
  const CampaignPaths paths{cfg.output_dir};
  FormatCheckpoint cp;
  if (!fs::exists(paths.format_state())) return cp;
  const auto j = read_json(paths.format_state(), "format state");
  if (j.value("schema_version", 0) != kSchemaVersion)
    fail(ErrorKind::Version, "format state has an unsupported schema version");
  cp.state.seed = j.at("seed").get<std::uint64_t>();
  cp.state.next_index = j.at("next_index").get<std::uint64_t>();
  cp.state.writes = j.at("writes").get<std::uint64_t>();
  cp.state.elapsed_us = j.at("elapsed_us").get<double>();
  std::ifstream in(paths.format_bitmap(), std::ios::binary);
  if (!in) fail(ErrorKind::Version, "format state without its coverage bitmap");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  cp.state.bitmap = CoverageBitmap::from_bytes(capacity, bytes);
  cp.loaded = true;
  return cp;
}

void save_format_state(const EnforceState& st, const CampaignPaths& paths) {
  const auto bytes = st.bitmap.to_bytes();
  write_file(paths.format_bitmap(), std::string(bytes.begin(), bytes.end()));
  write_json(paths.format_state(), {{"schema_version", kSchemaVersion},
                                    {"seed", st.seed},
                                    {"next_index", st.next_index},
                                    {"writes", st.writes},
                                    {"elapsed_us", st.elapsed_us},
                                    {"coverage", st.bitmap.fraction()},
                                    {"complete", st.complete()}});
}

bool formatted(const CampaignConfig& cfg) {
  const CampaignPaths paths{cfg.output_dir};
  if (!fs::exists(paths.format_state())) return false;
  return read_json(paths.format_state(), "format state").value("complete", false);
}

void require_formatted(const CampaignConfig& cfg) {
  if (!formatted(cfg))
    fail(ErrorKind::Spec, "device state has not been enforced; run format first");
}

std::string device_label(const std::string& id) {
  std::string s = id;
  for (char& c : s)
    if (c == '/' || c == ' ' || c == ':') c = '_';
  while (!s.empty() && s.front() == '_') s.erase(s.begin());
  return s.empty() ? "device" : s;
}

std::uint64_t device_capacity(const CampaignConfig& cfg) {
  if (cfg.simulated()) return campaign_sim_profile(cfg).capacity;
  return probe_raw(cfg.raw_path).capacity;
}

std::string device_id(const CampaignConfig& cfg) {
  if (cfg.simulated()) return "sim-" + campaign_sim_profile(cfg).name;
  return cfg.raw_path;
}

std::vector<ExperimentSpec> selected(const CampaignConfig& cfg) {
  if (cfg.micros.empty()) return expand_all(cfg.suite);
  std::vector<ExperimentSpec> out;
  for (Micro m : cfg.micros) {
    auto e = expand(m, cfg.suite);
    out.insert(out.end(), e.begin(), e.end());
  }
  return out;
}

// Random targets leave room for the largest IO shift on small devices.
SuiteConfig fitted_suite(const CampaignConfig& cfg) {
  SuiteConfig suite = cfg.suite;
  const std::uint64_t cap = device_capacity(cfg);
  if (cap > 2 * MiB)
    suite.base_target_size = std::min(suite.base_target_size, (cap - MiB) / MiB * MiB);
  return suite;
}

}  // namespace

std::vector<ExperimentSpec> campaign_experiments(const CampaignConfig& cfg) {
  CampaignConfig fitted = cfg;
  fitted.suite = fitted_suite(cfg);
  return assign_target_offsets(selected(fitted), device_capacity(cfg), fitted.suite);
}

FormatReport cmd_format(const CampaignConfig& cfg, std::ostream& log, std::uint64_t max_writes) {
  cfg.validate();
  require_force(cfg, "format");
  const CampaignPaths paths{cfg.output_dir};
  fs::create_directories(paths.root);
  const std::uint64_t capacity = device_capacity(cfg);

  FormatCheckpoint cp;
  if (cfg.resume) cp = load_format_state(cfg, capacity);
  if (!cp.loaded) {
    // A fresh format starts from a factory-new simulator.
    fs::remove(paths.sim_state());
    cp.state.seed = derive_seed(cfg.seed, kFormatStream);
    cp.state.bitmap = CoverageBitmap(capacity);
  } else {
    log << "resuming format at " << cp.state.writes << " writes, coverage "
        << cp.state.bitmap.fraction() * 100 << "%\n";
  }
  auto dev = open_device(cfg, true);

  const auto t0 = std::chrono::steady_clock::now();
  const double cov0 = cp.state.bitmap.fraction();
  EnforceOptions opts;
  opts.progress_every = 0;
  std::uint64_t budget = max_writes;
  while (!cp.state.complete() && budget > 0) {
    opts.max_writes = std::min(budget, cfg.format_checkpoint_writes);
    const std::uint64_t before = cp.state.writes;
    enforce_random_state(*dev, cp.state, opts);
    budget -= cp.state.writes - before;
    save_sim_state(*dev, paths);
    save_format_state(cp.state, paths);
    const double cov = cp.state.bitmap.fraction();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double eta = cov > cov0 ? secs / (cov - cov0) * (1.0 - cov) : 0.0;
    char line[128];
    std::snprintf(line, sizeof line, "format: coverage %.2f%%, %llu writes, eta %.0f s\n",
                  cov * 100, static_cast<unsigned long long>(cp.state.writes), eta);
    log << line;
  }
  if (cp.state.complete()) save_format_state(cp.state, paths);
  write_manifest(cfg, "format", dev->id());

  FormatReport r;
  r.complete = cp.state.complete();
  r.writes = cp.state.writes;
  r.coverage = cp.state.bitmap.fraction();
  r.elapsed_us = cp.state.elapsed_us;
  return r;
}

DeviceProfile cmd_calibrate(const CampaignConfig& cfg, std::ostream& log) {
  cfg.validate();
  require_force(cfg, "calibrate");
  require_formatted(cfg);
  const CampaignPaths paths{cfg.output_dir};
  if (cfg.resume && fs::exists(paths.profile())) {
    log << "calibrate: reusing " << paths.profile() << "\n";
    return read_json(paths.profile(), "device profile").get<DeviceProfile>();
  }
  auto dev = open_device(cfg, true);
  CalibrateOptions co = cfg.calibrate;
  co.seed = derive_seed(cfg.seed, kCalibrateStream);
  DeviceProfile prof = calibrate_phases(*dev, co);
  for (const auto& [b, c] : prof.baselines)
    log << "calibrate: " << to_string(b) << " startup " << c.startup << " period "
        << c.period << " running mean " << c.running_mean_us << " us\n";
  PauseOptions po = cfg.pause;
  po.seed = derive_seed(cfg.seed, kPauseStream);
  const PauseResult pr = calibrate_pause(*dev, po);
  prof.inter_run_pause_us = pr.pause_us;
  prof.affected_reads = pr.affected_reads;
  prof.lingering_us = pr.lingering_us;
  log << "calibrate: " << pr.affected_reads << " affected reads, pause " << pr.pause_us / 1e6
      << " s\n";
  save_sim_state(*dev, paths);
  write_json(paths.profile(), prof);
  write_manifest(cfg, "calibrate", dev->id());
  return prof;
}

BenchmarkPlan cmd_plan(const CampaignConfig& cfg, std::ostream& log) {
  cfg.validate();
  const CampaignPaths paths{cfg.output_dir};
  const auto prof = read_json(paths.profile(), "run calibrate first").get<DeviceProfile>();
  const std::uint64_t capacity = device_capacity(cfg);
  auto exps = campaign_experiments(cfg);
  BenchmarkPlan plan = build_plan(std::move(exps), prof, capacity);
  const PlanCheck check = verify_plan(plan, &prof);
  if (!check.ok)
    fail(ErrorKind::Schedule, "plan verification failed: " + check.problems.front());
  std::uint64_t runs = 0;
  for (const auto& s : plan.steps) runs += s.kind == StepKind::Run;
  log << "plan: " << runs << " runs, " << plan.resets() << " state resets\n";
  write_json(paths.plan(), plan);
  write_manifest(cfg, "plan", device_id(cfg));
  return plan;
}

RunReport cmd_run(const CampaignConfig& cfg, std::ostream& log, std::uint64_t max_runs) {
  cfg.validate();
  require_force(cfg, "run");
  require_formatted(cfg);
  const CampaignPaths paths{cfg.output_dir};
  const auto plan = read_json(paths.plan(), "run plan first").get<BenchmarkPlan>();
  Journal journal(paths.journal());
  auto dev = open_device(cfg, true);
  require(dev->capacity() == plan.capacity, "plan was built for a different device capacity");
  const std::string label = device_label(dev->id());

  RunReport rep;
  // Simulator progress is committed together with the state image, so that
  // a resumed campaign continues from exactly the same device state.
  std::vector<std::string> pending;
  auto commit = [&] {
    save_sim_state(*dev, paths);
    for (const auto& k : pending) journal.record(k);
    pending.clear();
  };
  auto done = [&](const std::string& key) {
    if (dev->simulated()) {
      pending.push_back(key);
      if (pending.size() >= cfg.run_checkpoint_steps) commit();
    } else {
      journal.record(key);
    }
  };

  for (std::size_t i = 0; i < plan.steps.size() && rep.runs_executed < max_runs; ++i) {
    const PlanStep& s = plan.steps[i];
    switch (s.kind) {
      case StepKind::Pause: {
        const bool next_pending = i + 1 < plan.steps.size() &&
                                  plan.steps[i + 1].kind == StepKind::Run &&
                                  !journal.done(plan.steps[i + 1].key());
        if (next_pending) dev->idle(s.pause_us);
        break;
      }
      case StepKind::StateReset: {
        if (journal.done(s.key())) break;
        log << "run: state reset " << s.run_index << "\n";
        enforce_random_state(*dev, derive_seed(cfg.seed, kResetStream + s.run_index));
        ++rep.resets;
        done(s.key());
        break;
      }
      case StepKind::Run: {
        if (journal.done(s.key())) {
          ++rep.runs_skipped;
          break;
        }
        const Trace trace = execute_run(*dev, s.experiment.pattern,
                                        RunContext{s.experiment.id(), s.run_index});
        const std::string csv =
            paths.traces() + "/" + trace_path(label, s.experiment, s.run_index);
        fs::create_directories(fs::path(csv).parent_path());
        {
          std::ofstream out(csv, std::ios::trunc);
          write_trace_csv(out, trace);
          if (!out) fail(ErrorKind::Io, "cannot write " + csv);
        }
        write_json(csv.substr(0, csv.size() - 4) + ".meta.json", trace.meta);
        if (trace.failed()) {
          commit();
          fail(ErrorKind::Io, s.key() + ": " + trace.meta.error);
        }
        rep.ios += trace.records.size();
        ++rep.runs_executed;
        done(s.key());
        break;
      }
    }
  }
  commit();
  log << "run: " << rep.runs_executed << " runs executed, " << rep.runs_skipped
      << " already done\n";
  write_manifest(cfg, "run", dev->id());
  return rep;
}

SummaryReport cmd_report(const CampaignConfig& cfg, std::ostream& log) {
  cfg.validate();
  const CampaignPaths paths{cfg.output_dir};
  const auto plan = read_json(paths.plan(), "run plan first").get<BenchmarkPlan>();
  const std::string id = device_id(cfg);
  const std::string label = device_label(id);

  struct Collected {
    ExperimentSpec spec;
    std::vector<RunStats> runs;
    std::vector<double> first_trace;
  };
  std::vector<Collected> collected;
  std::map<std::string, std::size_t> index;
  std::uint64_t missing = 0;
  for (const auto& s : plan.steps) {
    if (s.kind != StepKind::Run) continue;
    const std::string csv = paths.traces() + "/" + trace_path(label, s.experiment, s.run_index);
    std::ifstream in(csv);
    if (!in) {
      ++missing;
      continue;
    }
    const Trace t = read_trace_csv(in);
    const auto rts = t.response_times();
    auto [it, fresh] = index.emplace(s.experiment.id(), collected.size());
    if (fresh) collected.push_back({s.experiment, {}, rts});
    collected[it->second].runs.push_back(summarize(rts, s.io_ignore));
  }
  if (missing) log << "report: " << missing << " runs have no trace yet\n";

  std::vector<ExperimentOutcome> outcomes;
  nlohmann::json results = nlohmann::json::array();
  for (const auto& c : collected) {
    const RunStats avg = average(c.runs);
    const double disp = dispersion(c.runs);
    outcomes.push_back({c.spec, avg});
    results.push_back({{"experiment", c.spec.id()},
                       {"runs", c.runs},
                       {"averaged", avg},
                       {"dispersion", disp},
                       {"dispersion_flag", disp > cfg.dispersion_threshold}});
  }

  const SummaryReport rep = build_summary(outcomes, cfg.suite, id, cfg.thresholds);
  const std::string dir = paths.report_dir();
  fs::create_directories(dir + "/plots");
  nlohmann::json summary = rep;
  write_json(dir + "/summary.json", summary);
  write_file(dir + "/summary.txt", format_summary_table(rep));
  write_json(dir + "/results.json",
             {{"schema_version", kSchemaVersion}, {"device", id}, {"experiments", results}});
  emit_plot_data(outcomes, PlotKind::Granularity, dir + "/plots/granularity.tsv");
  emit_plot_data(outcomes, PlotKind::Locality, dir + "/plots/locality.tsv");
  emit_plot_data(outcomes, PlotKind::Partitioning, dir + "/plots/partitioning.tsv");
  emit_plot_data(outcomes, PlotKind::Order, dir + "/plots/order.tsv");
  for (const auto& c : collected) {
    if (c.spec.micro != Micro::Granularity || c.spec.baseline != "RW" ||
        c.spec.varying.value != static_cast<std::int64_t>(cfg.suite.base_io_size))
      continue;
    std::uint64_t startup = 0;
    if (fs::exists(paths.profile()))
      startup = read_json(paths.profile(), "device profile").get<DeviceProfile>().startup(Baseline::RW);
    emit_phase_plot(c.first_trace, startup, dir + "/plots/phases.tsv");
  }
  log << format_summary_table(rep);
  write_manifest(cfg, "report", id);
  return rep;
}

}  // namespace uflip
