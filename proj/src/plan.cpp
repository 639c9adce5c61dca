#include <fstream>

#include "uflip/methodology.hpp"

namespace uflip {

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

std::uint64_t total_ios(const ExperimentSpec& e) {
  if (const auto* mix = std::get_if<MixSpec>(&e.pattern)) {
    // Interleaving stops when either side runs out.
    const std::uint64_t rounds =
        std::min(mix->first.io_count / mix->ratio, mix->second.io_count);
    return rounds * (mix->ratio + 1) + std::min(mix->ratio, mix->first.io_count -
                                                                rounds * mix->ratio);
  }
  return components(e).front()->io_count;
}

// Makes sure at least `configured` IOs remain after ignoring `ignore` ones.
void ensure_kept(ExperimentSpec& e, std::uint64_t ignore) {
  if (ignore < total_ios(e)) return;
  if (auto* mix = std::get_if<MixSpec>(&e.pattern)) {
    mix->second.io_count += ceil_div(ignore, mix->ratio + 1);
    mix->first.io_count = mix->ratio * mix->second.io_count;
    return;
  }
  PatternSpec* p = components(e).front();
  p->io_count = ignore + p->io_count;
}

std::uint64_t bytes_of(const std::vector<ByteRange>& rs) {
  std::uint64_t n = 0;
  for (const auto& r : rs) n += r.size();
  return n;
}

bool overlaps_any(const std::vector<ByteRange>& a, const std::vector<ByteRange>& b) {
  for (const auto& x : a)
    for (const auto& y : b)
      if (x.overlaps(y)) return true;
  return false;
}

const char* kind_name(StepKind k) {
  switch (k) {
    case StepKind::StateReset: return "StateReset";
    case StepKind::Pause: return "Pause";
    case StepKind::Run: return "Run";
  }
  return "?";
}

}  // namespace

std::string PlanStep::key() const {
  switch (kind) {
    case StepKind::Run: return "run/" + experiment.id() + "/" + std::to_string(run_index);
    case StepKind::StateReset: return "reset/" + std::to_string(run_index);
    case StepKind::Pause: return "pause";
  }
  return "?";
}

std::uint64_t BenchmarkPlan::resets() const {
  std::uint64_t n = 0;
  for (const auto& s : steps) n += s.kind == StepKind::StateReset;
  return n;
}

std::uint64_t plan_io_ignore(const ExperimentSpec& e, const DeviceProfile& profile) {
  if (const auto* mix = std::get_if<MixSpec>(&e.pattern)) {
    const auto plus = e.baseline.find('+');
    require(plus != std::string::npos, "mix experiment without a baseline pair: " + e.id());
    const auto s1 = profile.startup(baseline_from_string(e.baseline.substr(0, plus)));
    const auto s2 = profile.startup(baseline_from_string(e.baseline.substr(plus + 1)));
    const std::uint64_t r = mix->ratio;
    // The start-up phase is counted in IOs of each component; scale it up to
    // the share that component has in the interleaved stream.
    const std::uint64_t need1 = ceil_div(s1 * (r + 1), r);
    const std::uint64_t need2 = s2 * (r + 1);
    return std::max(need1, need2);
  }
  const auto derived = profile.startup(baseline_from_string(e.baseline));
  return std::max(derived, components(e).front()->io_ignore);
}

BenchmarkPlan build_plan(std::vector<ExperimentSpec> experiments,
                         const DeviceProfile& profile, std::uint64_t capacity) {
  BenchmarkPlan plan;
  plan.capacity = capacity;
  plan.inter_run_pause_us = profile.inter_run_pause_us;

  std::vector<std::pair<ExperimentSpec, std::uint64_t>> plain, sequential;
  for (auto& e : experiments) {
    const auto ignore = plan_io_ignore(e, profile);
    ensure_kept(e, ignore);
    if (auto* p = std::get_if<PatternSpec>(&e.pattern)) p->io_ignore = ignore;
    if (auto* p = std::get_if<ParallelSpec>(&e.pattern))
      p->base.io_ignore = std::min(ignore, p->base.io_count - 1);
    for (const auto& r : all_ranges(e))
      if (r.end > capacity || r.size() > capacity)
        fail(ErrorKind::Spec, "experiment " + e.id() + " does not fit on the device");
    (is_sw_bearing(e) ? sequential : plain).emplace_back(std::move(e), ignore);
  }

  auto emit_runs = [&](const ExperimentSpec& e, std::uint64_t ignore) {
    for (std::uint64_t k = 0; k < e.repetitions; ++k) {
      PlanStep pause;
      pause.kind = StepKind::Pause;
      pause.pause_us = profile.inter_run_pause_us;
      plan.steps.push_back(pause);
      PlanStep run;
      run.kind = StepKind::Run;
      run.experiment = e;
      run.run_index = k;
      run.io_ignore = ignore;
      plan.steps.push_back(std::move(run));
    }
  };

  for (const auto& [e, ignore] : plain) emit_runs(e, ignore);

  std::vector<ByteRange> epoch;
  std::uint64_t used = 0;
  std::uint64_t resets = 0;
  for (auto& [e, ignore] : sequential) {
    const auto rs = sw_ranges(e);
    const auto bytes = bytes_of(rs);
    if (bytes > capacity)
      fail(ErrorKind::Spec, "experiment " + e.id() + " needs more sequential space than the device has");
    const bool reset =
        !epoch.empty() && (e.reset_before || overlaps_any(rs, epoch) || used + bytes > capacity);
    if (reset) {
      PlanStep s;
      s.kind = StepKind::StateReset;
      s.run_index = resets++;
      plan.steps.push_back(s);
      epoch.clear();
      used = 0;
    }
    epoch.insert(epoch.end(), rs.begin(), rs.end());
    used += bytes;
    emit_runs(e, ignore);
  }
  return plan;
}

PlanCheck verify_plan(const BenchmarkPlan& plan, const DeviceProfile* profile) {
  PlanCheck c;
  std::vector<std::pair<std::string, std::vector<ByteRange>>> epoch;
  std::uint64_t used = 0;
  auto problem = [&](const std::string& what) {
    c.ok = false;
    c.problems.push_back(what);
  };
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const PlanStep& s = plan.steps[i];
    if (s.kind == StepKind::StateReset) {
      epoch.clear();
      used = 0;
      continue;
    }
    if (s.kind != StepKind::Run) continue;
    const std::string id = s.experiment.id();
    if (i == 0 || plan.steps[i - 1].kind != StepKind::Pause ||
        plan.steps[i - 1].pause_us < plan.inter_run_pause_us) {
      ++c.missing_pauses;
      problem("run " + s.key() + " is not preceded by the inter-run pause");
    }
    if (profile && !std::holds_alternative<MixSpec>(s.experiment.pattern)) {
      const auto startup = profile->startup(baseline_from_string(s.experiment.baseline));
      if (s.io_ignore < startup) problem("run " + s.key() + " ignores fewer IOs than start-up");
    }
    for (const auto& r : all_ranges(s.experiment))
      if (r.end > plan.capacity) {
        ++c.capacity_violations;
        problem("run " + s.key() + " exceeds device capacity");
      }
    const bool seen = std::any_of(epoch.begin(), epoch.end(),
                                  [&](const auto& e) { return e.first == id; });
    if (seen) continue;
    const auto rs = sw_ranges(s.experiment);
    if (rs.empty()) continue;
    for (const auto& [other, ors] : epoch)
      if (overlaps_any(rs, ors)) {
        ++c.overlaps;
        problem("sequential-write ranges of " + id + " and " + other + " overlap");
      }
    used += bytes_of(rs);
    c.max_epoch_bytes = std::max(c.max_epoch_bytes, used);
    if (used > plan.capacity) {
      ++c.capacity_violations;
      problem("sequential-write space exceeds capacity at " + id);
    }
    epoch.emplace_back(id, rs);
  }
  return c;
}

void to_json(nlohmann::json& j, const PlanStep& s) {
  j = {{"kind", kind_name(s.kind)}};
  if (s.kind == StepKind::Pause) j["pause_us"] = s.pause_us;
  if (s.kind == StepKind::StateReset) j["reset_index"] = s.run_index;
  if (s.kind == StepKind::Run) {
    j["experiment"] = s.experiment;
    j["run_index"] = s.run_index;
    j["io_ignore"] = s.io_ignore;
  }
}

void from_json(const nlohmann::json& j, PlanStep& s) {
  s = PlanStep{};
  const auto k = j.at("kind").get<std::string>();
  if (k == "Pause") {
    s.kind = StepKind::Pause;
    s.pause_us = j.at("pause_us").get<double>();
  } else if (k == "StateReset") {
    s.kind = StepKind::StateReset;
    s.run_index = j.value("reset_index", std::uint64_t{0});
  } else if (k == "Run") {
    s.kind = StepKind::Run;
    s.experiment = j.at("experiment").get<ExperimentSpec>();
    s.run_index = j.at("run_index").get<std::uint64_t>();
    s.io_ignore = j.at("io_ignore").get<std::uint64_t>();
  } else {
    fail(ErrorKind::Spec, "unknown plan step kind: " + k);
  }
}

void to_json(nlohmann::json& j, const BenchmarkPlan& p) {
  j = {{"schema_version", kSchemaVersion},
       {"capacity", p.capacity},
       {"inter_run_pause_us", p.inter_run_pause_us},
       {"steps", p.steps}};
}

void from_json(const nlohmann::json& j, BenchmarkPlan& p) {
  if (j.value("schema_version", 0) != kSchemaVersion)
    fail(ErrorKind::Version, "benchmark plan has an unsupported schema version");
  p.capacity = j.at("capacity").get<std::uint64_t>();
  p.inter_run_pause_us = j.at("inter_run_pause_us").get<double>();
  p.steps = j.at("steps").get<std::vector<PlanStep>>();
}

Journal::Journal(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) done_.insert(line);
}

void Journal::record(const std::string& key) {
  std::ofstream out(path_, std::ios::app);
  out << key << '\n';
  out.flush();
  if (!out) fail(ErrorKind::Io, "cannot append to journal " + path_);
  done_.insert(key);
}

}  // namespace uflip
