#include <filesystem>
#include <fstream>

#include "uflip/campaign.hpp"
#include "uflip/raw_device.hpp"

namespace uflip {

namespace {

nlohmann::json thresholds_json(const Thresholds& t) {
  return {{"locality", t.locality}, {"partitions", t.partitions}, {"pause", t.pause}};
}

template <class T>
void take(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                const std::string& where) {
  require(j.is_object(), where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* n : known) ok = ok || k == n;
    if (!ok) fail(ErrorKind::Spec, "unknown key '" + k + "' in " + where);
  }
}

}  // namespace

void CampaignConfig::validate() const {
  const int selectors = !raw_path.empty() + !profile_path.empty() + !builtin.empty() +
                        inline_profile.has_value();
  require(selectors == 1, "exactly one device selector (raw, profile, builtin) is required");
  require(!output_dir.empty(), "output directory must be set");
  suite.validate();
  require(thresholds.locality > 0 && thresholds.partitions > 0 && thresholds.pause > 0,
          "thresholds must be positive");
  require(format_checkpoint_writes > 0, "format_checkpoint_writes must be positive");
  require(run_checkpoint_steps > 0, "run_checkpoint_steps must be positive");
  require(dispersion_threshold >= 0, "dispersion_threshold must be non-negative");
  if (inline_profile) inline_profile->validate();
}

std::string CampaignConfig::hash() const {
  nlohmann::json j = *this;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

void to_json(nlohmann::json& j, const CampaignConfig& c) {
  nlohmann::json dev = nlohmann::json::object();
  if (!c.raw_path.empty()) dev["raw"] = c.raw_path;
  if (!c.profile_path.empty()) dev["profile"] = c.profile_path;
  if (!c.builtin.empty()) dev["builtin"] = c.builtin;
  if (c.inline_profile) dev["sim"] = *c.inline_profile;
  nlohmann::json micros = nlohmann::json::array();
  for (Micro m : c.micros) micros.push_back(to_string(m));
  j = {{"schema_version", kSchemaVersion},
       {"device", dev},
       {"suite", c.suite},
       {"micros", micros},
       {"output_dir", c.output_dir},
       {"seed", c.seed},
       {"thresholds", thresholds_json(c.thresholds)},
       {"resume", c.resume},
       {"force", c.force},
       {"require_direct", c.require_direct},
       {"calibrate",
        {{"long_io_count", c.calibrate.long_io_count},
         {"io_size", c.calibrate.io_size},
         {"settle_us", c.calibrate.settle_us}}},
       {"pause",
        {{"io_size", c.pause.io_size},
         {"sr_batch", c.pause.sr_batch},
         {"rw_batch", c.pause.rw_batch},
         {"chunk", c.pause.chunk},
         {"k_sigma", c.pause.k_sigma},
         {"settle_us", c.pause.settle_us}}},
       {"format_checkpoint_writes", c.format_checkpoint_writes},
       {"run_checkpoint_steps", c.run_checkpoint_steps},
       {"dispersion_threshold", c.dispersion_threshold}};
}

void from_json(const nlohmann::json& j, CampaignConfig& c) {
  check_keys(j,
             {"schema_version", "device", "suite", "micros", "output_dir", "seed",
              "thresholds", "resume", "force", "require_direct", "calibrate", "pause",
              "format_checkpoint_writes", "run_checkpoint_steps", "dispersion_threshold"},
             "campaign config");
  if (j.value("schema_version", kSchemaVersion) != kSchemaVersion)
    fail(ErrorKind::Version, "campaign config has an unsupported schema version");
  c = CampaignConfig{};
  const auto& dev = j.at("device");
  check_keys(dev, {"raw", "profile", "builtin", "sim"}, "device");
  take(dev, "raw", c.raw_path);
  take(dev, "profile", c.profile_path);
  take(dev, "builtin", c.builtin);
  if (dev.contains("sim")) c.inline_profile = dev.at("sim").get<SimProfile>();
  take(j, "suite", c.suite);
  if (j.contains("micros"))
    for (const auto& m : j.at("micros")) c.micros.push_back(micro_from_string(m.get<std::string>()));
  take(j, "output_dir", c.output_dir);
  take(j, "seed", c.seed);
  if (j.contains("thresholds")) {
    const auto& t = j.at("thresholds");
    check_keys(t, {"locality", "partitions", "pause"}, "thresholds");
    take(t, "locality", c.thresholds.locality);
    take(t, "partitions", c.thresholds.partitions);
    take(t, "pause", c.thresholds.pause);
  }
  take(j, "resume", c.resume);
  take(j, "force", c.force);
  take(j, "require_direct", c.require_direct);
  if (j.contains("calibrate")) {
    const auto& k = j.at("calibrate");
    check_keys(k, {"long_io_count", "io_size", "settle_us"}, "calibrate");
    take(k, "long_io_count", c.calibrate.long_io_count);
    take(k, "io_size", c.calibrate.io_size);
    take(k, "settle_us", c.calibrate.settle_us);
  }
  if (j.contains("pause")) {
    const auto& k = j.at("pause");
    check_keys(k, {"io_size", "sr_batch", "rw_batch", "chunk", "k_sigma", "settle_us"}, "pause");
    take(k, "io_size", c.pause.io_size);
    take(k, "sr_batch", c.pause.sr_batch);
    take(k, "rw_batch", c.pause.rw_batch);
    take(k, "chunk", c.pause.chunk);
    take(k, "k_sigma", c.pause.k_sigma);
    take(k, "settle_us", c.pause.settle_us);
  }
  take(j, "format_checkpoint_writes", c.format_checkpoint_writes);
  take(j, "run_checkpoint_steps", c.run_checkpoint_steps);
  take(j, "dispersion_threshold", c.dispersion_threshold);
  c.validate();
}

CampaignConfig load_campaign_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Spec, "cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Spec, "config " + path + ": " + e.what());
  }
  CampaignConfig c = j.get<CampaignConfig>();
  // Relative paths inside the config are relative to the config file.
  const auto base = std::filesystem::path(path).parent_path();
  auto rebase = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).string();
  };
  rebase(c.profile_path);
  rebase(c.output_dir);
  return c;
}

SimProfile campaign_sim_profile(const CampaignConfig& cfg) {
  require(cfg.simulated(), "campaign targets a raw device, not a simulator");
  if (cfg.inline_profile) return *cfg.inline_profile;
  if (!cfg.builtin.empty()) return builtin_profile(cfg.builtin);
  std::ifstream in(cfg.profile_path);
  if (!in) fail(ErrorKind::Spec, "cannot open simulator profile " + cfg.profile_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Spec, "simulator profile " + cfg.profile_path + ": " + e.what());
  }
  SimProfile p = j.get<SimProfile>();
  p.validate();
  return p;
}

std::unique_ptr<BlockDevice> open_device(const CampaignConfig& cfg, bool writable) {
  if (!cfg.simulated()) {
    RawDevice::Options o;
    o.require_direct = cfg.require_direct;
    o.writable = writable;
    return std::make_unique<RawDevice>(cfg.raw_path, o);
  }
  auto dev = std::make_unique<SimDevice>(campaign_sim_profile(cfg));
  const CampaignPaths paths{cfg.output_dir};
  std::ifstream in(paths.sim_state(), std::ios::binary);
  if (in) {
    std::vector<std::uint8_t> image((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    dev->restore_state(image);
  }
  return dev;
}

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->kind()) {
      case ErrorKind::Io: return 3;
      case ErrorKind::Spec:
      case ErrorKind::Schedule:
      case ErrorKind::Version:
      case ErrorKind::Analysis:
      case ErrorKind::Unsupported: return 2;
    }
  }
  if (dynamic_cast<const nlohmann::json::exception*>(&e)) return 2;
  return 1;
}

}  // namespace uflip
