#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "uflip/runner.hpp"

namespace uflip {

namespace {

constexpr const char* kTraceHeader =
    "index,actual_submit_us,response_time_us,lba,size,mode,worker";

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == '/' || c == ' ') c = '_';
  return s;
}

}  // namespace

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << kTraceHeader << '\n';
  char buf[160];
  for (const auto& r : trace.records) {
    std::snprintf(buf, sizeof buf, "%llu,%.3f,%.3f,%llu,%llu,%s,%u\n",
                  static_cast<unsigned long long>(r.index), r.actual_submit_us,
                  r.response_time_us, static_cast<unsigned long long>(r.lba),
                  static_cast<unsigned long long>(r.size), to_string(r.mode),
                  static_cast<unsigned>(r.worker));
    out << buf;
  }
}

Trace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader)
    fail(ErrorKind::Version, "trace CSV has an unexpected header");
  Trace t;
  std::uint64_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    TraceRecord r;
    unsigned long long index = 0, lba = 0, size = 0;
    char mode = 0;
    unsigned worker = 0;
    if (std::sscanf(line.c_str(), "%llu,%lf,%lf,%llu,%llu,%c,%u", &index,
                    &r.actual_submit_us, &r.response_time_us, &lba, &size, &mode,
                    &worker) != 7 ||
        (mode != 'R' && mode != 'W'))
      fail(ErrorKind::Version, "malformed trace CSV line " + std::to_string(lineno));
    r.index = index;
    r.lba = lba;
    r.size = size;
    r.mode = mode == 'R' ? Mode::Read : Mode::Write;
    r.worker = worker;
    t.records.push_back(r);
  }
  return t;
}

std::string trace_path(const std::string& device, const ExperimentSpec& exp,
                       std::uint64_t run_index) {
  std::ostringstream p;
  p << sanitize(device) << '/' << to_string(exp.micro) << '/' << exp.baseline << '/'
    << exp.varying.name << '=' << exp.varying.value << "/run" << run_index << ".csv";
  return p.str();
}

void to_json(nlohmann::json& j, const RunStats& s) {
  j = nlohmann::json{{"min", s.min},
                     {"max", s.max},
                     {"mean", s.mean},
                     {"stddev", s.stddev},
                     {"count_ignored", s.count_ignored},
                     {"count_kept", s.count_kept}};
}

void from_json(const nlohmann::json& j, RunStats& s) {
  j.at("min").get_to(s.min);
  j.at("max").get_to(s.max);
  j.at("mean").get_to(s.mean);
  j.at("stddev").get_to(s.stddev);
  j.at("count_ignored").get_to(s.count_ignored);
  j.at("count_kept").get_to(s.count_kept);
}

void to_json(nlohmann::json& j, const TraceMeta& m) {
  j = nlohmann::json{{"experiment_id", m.experiment_id},
                     {"run_index", m.run_index},
                     {"seed", m.seed},
                     {"device_id", m.device_id},
                     {"wall_clock_start", m.wall_clock_start},
                     {"simulated_clock", m.simulated_clock},
                     {"clock_warning", m.clock_warning},
                     {"error", m.error}};
}

void from_json(const nlohmann::json& j, TraceMeta& m) {
  j.at("experiment_id").get_to(m.experiment_id);
  j.at("run_index").get_to(m.run_index);
  j.at("seed").get_to(m.seed);
  j.at("device_id").get_to(m.device_id);
  m.wall_clock_start = j.value("wall_clock_start", "");
  m.simulated_clock = j.value("simulated_clock", false);
  m.clock_warning = j.value("clock_warning", false);
  m.error = j.value("error", "");
}

}  // namespace uflip
