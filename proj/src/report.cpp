#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "uflip/analysis.hpp"

namespace uflip {

namespace {

constexpr const char* kBaselineNames[] = {"SR", "RR", "SW", "RW"};

struct Index {
  // micro -> baseline -> value -> mean
  std::map<Micro, std::map<std::string, std::map<std::int64_t, double>>> m;

  explicit Index(const std::vector<ExperimentOutcome>& results) {
    for (const auto& r : results)
      m[r.spec.micro][r.spec.baseline][r.spec.varying.value] = r.stats.mean;
  }
  const std::map<std::int64_t, double>* sweep(Micro micro, const std::string& b) const {
    auto it = m.find(micro);
    if (it == m.end()) return nullptr;
    auto jt = it->second.find(b);
    return jt == it->second.end() ? nullptr : &jt->second;
  }
  std::optional<double> at(Micro micro, const std::string& b, std::int64_t v) const {
    const auto* s = sweep(micro, b);
    if (!s) return std::nullopt;
    auto it = s->find(v);
    if (it == s->end()) return std::nullopt;
    return it->second;
  }
};

std::vector<SweepPoint> points(const std::map<std::int64_t, double>& s) {
  std::vector<SweepPoint> out;
  for (const auto& [x, mean] : s)
    if (x >= 0) out.push_back({static_cast<std::uint64_t>(x), mean});
  return out;
}

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

SummaryReport build_summary(const std::vector<ExperimentOutcome>& results,
                            const SuiteConfig& cfg, const std::string& device,
                            const Thresholds& th) {
  SummaryReport r;
  r.device = device;
  const Index idx(results);
  const auto io = static_cast<std::int64_t>(cfg.base_io_size);
  std::map<std::string, std::optional<double>> base_us;
  for (const char* b : kBaselineNames) {
    base_us[b] = idx.at(Micro::Granularity, b, io);
    r.baseline_ms[b] = base_us[b] ? std::optional<double>(*base_us[b] / 1000.0)
                                  : std::nullopt;
  }
  const auto sw = base_us["SW"];
  const auto rw = base_us["RW"];
  if (sw && rw && *sw > 0) r.rw_sw_ratio = *rw / *sw;

  if (const auto* pause = idx.sweep(Micro::Pause, "RW"); pause && sw) {
    for (const auto& [p, mean] : *pause) {
      if (mean <= th.pause * *sw) {
        r.pause_effect_us = static_cast<double>(p);
        break;
      }
    }
  }
  if (const auto* loc = idx.sweep(Micro::Locality, "RW"); loc && sw)
    r.locality = locality_area(points(*loc), *sw, cfg.base_io_size, th.locality);
  if (const auto* part = idx.sweep(Micro::Partitioning, "SW"); part && sw)
    r.partitions = partition_threshold(points(*part), *sw, th.partitions);
  if (const auto* ord = idx.sweep(Micro::Order, "SW"); ord && sw)
    r.order = order_ratios(*ord, *sw, rw, cfg.base_io_size);

  for (const char* b : kBaselineNames) {
    const auto* al = idx.sweep(Micro::Alignment, b);
    if (!al) continue;
    auto aligned = al->find(0);
    if (aligned == al->end() || aligned->second <= 0) continue;
    double worst = 0;
    for (const auto& [shift, mean] : *al) worst = std::max(worst, mean / aligned->second);
    r.alignment_penalty[b] = worst;
  }

  if (auto it = idx.m.find(Micro::Mix); it != idx.m.end()) {
    for (const auto& [label, sweep] : it->second) {
      const auto plus = label.find('+');
      if (plus == std::string::npos) continue;
      const auto m1 = base_us[label.substr(0, plus)];
      const auto m2 = base_us[label.substr(plus + 1)];
      if (!m1 || !m2) continue;
      for (const auto& [ratio, mean] : sweep) {
        const double k = static_cast<double>(ratio);
        const double blend = (k * *m1 + *m2) / (k + 1);
        if (blend > 0)
          r.mix_deviation[label + "/Ratio=" + std::to_string(ratio)] = mean / blend;
      }
    }
  }

  for (const char* b : kBaselineNames) {
    const auto* par = idx.sweep(Micro::Parallelism, b);
    if (!par) continue;
    auto one = par->find(1);
    if (one == par->end() || one->second <= 0) continue;
    for (const auto& [degree, mean] : *par)
      r.parallel_degradation[b][degree] = mean / one->second;
  }
  return r;
}

void to_json(nlohmann::json& j, const AreaResult& a) {
  j = {{"value", a.value ? nlohmann::json(*a.value) : nlohmann::json(nullptr)},
       {"factor", a.factor},
       {"partial", a.partial}};
}

void to_json(nlohmann::json& j, const OrderRatios& o) {
  nlohmann::json by = nlohmann::json::object();
  for (const auto& [incr, v] : o.by_incr) by[std::to_string(incr)] = v;
  j = {{"reverse", opt(o.reverse)},
       {"in_place", opt(o.in_place)},
       {"large_incr", opt(o.large_incr)},
       {"by_incr", by}};
}

void to_json(nlohmann::json& j, const SummaryReport& r) {
  nlohmann::json base = nlohmann::json::object();
  for (const auto& [b, v] : r.baseline_ms) base[b] = opt(v);
  nlohmann::json par = nlohmann::json::object();
  for (const auto& [b, m] : r.parallel_degradation)
    for (const auto& [d, v] : m) par[b][std::to_string(d)] = v;
  j = {{"schema_version", kSchemaVersion},
       {"device", r.device},
       {"baseline_ms", base},
       {"rw_sw_ratio", opt(r.rw_sw_ratio)},
       {"pause_effect_us", opt(r.pause_effect_us)},
       {"locality", r.locality ? nlohmann::json(*r.locality) : nlohmann::json(nullptr)},
       {"partitions",
        r.partitions ? nlohmann::json(*r.partitions) : nlohmann::json(nullptr)},
       {"order", r.order ? nlohmann::json(*r.order) : nlohmann::json(nullptr)},
       {"alignment_penalty", r.alignment_penalty},
       {"mix_deviation", r.mix_deviation},
       {"parallel_degradation", par}};
}

std::string format_summary_table(const SummaryReport& r) {
  auto ms = [](const std::optional<double>& v) {
    return v ? fmt("%.2f", *v) : std::string("-");
  };
  auto factor = [](const std::optional<double>& v) {
    return v ? "x" + fmt("%.2f", *v) : std::string("-");
  };
  auto area = [](const std::optional<AreaResult>& a, bool bytes) {
    if (!a) return std::string("-");
    if (!a->value) return std::string("No");
    const std::string v = bytes ? fmt("%.2f", static_cast<double>(*a->value) / MiB)
                                : std::to_string(*a->value);
    return v + " (x" + fmt("%.2f", a->factor) + ")";
  };
  const std::vector<std::pair<std::string, std::string>> cols = {
      {"Device", r.device},
      {"SR", ms(r.baseline_ms.count("SR") ? r.baseline_ms.at("SR") : std::nullopt)},
      {"RR", ms(r.baseline_ms.count("RR") ? r.baseline_ms.at("RR") : std::nullopt)},
      {"SW", ms(r.baseline_ms.count("SW") ? r.baseline_ms.at("SW") : std::nullopt)},
      {"RW", ms(r.baseline_ms.count("RW") ? r.baseline_ms.at("RW") : std::nullopt)},
      {"Pause(ms)", r.pause_effect_us ? fmt("%.1f", *r.pause_effect_us / 1000) : "-"},
      {"Locality RW (MB)", area(r.locality, true)},
      {"Partitions", area(r.partitions, false)},
      {"Reverse", factor(r.order ? r.order->reverse : std::nullopt)},
      {"In-Place", factor(r.order ? r.order->in_place : std::nullopt)},
      {"Large Incr", factor(r.order ? r.order->large_incr : std::nullopt)},
  };
  std::string head, row;
  for (const auto& [name, value] : cols) {
    const std::size_t w = std::max(name.size(), value.size()) + 2;
    head += name + std::string(w - name.size(), ' ');
    row += value + std::string(w - value.size(), ' ');
  }
  while (!head.empty() && head.back() == ' ') head.pop_back();
  while (!row.empty() && row.back() == ' ') row.pop_back();
  std::string out = head + "\n" + row + "\n";
  if (r.rw_sw_ratio) out += "RW/SW cost ratio: " + fmt("%.2f", *r.rw_sw_ratio) + "\n";
  for (const auto& [b, v] : r.alignment_penalty)
    out += "Alignment penalty " + b + ": x" + fmt("%.2f", v) + "\n";
  return out;
}

void emit_plot_data(const std::vector<ExperimentOutcome>& results, PlotKind kind,
                    const std::string& path) {
  Micro micro = Micro::Granularity;
  std::string x_name, x_unit, y_name = "mean response time", y_unit = "us";
  const char* kind_name = "granularity";
  switch (kind) {
    case PlotKind::Granularity:
      micro = Micro::Granularity, x_name = "io_size", x_unit = "bytes";
      break;
    case PlotKind::Locality:
      micro = Micro::Locality, x_name = "target_size", x_unit = "bytes";
      y_name = "relative response time", y_unit = "ratio to sequential baseline";
      kind_name = "locality";
      break;
    case PlotKind::Partitioning:
      micro = Micro::Partitioning, x_name = "partitions", x_unit = "count";
      kind_name = "partitioning";
      break;
    case PlotKind::Order:
      micro = Micro::Order, x_name = "incr", x_unit = "io_size multiples";
      kind_name = "order";
      break;
    case PlotKind::Phases:
      fail(ErrorKind::Spec, "phase plots are emitted from a trace");
  }
  const Index idx(results);
  std::map<std::int64_t, std::map<std::string, double>> rows;
  std::vector<std::string> series;
  for (const char* b : kBaselineNames) {
    const auto* s = idx.sweep(micro, b);
    if (!s) continue;
    series.push_back(b);
    std::optional<double> ref;
    if (kind == PlotKind::Locality) {
      const bool read = baseline_mode(baseline_from_string(b)) == Mode::Read;
      for (const auto& r : results) {
        if (r.spec.micro != Micro::Locality || r.spec.baseline != b) continue;
        const auto io = static_cast<std::int64_t>(components(r.spec).front()->io_size);
        ref = idx.at(Micro::Granularity, read ? "SR" : "SW", io);
        break;
      }
    }
    for (const auto& [x, mean] : *s) rows[x][b] = ref && *ref > 0 ? mean / *ref : mean;
  }

  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << "# axis: x=" << x_name << " (" << x_unit << "), y=" << y_name << " ("
      << y_unit << ")\n";
  out << x_name;
  for (const auto& s : series) out << '\t' << s;
  out << '\n';
  for (const auto& [x, vals] : rows) {
    out << x;
    for (const auto& s : series) {
      auto it = vals.find(s);
      out << '\t' << (it == vals.end() ? std::string("nan") : fmt("%.3f", it->second));
    }
    out << '\n';
  }
  std::ofstream meta(path + ".meta.json");
  meta << nlohmann::json{{"kind", kind_name},
                         {"x", {{"name", x_name}, {"unit", x_unit}}},
                         {"y", {{"name", y_name}, {"unit", y_unit}}},
                         {"series", series}}
              .dump(2)
       << '\n';
}

void emit_phase_plot(std::span<const double> rts, std::uint64_t startup,
                     const std::string& path) {
  const auto all = running_average(rts, 0);
  const auto running = running_average(rts, std::min<std::uint64_t>(startup, rts.size()));
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << "# axis: x=io index (count), y=response time (us)\n";
  out << "index\trt\tavg_with_startup\tavg_without_startup\n";
  for (std::uint64_t i = 0; i < rts.size(); ++i) {
    out << i << '\t' << fmt("%.3f", rts[i]) << '\t' << fmt("%.3f", all[i]) << '\t'
        << (i >= startup ? fmt("%.3f", running[i - startup]) : std::string("nan"))
        << '\n';
  }
  std::ofstream meta(path + ".meta.json");
  meta << nlohmann::json{{"kind", "phases"},
                         {"startup", startup},
                         {"x", {{"name", "io index"}, {"unit", "count"}}},
                         {"y", {{"name", "response time"}, {"unit", "us"}}},
                         {"series", {"rt", "avg_with_startup", "avg_without_startup"}}}
              .dump(2)
       << '\n';
}

}  // namespace uflip
