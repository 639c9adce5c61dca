#include "uflip/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <latch>
#include <thread>

namespace uflip {

namespace {

using Clock = std::chrono::steady_clock;

struct Stream {
  Schedule requests;
  std::vector<double> gaps;  // idle before request i
  std::uint64_t seed = 0;
};

Stream stream_of(const PatternSpec& spec) {
  Stream s;
  s.requests = generate_schedule(spec);
  s.gaps.resize(s.requests.size());
  for (std::uint64_t i = 0; i < s.gaps.size(); ++i) s.gaps[i] = gap_before(spec, i);
  s.seed = spec.seed;
  return s;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

TraceMeta make_meta(const BlockDevice& dev, const RunContext& ctx, std::uint64_t seed) {
  TraceMeta m;
  m.experiment_id = ctx.experiment_id;
  m.run_index = ctx.run_index;
  m.seed = seed;
  m.device_id = dev.id();
  m.simulated_clock = dev.simulated();
  if (!dev.simulated()) {
    m.wall_clock_start = utc_now();
    using Period = Clock::period;
    m.clock_warning = static_cast<double>(Period::num) / Period::den > 1e-6;
  }
  return m;
}

// Pseudo-random write payload derived from the run seed, so devices that
// compress or deduplicate see realistic data.
std::vector<std::byte> payload_for(std::uint64_t seed, const IORequest& r) {
  std::vector<std::byte> buf(r.size);
  const std::uint64_t base = derive_seed(seed, r.index);
  for (std::uint64_t w = 0; w * 8 < r.size; ++w) {
    const std::uint64_t v = mix64(base + w);
    for (std::uint64_t b = 0; b < 8 && w * 8 + b < r.size; ++b)
      buf[w * 8 + b] = static_cast<std::byte>(v >> (8 * b));
  }
  return buf;
}

double issue(BlockDevice& dev, const IORequest& r, std::uint64_t seed) {
  if (r.mode == Mode::Read) return dev.read(r.lba, r.size);
  if (dev.simulated()) return dev.write(r.lba, r.size);
  const auto payload = payload_for(seed, r);
  return dev.write(r.lba, r.size, payload);
}

std::string io_error(const IORequest& r, const std::exception& e) {
  return "IO error at request " + std::to_string(r.index) + ": " + e.what();
}

// One worker, one outstanding IO.
void run_stream(BlockDevice& dev, const Stream& s, std::uint32_t worker,
                Trace& trace) {
  if (dev.simulated()) {
    double now = 0;
    for (std::uint64_t i = 0; i < s.requests.size(); ++i) {
      const IORequest& r = s.requests[i];
      if (s.gaps[i] > 0) dev.idle(s.gaps[i]);
      const double submit = now + s.gaps[i];
      double rt = 0;
      try {
        rt = issue(dev, r, s.seed);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Io) throw;
        trace.meta.error = io_error(r, e);
        return;
      }
      trace.records.push_back({r.index, submit, rt, r.lba, r.size, r.mode, worker});
      now = submit + rt;
    }
    return;
  }
  const auto start = Clock::now();
  auto rel = [&] {
    return std::chrono::duration<double, std::micro>(Clock::now() - start).count();
  };
  for (std::uint64_t i = 0; i < s.requests.size(); ++i) {
    const IORequest& r = s.requests[i];
    if (s.gaps[i] > 0) dev.idle(s.gaps[i]);
    const double submit = rel();
    double rt = 0;
    try {
      rt = issue(dev, r, s.seed);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Io) throw;
      trace.meta.error = io_error(r, e);
      return;
    }
    trace.records.push_back({r.index, submit, rt, r.lba, r.size, r.mode, worker});
  }
}

// Simulated parallel workers on a single server with a total order.
void run_parallel_sim(BlockDevice& dev, const std::vector<Stream>& streams,
                      Trace& trace) {
  const std::size_t n = streams.size();
  std::vector<std::size_t> next(n, 0);
  std::vector<double> ready(n, 0);
  for (std::size_t w = 0; w < n; ++w)
    if (!streams[w].gaps.empty()) ready[w] = streams[w].gaps[0];
  double device_free = 0;
  for (;;) {
    std::size_t pick = n;
    for (std::size_t w = 0; w < n; ++w) {
      if (next[w] == streams[w].requests.size()) continue;
      if (pick == n || ready[w] < ready[pick]) pick = w;
    }
    if (pick == n) break;
    const Stream& s = streams[pick];
    const IORequest& r = s.requests[next[pick]];
    const double submit = ready[pick];
    const double start = std::max(submit, device_free);
    if (start > device_free) dev.idle(start - device_free);
    double service = 0;
    try {
      service = issue(dev, r, s.seed);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Io) throw;
      trace.meta.error = io_error(r, e);
      return;
    }
    const double done = start + service;
    device_free = done;
    trace.records.push_back({r.index, submit, done - submit, r.lba, r.size, r.mode,
                             static_cast<std::uint32_t>(pick)});
    ++next[pick];
    if (next[pick] < s.requests.size()) ready[pick] = done + s.gaps[next[pick]];
  }
}

void run_parallel_raw(BlockDevice& dev, const std::vector<Stream>& streams,
                      Trace& trace) {
  std::vector<Trace> parts(streams.size());
  std::latch gate(static_cast<std::ptrdiff_t>(streams.size()));
  const auto start = Clock::now();
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < streams.size(); ++w) {
    workers.emplace_back([&, w] {
      gate.arrive_and_wait();
      const double offset =
          std::chrono::duration<double, std::micro>(Clock::now() - start).count();
      run_stream(dev, streams[w], static_cast<std::uint32_t>(w), parts[w]);
      for (auto& rec : parts[w].records) rec.actual_submit_us += offset;
    });
  }
  for (auto& t : workers) t.join();
  for (auto& p : parts) {
    trace.records.insert(trace.records.end(), p.records.begin(), p.records.end());
    if (trace.meta.error.empty() && !p.meta.error.empty()) trace.meta.error = p.meta.error;
  }
  std::stable_sort(trace.records.begin(), trace.records.end(),
                   [](const TraceRecord& a, const TraceRecord& b) {
                     if (a.actual_submit_us != b.actual_submit_us)
                       return a.actual_submit_us < b.actual_submit_us;
                     return a.worker < b.worker;
                   });
}

}  // namespace

std::vector<double> Trace::response_times() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.response_time_us);
  return out;
}

Trace execute_run(BlockDevice& dev, const PatternSpec& spec, const RunContext& ctx) {
  validate(spec, dev.capacity());
  Trace trace;
  trace.meta = make_meta(dev, ctx, spec.seed);
  const Stream s = stream_of(spec);
  trace.records.reserve(s.requests.size());
  run_stream(dev, s, 0, trace);
  return trace;
}

Trace execute_run(BlockDevice& dev, const MixSpec& mix, const RunContext& ctx) {
  validate(mix, dev.capacity());
  Trace trace;
  trace.meta = make_meta(dev, ctx, mix.first.seed);
  Stream s;
  s.requests = interleave_mix(mix);
  s.gaps.assign(s.requests.size(), 0.0);
  s.seed = derive_seed(mix.first.seed, mix.second.seed);
  trace.records.reserve(s.requests.size());
  run_stream(dev, s, 0, trace);
  return trace;
}

Trace execute_run(BlockDevice& dev, const ParallelSpec& par, const RunContext& ctx) {
  validate(par, dev.capacity());
  Trace trace;
  trace.meta = make_meta(dev, ctx, par.base.seed);
  std::vector<Stream> streams;
  for (const auto& sub : split_parallel(par)) streams.push_back(stream_of(sub));
  if (dev.simulated())
    run_parallel_sim(dev, streams, trace);
  else
    run_parallel_raw(dev, streams, trace);
  for (std::uint64_t i = 0; i < trace.records.size(); ++i) trace.records[i].index = i;
  return trace;
}

Trace execute_run(BlockDevice& dev, const PatternVariant& pattern, const RunContext& ctx) {
  return std::visit([&](const auto& p) { return execute_run(dev, p, ctx); }, pattern);
}

RunStats summarize(std::span<const double> rts, std::uint64_t io_ignore) {
  if (io_ignore >= rts.size())
    fail(ErrorKind::Analysis, "io_ignore (" + std::to_string(io_ignore) +
                                  ") leaves no IO to summarize out of " +
                                  std::to_string(rts.size()));
  RunStats s;
  s.count_ignored = io_ignore;
  s.count_kept = rts.size() - io_ignore;
  const auto kept = rts.subspan(io_ignore);
  s.min = *std::min_element(kept.begin(), kept.end());
  s.max = *std::max_element(kept.begin(), kept.end());
  double sum = 0;
  for (double v : kept) sum += v;
  s.mean = sum / static_cast<double>(kept.size());
  double sq = 0;
  for (double v : kept) sq += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(kept.size()));
  // Rounding can push the mean a hair outside [min, max] on constant data.
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

RunStats summarize(const Trace& trace, std::uint64_t io_ignore) {
  const auto rts = trace.response_times();
  return summarize(rts, io_ignore);
}

std::vector<double> running_average(std::span<const double> rts, std::uint64_t from) {
  std::vector<double> out;
  double sum = 0;
  for (std::uint64_t i = from; i < rts.size(); ++i) {
    sum += rts[i];
    out.push_back(sum / static_cast<double>(i - from + 1));
  }
  return out;
}

double dispersion(const std::vector<RunStats>& runs) {
  if (runs.size() < 2) return 0;
  double lo = runs[0].mean, hi = runs[0].mean;
  for (const auto& r : runs) {
    lo = std::min(lo, r.mean);
    hi = std::max(hi, r.mean);
  }
  return lo > 0 ? (hi - lo) / lo : 0;
}

RunStats average(const std::vector<RunStats>& runs) {
  require(!runs.empty(), "cannot average zero runs");
  RunStats a;
  const double n = static_cast<double>(runs.size());
  for (const auto& r : runs) {
    a.min += r.min / n;
    a.max += r.max / n;
    a.mean += r.mean / n;
    a.stddev += r.stddev / n;
  }
  a.count_ignored = runs[0].count_ignored;
  a.count_kept = runs[0].count_kept;
  if (runs.size() == 1) a = runs[0];
  return a;
}

ExperimentResult execute_experiment(BlockDevice& dev, const ExperimentSpec& exp,
                                    const ExperimentOptions& opts) {
  ExperimentResult res;
  res.experiment_id = exp.id();
  for (std::uint64_t k = 0; k < exp.repetitions; ++k) {
    if (k > 0 && opts.pause_between_runs_us > 0) dev.idle(opts.pause_between_runs_us);
    Trace t = execute_run(dev, exp.pattern, RunContext{res.experiment_id, k});
    if (t.failed()) {
      const std::string err = t.meta.error;
      if (opts.keep_traces) res.traces.push_back(std::move(t));
      fail(ErrorKind::Io, res.experiment_id + " run " + std::to_string(k) + ": " + err);
    }
    res.runs.push_back(summarize(t, opts.io_ignore));
    if (opts.keep_traces) res.traces.push_back(std::move(t));
  }
  res.averaged = average(res.runs);
  res.dispersion = dispersion(res.runs);
  res.dispersion_flag = res.dispersion > opts.dispersion_threshold;
  return res;
}

}  // namespace uflip
