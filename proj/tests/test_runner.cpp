#include <gtest/gtest.h>

#include <sstream>

#include "uflip/runner.hpp"
#include "uflip/sim_device.hpp"

using namespace uflip;

namespace {

// Constant-cost device with a virtual clock: reads 100 us, writes 300 us.
class FixedDevice : public BlockDevice {
 public:
  std::uint64_t capacity() const override { return 64 * MiB; }
  std::string id() const override { return "fixed"; }
  bool simulated() const override { return true; }
  double read(std::uint64_t lba, std::uint64_t size) override {
    check_range(lba, size);
    ++reads;
    return 100;
  }
  double write(std::uint64_t lba, std::uint64_t size, std::span<const std::byte>) override {
    check_range(lba, size);
    ++writes;
    return 300;
  }
  void idle(double us) override { idled += us; }
  std::uint64_t reads = 0, writes = 0;
  double idled = 0;
};

PatternSpec base(Mode mode, std::uint64_t count) {
  PatternSpec s;
  s.mode = mode;
  s.io_size = 32 * KiB;
  s.target_size = 16 * MiB;
  s.io_count = count;
  return s;
}

// Synthetic trace: `cheap` IOs at 400 us, then alternating 400 / 27000 us.
std::vector<double> two_phase(std::uint64_t cheap, std::uint64_t n) {
  std::vector<double> v;
  for (std::uint64_t i = 0; i < n; ++i)
    v.push_back(i < cheap ? 400.0 : ((i - cheap) % 2 == 0 ? 400.0 : 27000.0));
  return v;
}

}  // namespace

TEST(Run, ConsecutiveSubmitsOnCompletion) {
  FixedDevice d;
  const auto t = execute_run(d, base(Mode::Write, 10));
  ASSERT_EQ(t.records.size(), 10u);
  for (std::size_t i = 1; i < t.records.size(); ++i)
    EXPECT_DOUBLE_EQ(t.records[i].actual_submit_us,
                     t.records[i - 1].actual_submit_us + t.records[i - 1].response_time_us);
  EXPECT_TRUE(t.meta.simulated_clock);
}

TEST(Run, PauseGapIsHonoured) {
  FixedDevice d;
  auto s = base(Mode::Read, 20);
  s.timing = Timing::pause(100000);
  const auto t = execute_run(d, s);
  for (std::size_t i = 1; i < t.records.size(); ++i) {
    const double done = t.records[i - 1].actual_submit_us + t.records[i - 1].response_time_us;
    EXPECT_GE(t.records[i].actual_submit_us - done, 100000 - 1e-6);
  }
  EXPECT_DOUBLE_EQ(d.idled, 19 * 100000.0);
}

TEST(Run, BurstIdlesOnlyAtGroupBoundaries) {
  FixedDevice d;
  auto s = base(Mode::Read, 40);
  s.timing = Timing::burst(5000, 10);
  execute_run(d, s);
  EXPECT_DOUBLE_EQ(d.idled, 3 * 5000.0);
}

TEST(Run, MixIssuesBothModes) {
  FixedDevice d;
  MixSpec m;
  m.first = base(Mode::Read, 12);
  m.second = base(Mode::Write, 4);
  m.second.target_offset = 32 * MiB;
  m.ratio = 3;
  const auto t = execute_run(d, m);
  EXPECT_EQ(t.records.size(), 16u);
  EXPECT_EQ(d.reads, 12u);
  EXPECT_EQ(d.writes, 4u);
  EXPECT_EQ(t.records[3].mode, Mode::Write);
}

TEST(Run, ParallelSharesOneTimeline) {
  FixedDevice d;
  ParallelSpec p;
  p.base = base(Mode::Write, 8);
  p.parallel_degree = 2;
  const auto t = execute_run(d, p);
  ASSERT_EQ(t.records.size(), 8u);
  // Both workers submit at 0; worker 0 is served first, worker 1 queues.
  EXPECT_EQ(t.records[0].worker, 0u);
  EXPECT_EQ(t.records[1].worker, 1u);
  EXPECT_DOUBLE_EQ(t.records[0].response_time_us, 300);
  EXPECT_DOUBLE_EQ(t.records[1].response_time_us, 600);
  for (std::size_t i = 0; i < t.records.size(); ++i) EXPECT_EQ(t.records[i].index, i);
}

TEST(Run, SimulatorRunsAreDeterministic) {
  SimProfile p = builtin_profile("highend-ssd");
  p.capacity = 32 * MiB;
  SimDevice a(p), b(p);
  auto s = base(Mode::Write, 500);
  s.location = Location::random();
  s.seed = 9;
  const auto ta = execute_run(a, s);
  const auto tb = execute_run(b, s);
  EXPECT_EQ(ta.records, tb.records);
}

TEST(Stats, PopulationStddev) {
  const std::vector<double> v = {2, 4, 4, 4, 5, 5, 7, 9};
  const auto s = summarize(v, 0);
  EXPECT_DOUBLE_EQ(s.mean, 5);
  EXPECT_DOUBLE_EQ(s.stddev, 2);
  EXPECT_DOUBLE_EQ(s.min, 2);
  EXPECT_DOUBLE_EQ(s.max, 9);
  EXPECT_EQ(s.count_kept, 8u);
}

TEST(Stats, IgnoringEverythingIsAnError) {
  const std::vector<double> v = {1, 2, 3};
  try {
    summarize(v, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Analysis);
  }
}

TEST(Stats, StartupBiasOnTwoPhaseTrace) {
  const auto v = two_phase(128, 512);
  const double running = (400.0 + 27000.0) / 2;
  const double biased = summarize(v, 0).mean;
  const double gap = (running - biased) / running;
  EXPECT_GE(gap, 0.20);
  EXPECT_LE(gap, 0.30);
  const double clean = summarize(v, 128).mean;
  EXPECT_LT(std::abs(clean - running) / running, 0.02);
}

TEST(Stats, DispersionOfRunMeans) {
  std::vector<RunStats> runs(3);
  runs[0].mean = 1000;
  runs[1].mean = 1040;
  runs[2].mean = 1080;
  EXPECT_NEAR(dispersion(runs), 0.08, 1e-12);
  EXPECT_DOUBLE_EQ(average(runs).mean, 1040);
}

TEST(Stats, RunningAverage) {
  const std::vector<double> v = {1, 3, 5, 7};
  EXPECT_EQ(running_average(v), (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(running_average(v, 2), (std::vector<double>{5, 6}));
}

TEST(Experiment, FlagsDispersionAndKeepsTraces) {
  FixedDevice d;
  ExperimentSpec e;
  e.pattern = base(Mode::Read, 50);
  e.repetitions = 3;
  ExperimentOptions o;
  o.io_ignore = 5;
  o.pause_between_runs_us = 1e6;
  const auto r = execute_experiment(d, e, o);
  EXPECT_EQ(r.runs.size(), 3u);
  EXPECT_EQ(r.traces.size(), 3u);
  EXPECT_DOUBLE_EQ(r.dispersion, 0);
  EXPECT_FALSE(r.dispersion_flag);
  EXPECT_EQ(r.averaged.count_kept, 45u);
}

TEST(TraceCsv, RoundTrip) {
  FixedDevice d;
  auto s = base(Mode::Write, 7);
  s.location = Location::random();
  const auto t = execute_run(d, s);
  std::stringstream io;
  write_trace_csv(io, t);
  const std::string text = io.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "index,actual_submit_us,response_time_us,lba,size,mode,worker");
  const auto back = read_trace_csv(io);
  EXPECT_EQ(back.records, t.records);
}

TEST(TraceCsv, PathScheme) {
  ExperimentSpec e;
  e.micro = Micro::Locality;
  e.baseline = "RW";
  e.varying = {"TargetSize", 4194304};
  EXPECT_EQ(trace_path("sim-x", e, 2), "sim-x/Locality/RW/TargetSize=4194304/run2.csv");
}
