#include <gtest/gtest.h>

#include <cmath>

#include "uflip/methodology.hpp"
#include "uflip/sim_device.hpp"

using namespace uflip;

namespace {

SimProfile tiny() {
  SimProfile p;
  p.capacity = 8 * MiB;
  return p;
}

}  // namespace

TEST(Coverage, MarkAndQuery) {
  CoverageBitmap bm(64 * kSector);
  EXPECT_EQ(bm.sectors(), 64u);
  bm.mark(0, 2 * kSector);
  bm.mark(kSector, 2 * kSector);
  EXPECT_EQ(bm.covered_count(), 3u);
  EXPECT_TRUE(bm.covered(2));
  EXPECT_FALSE(bm.covered(3));
  EXPECT_EQ(bm.next_uncovered(0), 3u);
  bm.mark(3 * kSector, 61 * kSector);
  EXPECT_TRUE(bm.complete());
  EXPECT_EQ(bm.next_uncovered(0), 64u);
}

TEST(Coverage, BytesRoundTrip) {
  CoverageBitmap bm(1000 * kSector);
  for (std::uint64_t i = 0; i < 1000; i += 7) bm.mark(i * kSector, kSector);
  const auto back = CoverageBitmap::from_bytes(1000 * kSector, bm.to_bytes());
  EXPECT_EQ(back.covered_count(), bm.covered_count());
  for (std::uint64_t s = 0; s < 1000; ++s) EXPECT_EQ(back.covered(s), bm.covered(s));
  EXPECT_THROW(CoverageBitmap::from_bytes(2000 * kSector, bm.to_bytes()), Error);
}

TEST(Enforce, WritesEverySector) {
  SimDevice d(tiny());
  const auto st = enforce_random_state(d, 3);
  EXPECT_TRUE(st.complete());
  EXPECT_EQ(st.bitmap.covered_count(), d.capacity() / kSector);
  EXPECT_GT(st.elapsed_us, 0);
  d.check_consistency();
  EXPECT_EQ(d.counters().host_writes, st.writes);
}

TEST(Enforce, ResumeMatchesUninterrupted) {
  SimDevice a(tiny()), b(tiny());
  const auto full = enforce_random_state(a, 5);
  EnforceState part;
  part.seed = 5;
  EnforceOptions o;
  o.max_writes = 37;
  enforce_random_state(b, part, o);
  EXPECT_FALSE(part.complete());
  // Resume through a serialized bitmap, as after a restart.
  part.bitmap = CoverageBitmap::from_bytes(b.capacity(), part.bitmap.to_bytes());
  o.max_writes = UINT64_MAX;
  enforce_random_state(b, part, o);
  EXPECT_TRUE(part.complete());
  EXPECT_EQ(part.writes, full.writes);
  EXPECT_EQ(a.snapshot_state(), b.snapshot_state());
}

TEST(Enforce, ReportsProgress) {
  SimDevice d(tiny());
  EnforceOptions o;
  o.progress_every = 50;
  double last = 0;
  int calls = 0;
  o.progress = [&](double cov, std::uint64_t) {
    EXPECT_GE(cov, last);
    last = cov;
    ++calls;
  };
  enforce_random_state(d, 8, o);
  EXPECT_GT(calls, 1);
  EXPECT_DOUBLE_EQ(last, 1.0);
}

TEST(Calibrate, RecommendationFormula) {
  CalibrateOptions o;
  EXPECT_EQ(recommend_io_count(Baseline::RW, 125, 16, 9000, o), 125u + 5120);
  EXPECT_EQ(recommend_io_count(Baseline::SW, 0, 128, 2600, o), 20u * 128);
  EXPECT_EQ(recommend_io_count(Baseline::SR, 0, 1, 500, o), 1024u);
  EXPECT_EQ(recommend_io_count(Baseline::RW, 0, 1, 190000, o), 512u);
}

TEST(Calibrate, HighendStartupAndPeriods) {
  SimDevice d(builtin_profile("highend-ssd"));
  enforce_random_state(d, 42);
  const auto prof = calibrate_phases(d);
  const auto rw = prof.baselines.at(Baseline::RW);
  EXPECT_NEAR(static_cast<double>(rw.startup), 125.0, 12.5);
  EXPECT_EQ(prof.startup(Baseline::SR), 0u);
  EXPECT_EQ(prof.startup(Baseline::SW), 0u);
  EXPECT_GT(rw.running_mean_us / prof.baselines.at(Baseline::SW).running_mean_us, 10.0);
}

TEST(Calibrate, LowendHasNoStartup) {
  SimDevice d(builtin_profile("lowend-usb"));
  enforce_random_state(d, 42);
  const auto prof = calibrate_phases(d);
  EXPECT_EQ(prof.startup(Baseline::RW), 0u);
  EXPECT_EQ(prof.baselines.at(Baseline::SW).period, 128u);
}

TEST(Pause, SynchronousDeviceGetsFloor) {
  SimDevice d(builtin_profile("lowend-usb"));
  enforce_random_state(d, 42);
  const auto r = calibrate_pause(d);
  EXPECT_EQ(r.affected_reads, 0u);
  EXPECT_DOUBLE_EQ(r.pause_us, 1e6);
}

TEST(Pause, DeferredDeviceLingers) {
  SimDevice d(builtin_profile("highend-ssd"));
  enforce_random_state(d, 42);
  const auto r = calibrate_pause(d);
  EXPECT_GT(r.affected_reads, 1000u);
  EXPECT_GE(r.pause_us, 2 * r.lingering_us);
  EXPECT_GT(r.pause_us, 1e6);
}

TEST(DeviceProfileJson, RoundTripAndVersion) {
  DeviceProfile p;
  p.device_id = "sim-x";
  p.baselines[Baseline::RW] = {125, 16, false, false, 9000.5, 5245};
  p.baselines[Baseline::SW] = {0, 128, false, false, 650, 2560};
  p.inter_run_pause_us = 5.3e6;
  p.affected_reads = 3000;
  p.lingering_us = 2.6e6;
  nlohmann::json j = p;
  EXPECT_EQ(j.get<DeviceProfile>(), p);
  j["schema_version"] = 99;
  try {
    j.get<DeviceProfile>();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Version);
  }
}
