#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "uflip/pattern.hpp"

using namespace uflip;

namespace {

PatternSpec seq(std::uint64_t io_size, std::uint64_t target, std::uint64_t count) {
  PatternSpec s;
  s.io_size = io_size;
  s.target_size = target;
  s.io_count = count;
  return s;
}

std::vector<std::uint64_t> lbas(const PatternSpec& s) {
  std::vector<std::uint64_t> v;
  for (const auto& r : generate_schedule(s)) v.push_back(r.lba);
  return v;
}

// Submit offsets of a schedule executed with the given response times.
std::vector<double> submit_offsets(const PatternSpec& s, const std::vector<double>& rts) {
  std::vector<double> t{0.0};
  for (std::uint64_t i = 1; i < s.io_count; ++i)
    t.push_back(next_submit_time(s, i, t.back(), rts[i - 1]));
  return t;
}

}  // namespace

TEST(Location, SequentialThirdIo) {
  EXPECT_EQ(lba_at(seq(32768, 1 << 20, 8), 3), 98304u);
}

TEST(Location, SequentialWrapsInsideTarget) {
  auto s = seq(4096, 4 * 4096, 10);
  s.target_offset = 1 << 20;
  EXPECT_EQ(lba_at(s, 5), (1u << 20) + 4096u);
}

TEST(Location, PartitionedOrder) {
  auto s = seq(512, 6 * 512, 6);
  s.location = Location::partitioned(3);
  std::vector<std::uint64_t> units;
  for (auto a : lbas(s)) units.push_back(a / 512);
  EXPECT_EQ(units, (std::vector<std::uint64_t>{0, 2, 4, 1, 3, 5}));
}

TEST(Location, InPlaceRepeatsAddress) {
  auto s = seq(4096, 1 << 20, 50);
  s.target_offset = 4096;
  s.location = Location::ordered(0);
  for (auto a : lbas(s)) EXPECT_EQ(a, 4096u);
}

TEST(Location, ReverseStartsAtTopOfTarget) {
  auto s = seq(4096, 16 * 4096, 16);
  s.location = Location::ordered(-1);
  const auto v = lbas(s);
  EXPECT_EQ(v.front(), 15u * 4096);
  EXPECT_EQ(v.back(), 0u);
}

TEST(Location, OrderedOverflowIsAScheduleError) {
  auto s = seq(4096, 16 * 4096, 16);
  s.location = Location::ordered(4);
  try {
    generate_schedule(s);
    FAIL() << "expected a schedule error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Schedule);
    EXPECT_NE(std::string(e.what()).find("4"), std::string::npos);
  }
}

TEST(Location, RandomIsDeterministicAndAligned) {
  auto s = seq(8192, 64 << 20, 2000);
  s.location = Location::random();
  s.target_offset = 1 << 20;
  s.io_shift = 512;
  s.seed = 77;
  for (std::uint64_t i = 0; i < s.io_count; ++i) {
    const auto a = lba_at(s, i);
    EXPECT_EQ(a, lba_at(s, i));
    EXPECT_GE(a, s.target_offset);
    EXPECT_LE(a + s.io_size, s.target_offset + s.target_size + s.io_shift);
    EXPECT_EQ((a - s.target_offset - s.io_shift) % s.io_size, 0u);
  }
}

TEST(Location, RandomCoversTheSlots) {
  auto s = seq(4096, 64 * 4096, 4000);
  s.location = Location::random();
  s.seed = 3;
  std::vector<int> hits(64);
  for (auto a : lbas(s)) ++hits[a / 4096];
  for (int h : hits) EXPECT_GT(h, 20);
}

TEST(Timing, ConsecutiveAndPause) {
  EXPECT_DOUBLE_EQ(next_submit_time(seq(512, 512, 2), 1, 100, 40), 140);
  auto p = seq(512, 512, 2);
  p.timing = Timing::pause(500);
  EXPECT_DOUBLE_EQ(next_submit_time(p, 1, 100, 40), 640);
}

TEST(Timing, BurstPausesAtGroupBoundary) {
  auto b = seq(512, 512, 20);
  b.timing = Timing::burst(100000, 10);
  EXPECT_DOUBLE_EQ(next_submit_time(b, 10, 7, 3), 100010);
  EXPECT_DOUBLE_EQ(next_submit_time(b, 11, 7, 3), 10);
}

TEST(Timing, BurstOfOneEqualsPause) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> rt(10, 30000);
  for (double p : {0.0, 100.0, 12345.0}) {
    auto a = seq(512, 512, 200);
    auto b = a;
    a.timing = Timing::burst(p, 1);
    b.timing = Timing::pause(p);
    std::vector<double> rts(200);
    for (auto& x : rts) x = rt(rng);
    EXPECT_EQ(submit_offsets(a, rts), submit_offsets(b, rts));
  }
}

TEST(Timing, ZeroPauseBurstEqualsConsecutive) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> rt(10, 30000);
  for (std::uint64_t n : {1u, 2u, 7u, 64u}) {
    auto a = seq(512, 512, 200);
    auto b = a;
    a.timing = Timing::burst(0, n);
    std::vector<double> rts(200);
    for (auto& x : rts) x = rt(rng);
    EXPECT_EQ(submit_offsets(a, rts), submit_offsets(b, rts));
  }
}

TEST(Schedule, SequentialWrite) {
  auto s = seq(32768, 1 << 20, 4);
  s.mode = Mode::Write;
  const auto sch = generate_schedule(s);
  ASSERT_EQ(sch.size(), 4u);
  for (std::uint64_t i = 0; i < 4; ++i) {
    EXPECT_EQ(sch[i].lba, i * 32768);
    EXPECT_EQ(sch[i].mode, Mode::Write);
  }
}

TEST(Schedule, ZeroIoCountRejected) {
  auto s = seq(512, 4096, 0);
  EXPECT_THROW(validate(s), Error);
}

TEST(Schedule, CsvHeader) {
  std::ostringstream out;
  write_schedule_csv(out, generate_schedule(seq(512, 4096, 2)));
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "index,earliest_submit_us,lba,size,mode");
}

TEST(Mix, RatioFourInterleaving) {
  MixSpec m;
  m.first = seq(4096, 1 << 20, 16);
  m.first.location = Location::random();
  m.second = seq(4096, 1 << 20, 4);
  m.second.target_offset = 1 << 20;
  m.second.location = Location::random();
  m.second.mode = Mode::Write;
  m.ratio = 4;
  std::string modes;
  for (const auto& r : interleave_mix(m)) modes += r.mode == Mode::Read ? 'R' : 'W';
  EXPECT_EQ(modes, "RRRRWRRRRWRRRRWRRRRW");
}

TEST(Mix, TruncatesWhenASideRunsOut) {
  MixSpec m;
  m.first = seq(4096, 1 << 20, 5);
  m.second = seq(4096, 1 << 20, 10);
  m.second.target_offset = 1 << 20;
  m.second.mode = Mode::Write;
  m.ratio = 2;
  std::string modes;
  for (const auto& r : interleave_mix(m)) modes += r.mode == Mode::Read ? 'R' : 'W';
  EXPECT_EQ(modes, "RRWRRWR");
}

TEST(Mix, OverlappingTargetsRejected) {
  MixSpec m;
  m.first = seq(4096, 1 << 20, 4);
  m.second = seq(4096, 1 << 20, 4);
  m.second.target_offset = 4096;
  EXPECT_THROW(validate(m), Error);
}

TEST(Parallel, DegreeOneIsIdentity) {
  ParallelSpec p;
  p.base = seq(4096, 1 << 20, 100);
  const auto parts = split_parallel(p);
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_EQ(parts[0].target_offset, p.base.target_offset);
  EXPECT_EQ(parts[0].target_size, p.base.target_size);
  EXPECT_EQ(parts[0].io_count, 100u);
}

TEST(Parallel, SubRangesPartitionTheTarget) {
  for (std::uint64_t d : {2u, 4u, 16u}) {
    ParallelSpec p;
    p.base = seq(4096, 16 * 4096, 64);
    p.base.target_offset = 1 << 20;
    p.base.location = Location::random();
    p.parallel_degree = d;
    const auto parts = split_parallel(p);
    ASSERT_EQ(parts.size(), d);
    std::uint64_t expect = p.base.target_offset;
    for (const auto& s : parts) {
      EXPECT_EQ(s.target_offset, expect);
      EXPECT_EQ(s.target_size, p.base.target_size / d);
      EXPECT_EQ(s.io_count, 64 / d);
      expect += s.target_size;
    }
    EXPECT_EQ(expect, p.base.target_offset + p.base.target_size);
    for (std::size_t a = 0; a < parts.size(); ++a)
      for (std::size_t b = a + 1; b < parts.size(); ++b) EXPECT_NE(parts[a].seed, parts[b].seed);
  }
}

TEST(PatternJson, RoundTrip) {
  auto s = seq(8192, 1 << 22, 99);
  s.timing = Timing::burst(250, 7);
  s.location = Location::partitioned(8);
  s.mode = Mode::Write;
  s.io_shift = 1024;
  s.io_ignore = 3;
  s.seed = 1234567;
  nlohmann::json j = s;
  EXPECT_EQ(j.get<PatternSpec>(), s);
}
