#include <gtest/gtest.h>

#include <set>

#include "uflip/microbench.hpp"

using namespace uflip;

namespace {

std::set<std::int64_t> values(const std::vector<ExperimentSpec>& es, const std::string& baseline) {
  std::set<std::int64_t> v;
  for (const auto& e : es)
    if (e.baseline == baseline) v.insert(e.varying.value);
  return v;
}

}  // namespace

TEST(Expand, GranularityPowersOfTwoPerBaseline) {
  SuiteConfig cfg;
  cfg.extra_io_sizes.clear();
  const auto es = expand(Micro::Granularity, cfg);
  EXPECT_EQ(es.size(), 40u);
  for (const char* b : {"SR", "RR", "SW", "RW"}) {
    std::set<std::int64_t> want;
    for (int k = 0; k < 10; ++k) want.insert(512LL << k);
    EXPECT_EQ(values(es, b), want) << b;
  }
}

TEST(Expand, GranularityExtraSizes) {
  SuiteConfig cfg;
  const auto es = expand(Micro::Granularity, cfg);
  EXPECT_EQ(es.size(), 40u + 4 * cfg.extra_io_sizes.size());
}

TEST(Expand, PartitioningAndOrderAreSequentialOnly) {
  SuiteConfig cfg;
  for (Micro m : {Micro::Partitioning, Micro::Order}) {
    std::set<std::string> bases;
    for (const auto& e : expand(m, cfg)) bases.insert(e.baseline);
    EXPECT_EQ(bases, (std::set<std::string>{"SR", "SW"}));
  }
  const auto order = expand(Micro::Order, cfg);
  std::set<std::int64_t> want = {-1, 0};
  for (int k = 0; k <= 8; ++k) want.insert(1LL << k);
  EXPECT_EQ(values(order, "SW"), want);
}

TEST(Expand, MixCoversSixPairsAndSevenRatios) {
  SuiteConfig cfg;
  const auto es = expand(Micro::Mix, cfg);
  std::set<std::string> pairs;
  for (const auto& e : es) pairs.insert(e.baseline);
  EXPECT_EQ(pairs.size(), 6u);
  EXPECT_EQ(es.size(), 6u * 7);
  for (const auto& e : es) {
    const auto& mix = std::get<MixSpec>(e.pattern);
    EXPECT_EQ(static_cast<std::int64_t>(mix.ratio), e.varying.value);
    EXPECT_FALSE(footprint(mix.first).overlaps(footprint(mix.second))) << e.id();
  }
}

TEST(Expand, ParallelismDegrees) {
  SuiteConfig cfg;
  const auto es = expand(Micro::Parallelism, cfg);
  EXPECT_EQ(values(es, "RW"), (std::set<std::int64_t>{1, 2, 4, 8, 16}));
  for (const auto& e : es) {
    const auto& p = std::get<ParallelSpec>(e.pattern);
    EXPECT_EQ(p.base.target_size % p.parallel_degree, 0u);
  }
}

TEST(Expand, PauseAndBurstRanges) {
  SuiteConfig cfg;
  const auto pause = expand(Micro::Pause, cfg);
  std::set<std::int64_t> want;
  for (int k = 0; k <= 8; ++k) want.insert(100LL << k);
  EXPECT_EQ(values(pause, "SR"), want);
  const auto bursts = expand(Micro::Bursts, cfg);
  want.clear();
  for (int k = 0; k <= 6; ++k) want.insert(10LL << k);
  EXPECT_EQ(values(bursts, "RW"), want);
}

TEST(Expand, SingleVaryingParameter) {
  SuiteConfig cfg;
  for (const auto& e : expand(Micro::Alignment, cfg)) {
    const auto& p = std::get<PatternSpec>(e.pattern);
    EXPECT_EQ(static_cast<std::int64_t>(p.io_shift), e.varying.value);
    EXPECT_EQ(p.io_size, cfg.base_io_size);
    EXPECT_EQ(p.timing, Timing::consecutive());
  }
}

TEST(Expand, AllNineMicros) {
  SuiteConfig cfg;
  std::set<Micro> seen;
  for (const auto& e : expand_all(cfg)) seen.insert(e.micro);
  EXPECT_EQ(seen.size(), 9u);
}

TEST(TargetOffsets, SequentialWriteRangesDisjointWithinEpoch) {
  SuiteConfig cfg;
  const auto es = assign_target_offsets(expand_all(cfg), 1ULL << 30, cfg);
  std::vector<std::pair<std::string, ByteRange>> epoch;
  for (const auto& e : es) {
    if (e.reset_before) epoch.clear();
    for (const auto& r : all_ranges(e)) EXPECT_LE(r.end, 1ULL << 30) << e.id();
    for (const auto& r : sw_ranges(e)) {
      for (const auto& [id, o] : epoch) EXPECT_FALSE(r.overlaps(o)) << e.id() << " vs " << id;
    }
    for (const auto& r : sw_ranges(e)) epoch.emplace_back(e.id(), r);
  }
}

TEST(TargetOffsets, SwRangesAligned) {
  SuiteConfig cfg;
  const auto es = assign_target_offsets(expand_all(cfg), 32ULL << 30, cfg);
  for (const auto& e : es) {
    EXPECT_FALSE(e.reset_before) << e.id();
    for (const auto& r : sw_ranges(e)) EXPECT_EQ(r.begin % cfg.sw_alignment, 0u) << e.id();
  }
}

TEST(ExperimentJson, RoundTripAndId) {
  SuiteConfig cfg;
  for (Micro m : kAllMicros) {
    for (const auto& e : expand(m, cfg)) {
      nlohmann::json j = e;
      EXPECT_EQ(j.get<ExperimentSpec>(), e);
    }
  }
  const auto g = expand(Micro::Granularity, cfg).front();
  EXPECT_EQ(g.id(), "Granularity/SR/IOSize=512");
}

TEST(SuiteJson, RoundTrip) {
  SuiteConfig cfg;
  cfg.seed = 99;
  cfg.io_count_by_pattern[Baseline::RW] = 777;
  nlohmann::json j = cfg;
  const auto back = j.get<SuiteConfig>();
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.io_count(Baseline::RW), 777u);
}

TEST(Describe, OneLinePerExperiment) {
  SuiteConfig cfg;
  const auto e = expand(Micro::Granularity, cfg).front();
  const auto line = describe(e);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_NE(line.find("IOSize=512"), std::string::npos);
  EXPECT_NE(line.find("io_count="), std::string::npos);
}
