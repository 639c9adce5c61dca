#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "uflip/analysis.hpp"

using namespace uflip;

namespace {

std::vector<double> two_phase(std::uint64_t cheap, std::uint64_t n) {
  std::vector<double> v;
  for (std::uint64_t i = 0; i < n; ++i)
    v.push_back(i < cheap ? 400.0 : ((i - cheap) % 2 == 0 ? 400.0 : 27000.0));
  return v;
}

// One expensive IO every `p`, the rest cheap.
std::vector<double> spikes(std::uint64_t p, std::uint64_t n, double noise = 0, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-noise, noise);
  std::vector<double> v;
  for (std::uint64_t i = 0; i < n; ++i) v.push_back((i % p == 0 ? 20000.0 : 600.0) * (1 + u(rng)));
  return v;
}

ExperimentOutcome outcome(Micro m, const std::string& baseline, const std::string& name,
                          std::int64_t value, double mean) {
  ExperimentOutcome o;
  o.spec.micro = m;
  o.spec.baseline = baseline;
  o.spec.varying = {name, value};
  o.stats.mean = mean;
  o.stats.min = mean;
  o.stats.max = mean;
  o.stats.count_kept = 1;
  return o;
}

}  // namespace

TEST(Startup, TwoPhaseSyntheticTrace) {
  const auto r = detect_startup(two_phase(125, 4096));
  EXPECT_NEAR(static_cast<double>(r.startup), 125.0, 12.5);
  EXPECT_FALSE(r.inconclusive);
}

TEST(Startup, NoneOnSteadySeries) {
  EXPECT_EQ(detect_startup(spikes(16, 8192, 0.05)).startup, 0u);
  EXPECT_EQ(detect_startup(std::vector<double>(4096, 500.0)).startup, 0u);
  EXPECT_EQ(detect_startup(two_phase(0, 4096)).startup, 0u);
}

TEST(Startup, ShortSeriesInconclusive) {
  EXPECT_TRUE(detect_startup(std::vector<double>(20, 1.0)).inconclusive);
}

TEST(Startup, ShiftEquivariance) {
  const auto steady = spikes(16, 8192, 0.05, 7);
  for (std::uint64_t k : {50u, 64u, 100u, 125u, 300u, 1000u, 2000u}) {
    std::vector<double> v(k, 600.0);
    v.insert(v.end(), steady.begin(), steady.end());
    const auto s = static_cast<double>(detect_startup(v).startup);
    EXPECT_NEAR(s, static_cast<double>(k), 0.1 * static_cast<double>(k)) << "k=" << k;
  }
}

TEST(Period, ExactOnNoiselessSpikeTrains) {
  for (std::uint64_t p = 2; p <= 512; ++p) {
    const auto v = spikes(p, std::max<std::uint64_t>(4096, 16 * p));
    const auto r = estimate_period(v);
    ASSERT_EQ(r.period, p);
    EXPECT_FALSE(r.low_confidence);
  }
}

TEST(Period, WithinTenPercentUnderNoise) {
  for (std::uint64_t p : {3u, 16u, 100u, 128u, 256u}) {
    const auto v = spikes(p, std::max<std::uint64_t>(4096, 16 * p), 0.05, p);
    const auto r = estimate_period(v);
    EXPECT_NEAR(static_cast<double>(r.period), static_cast<double>(p), 0.1 * static_cast<double>(p));
  }
}

TEST(Period, ConstantSeriesHasPeriodOne) {
  const auto r = estimate_period(std::vector<double>(1000, 250.0));
  EXPECT_EQ(r.period, 1u);
  EXPECT_TRUE(r.low_confidence);
}

TEST(Period, WhiteNoiseIsLowConfidence) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(1000, 50);
  std::vector<double> v(4096);
  for (auto& x : v) x = n(rng);
  EXPECT_TRUE(estimate_period(v).low_confidence);
}

TEST(Locality, LargestContiguousCheapTarget) {
  const std::vector<SweepPoint> pts = {{32768, 5000}, {65536, 700}, {1 << 20, 800},
                                       {4 << 20, 1100}, {8 << 20, 1150}, {16 << 20, 9000},
                                       {32 << 20, 1000}};
  const auto a = locality_area(pts, 600, 32768);
  ASSERT_TRUE(a.value);
  EXPECT_EQ(*a.value, 8u << 20);
  EXPECT_DOUBLE_EQ(a.factor, 1150.0 / 600);
}

TEST(Locality, AbsentWhenSmallestTargetIsSlow) {
  const std::vector<SweepPoint> pts = {{65536, 5000}, {1 << 20, 6000}};
  const auto a = locality_area(pts, 600, 32768);
  EXPECT_FALSE(a.value);
}

TEST(Partitions, OnePartitionAlwaysCounts) {
  const std::vector<SweepPoint> pts = {{1, 5000}, {2, 700}, {4, 5000}};
  const auto a = partition_threshold(pts, 600);
  ASSERT_TRUE(a.value);
  EXPECT_EQ(*a.value, 2u);
}

TEST(Order, RatiosAgainstBaselines) {
  std::map<std::int64_t, double> m = {{-1, 1200}, {0, 600}, {1, 600}, {32, 900}, {64, 1000}};
  const auto o = order_ratios(m, 600, 2000.0, 32768);
  EXPECT_DOUBLE_EQ(*o.reverse, 2.0);
  EXPECT_DOUBLE_EQ(*o.in_place, 1.0);
  // 32 x 32 KB = 1 MB is the first large stride.
  EXPECT_DOUBLE_EQ(*o.large_incr, (900.0 + 1000.0) / 2 / 2000.0);
  EXPECT_EQ(o.by_incr.size(), 5u);
}

TEST(Summary, MissingMicrosAreNull) {
  SuiteConfig cfg;
  std::vector<ExperimentOutcome> rs;
  for (auto [b, mean] : std::vector<std::pair<std::string, double>>{
           {"SR", 400}, {"RR", 500}, {"SW", 400}, {"RW", 9000}})
    rs.push_back(outcome(Micro::Granularity, b, "IOSize", 32768, mean));
  const auto rep = build_summary(rs, cfg, "dev");
  EXPECT_DOUBLE_EQ(*rep.rw_sw_ratio, 22.5);
  EXPECT_DOUBLE_EQ(*rep.baseline_ms.at("RW"), 9.0);
  EXPECT_FALSE(rep.locality);
  EXPECT_FALSE(rep.partitions);
  EXPECT_FALSE(rep.pause_effect_us);
  nlohmann::json j = rep;
  EXPECT_TRUE(j.at("locality").is_null());
  EXPECT_TRUE(j.at("order").is_null());
  EXPECT_EQ(j.at("schema_version"), kSchemaVersion);
  EXPECT_NE(format_summary_table(rep).find("dev"), std::string::npos);
}

TEST(Summary, PauseEffectAndOrder) {
  SuiteConfig cfg;
  std::vector<ExperimentOutcome> rs;
  rs.push_back(outcome(Micro::Granularity, "SW", "IOSize", 32768, 500));
  rs.push_back(outcome(Micro::Granularity, "RW", "IOSize", 32768, 9000));
  for (std::int64_t p : {100, 200, 400, 800}) {
    const double mean = p >= 400 ? 550 : 9000;
    rs.push_back(outcome(Micro::Pause, "RW", "Pause", p, mean));
  }
  rs.push_back(outcome(Micro::Order, "SW", "Incr", 0, 500));
  rs.push_back(outcome(Micro::Order, "SW", "Incr", -1, 1000));
  const auto rep = build_summary(rs, cfg, "dev");
  ASSERT_TRUE(rep.pause_effect_us);
  EXPECT_DOUBLE_EQ(*rep.pause_effect_us, 400);
  ASSERT_TRUE(rep.order);
  EXPECT_DOUBLE_EQ(*rep.order->in_place, 1.0);
  EXPECT_DOUBLE_EQ(*rep.order->reverse, 2.0);
}

TEST(Plots, GranularityTable) {
  std::vector<ExperimentOutcome> rs;
  rs.push_back(outcome(Micro::Granularity, "SR", "IOSize", 512, 100));
  rs.push_back(outcome(Micro::Granularity, "SW", "IOSize", 1024, 200));
  const auto path = (std::filesystem::temp_directory_path() / "uflip_plot_test.tsv").string();
  emit_plot_data(rs, PlotKind::Granularity, path);
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first.rfind("# axis:", 0), 0u);
  std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_NE(all.find("nan"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(path + ".meta.json"));
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".meta.json");
}
