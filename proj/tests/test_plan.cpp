#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "uflip/methodology.hpp"

using namespace uflip;

namespace {

DeviceProfile profile_with(std::uint64_t rw_startup, double pause = 1e6) {
  DeviceProfile p;
  for (Baseline b : {Baseline::SR, Baseline::RR, Baseline::SW, Baseline::RW})
    p.baselines[b] = BaselineCalibration{};
  p.baselines[Baseline::RW].startup = rw_startup;
  p.inter_run_pause_us = pause;
  return p;
}

std::vector<ExperimentSpec> placed(std::vector<ExperimentSpec> es, std::uint64_t cap) {
  return assign_target_offsets(std::move(es), cap, SuiteConfig{});
}

}  // namespace

TEST(PlanIgnore, MixScalesRandomWriteStartup) {
  SuiteConfig cfg;
  const auto mixes = expand(Micro::Mix, cfg);
  auto it = std::find_if(mixes.begin(), mixes.end(), [](const ExperimentSpec& e) {
    return e.baseline == "RR+RW" && e.varying.value == 4;
  });
  ASSERT_NE(it, mixes.end());
  const auto ignore = plan_io_ignore(*it, profile_with(128));
  EXPECT_EQ(ignore, 640u);
  // Of the first 640 interleaved IOs, exactly 128 are random writes.
  auto mix = std::get<MixSpec>(it->pattern);
  mix.first.io_count = 4 * 1024;
  mix.second.io_count = 1024;
  const auto sch = interleave_mix(mix);
  const auto writes = std::count_if(sch.begin(), sch.begin() + 640,
                                    [](const IORequest& r) { return r.mode == Mode::Write; });
  EXPECT_EQ(writes, 128);
}

TEST(PlanIgnore, BasicUsesCalibratedStartup) {
  SuiteConfig cfg;
  const auto rw = expand(Micro::Granularity, cfg);
  for (const auto& e : rw) {
    const auto want = e.baseline == "RW" ? 125u : 0u;
    EXPECT_EQ(plan_io_ignore(e, profile_with(125)), want) << e.id();
  }
}

TEST(Plan, NoResetsOnLargeDevice) {
  const std::uint64_t cap = 32 * GiB;
  const auto plan = build_plan(placed(expand_all(SuiteConfig{}), cap), profile_with(125), cap);
  EXPECT_EQ(plan.resets(), 0u);
  const auto check = verify_plan(plan);
  EXPECT_TRUE(check.ok);
}

TEST(Plan, ResetsWhenSpaceRunsOut) {
  const std::uint64_t cap = 512 * MiB;
  const auto plan = build_plan(placed(expand_all(SuiteConfig{}), cap), profile_with(125), cap);
  EXPECT_GT(plan.resets(), 0u);
  const auto check = verify_plan(plan, nullptr);
  EXPECT_TRUE(check.ok) << (check.problems.empty() ? "" : check.problems.front());
  EXPECT_LE(check.max_epoch_bytes, cap);
}

TEST(Plan, PauseBeforeEveryRunAndReadsFirst) {
  const std::uint64_t cap = 32 * GiB;
  const auto plan = build_plan(placed(expand_all(SuiteConfig{}), cap), profile_with(0, 5e6), cap);
  bool seen_sw = false;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const auto& s = plan.steps[i];
    if (s.kind != StepKind::Run) continue;
    ASSERT_GT(i, 0u);
    EXPECT_EQ(plan.steps[i - 1].kind, StepKind::Pause);
    EXPECT_GE(plan.steps[i - 1].pause_us, 5e6);
    if (is_sw_bearing(s.experiment)) seen_sw = true;
    else EXPECT_FALSE(seen_sw) << s.experiment.id() << " scheduled after sequential writes";
  }
}

TEST(Plan, RandomizedSetsVerifyOnOneGigabyte) {
  const std::uint64_t cap = 1 * GiB;
  const auto all = expand_all(SuiteConfig{});
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<ExperimentSpec> pick;
    for (const auto& e : all)
      if (rng() % 3 == 0) pick.push_back(e);
    std::shuffle(pick.begin(), pick.end(), rng);
    const auto plan = build_plan(placed(pick, cap), profile_with(rng() % 300), cap);
    const auto check = verify_plan(plan);
    EXPECT_EQ(check.overlaps, 0u);
    EXPECT_EQ(check.capacity_violations, 0u);
    EXPECT_EQ(check.missing_pauses, 0u);
    EXPECT_LE(check.max_epoch_bytes, cap);
  }
}

TEST(Plan, ExperimentLargerThanDeviceRejected) {
  SuiteConfig cfg;
  auto es = expand(Micro::Granularity, cfg);
  EXPECT_THROW(build_plan(es, profile_with(0), 64 * MiB), Error);
}

TEST(Plan, RunKeepsIosAfterIgnore) {
  const std::uint64_t cap = 32 * GiB;
  const auto plan = build_plan(placed(expand_all(SuiteConfig{}), cap), profile_with(6000), cap);
  for (const auto& s : plan.steps) {
    if (s.kind != StepKind::Run) continue;
    if (const auto* p = std::get_if<PatternSpec>(&s.experiment.pattern))
      EXPECT_LT(s.io_ignore, p->io_count) << s.experiment.id();
  }
}

TEST(PlanVerify, DetectsOverlapAndMissingPause) {
  SuiteConfig cfg;
  auto sw = expand(Micro::Granularity, cfg);
  std::erase_if(sw, [](const ExperimentSpec& e) { return e.baseline != "SW"; });
  BenchmarkPlan plan;
  plan.capacity = 1 * GiB;
  plan.inter_run_pause_us = 1e6;
  for (std::size_t k = 0; k < 2; ++k) {
    PlanStep run;
    run.experiment = sw[k];  // both at offset 0
    plan.steps.push_back(run);
  }
  const auto check = verify_plan(plan);
  EXPECT_FALSE(check.ok);
  EXPECT_EQ(check.overlaps, 1u);
  EXPECT_EQ(check.missing_pauses, 2u);
}

TEST(PlanJson, RoundTripAndVersion) {
  const std::uint64_t cap = 1 * GiB;
  const auto plan = build_plan(placed(expand(Micro::Order, SuiteConfig{}), cap), profile_with(5), cap);
  nlohmann::json j = plan;
  const auto back = j.get<BenchmarkPlan>();
  ASSERT_EQ(back.steps.size(), plan.steps.size());
  for (std::size_t i = 0; i < plan.steps.size(); ++i) EXPECT_EQ(back.steps[i].key(), plan.steps[i].key());
  EXPECT_EQ(nlohmann::json(back), j);
  j["schema_version"] = 0;
  EXPECT_THROW(j.get<BenchmarkPlan>(), Error);
}

TEST(Journal, PersistsAcrossReopen) {
  const auto path = (std::filesystem::temp_directory_path() / "uflip_journal_test.log").string();
  std::filesystem::remove(path);
  {
    Journal j(path);
    EXPECT_FALSE(j.done("run/a/0"));
    j.record("run/a/0");
    j.record("reset/0");
    EXPECT_TRUE(j.done("run/a/0"));
  }
  Journal again(path);
  EXPECT_TRUE(again.done("run/a/0"));
  EXPECT_TRUE(again.done("reset/0"));
  EXPECT_FALSE(again.done("run/a/1"));
  EXPECT_EQ(again.size(), 2u);
  std::filesystem::remove(path);
}
