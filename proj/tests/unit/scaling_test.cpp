#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "talp/errors.hpp"
#include "talp/scaling.hpp"

using namespace talp;
using namespace talp::testing;

namespace {

SourcedRun run_at(const char* file, const ResourceConfig& c, const char* run_ts,
                  const char* commit_ts = nullptr) {
  SourcedRun s{file, make_run(c, {ideal_region("Global", c)}, run_ts)};
  if (commit_ts) s.run.git = GitMetadata{git_hash("abc"), "main", ts(commit_ts)};
  return s;
}

}  // namespace

TEST(LatestPerConfig, NewestCommitWins) {
  const std::vector<SourcedRun> runs{
      run_at("new.json", {8, 14}, "2024-01-01T00:00:00Z", "2024-02-01T00:00:00Z"),
      run_at("old.json", {8, 14}, "2024-03-01T00:00:00Z", "2024-01-01T00:00:00Z"),
  };
  const auto latest = latest_per_config(runs);
  ASSERT_EQ(latest.size(), 1u);
  EXPECT_EQ(latest.begin()->second.filename, "new.json");
}

TEST(LatestPerConfig, SingleRunAndFilenameTieBreak) {
  std::vector<SourcedRun> runs{run_at("a.json", {2, 2}, "2024-01-01T00:00:00Z")};
  EXPECT_EQ(latest_per_config(runs).at({2, 2}).filename, "a.json");
  runs.push_back(run_at("b.json", {2, 2}, "2024-01-01T00:00:00Z"));
  std::reverse(runs.begin(), runs.end());
  EXPECT_EQ(latest_per_config(runs).at({2, 2}).filename, "b.json");
}

TEST(SelectReference, FewestCpusThenFewestRanks) {
  EXPECT_EQ(select_reference({{8, 14}, {8, 28}}), (ResourceConfig{8, 14}));
  EXPECT_EQ(select_reference({{1, 112}, {2, 56}, {4, 28}}), (ResourceConfig{1, 112}));
  EXPECT_EQ(select_reference({{2, 56}}), (ResourceConfig{2, 56}));
  EXPECT_THROW(select_reference({}), DomainError);
}

TEST(DetectScalingMode, Examples) {
  const ResourceConfig ref{2, 56};
  const std::vector<ScalingPoint> same{{ref, 112'000}, {{4, 56}, 224'000}};
  EXPECT_EQ(detect_scaling_mode(same, ref), ScalingMode::Weak);

  const std::vector<ScalingPoint> strong{{ref, 1'000'000}, {{4, 56}, 1'010'000}};
  EXPECT_EQ(detect_scaling_mode(strong, ref), ScalingMode::Strong);

  const std::vector<ScalingPoint> boundary{{ref, 1'000'000}, {{4, 56}, 2'200'000}};
  EXPECT_EQ(detect_scaling_mode(boundary, ref), ScalingMode::Weak);
  const std::vector<ScalingPoint> beyond{{ref, 1'000'000}, {{4, 56}, 2'200'100}};
  EXPECT_EQ(detect_scaling_mode(beyond, ref), ScalingMode::Strong);

  const std::vector<ScalingPoint> single{{ref, 5}};
  EXPECT_EQ(detect_scaling_mode(single, ref), ScalingMode::Weak);
}

TEST(InstructionScaling, Examples) {
  const ScalingPoint ref{{2, 56}, 1'000'000'000'000};
  EXPECT_DOUBLE_EQ(instruction_scaling(ref, ref, ScalingMode::Strong), 1.0);
  const ScalingPoint more{{4, 56}, static_cast<std::int64_t>(1e12 / 0.99)};
  EXPECT_NEAR(instruction_scaling(more, ref, ScalingMode::Strong), 0.99, 1e-12);
  const ScalingPoint weak_ref{{1, 112}, 1'000'000'000'000};
  const ScalingPoint weak_t{{4, 112}, 4'000'000'000'000};
  EXPECT_DOUBLE_EQ(instruction_scaling(weak_t, weak_ref, ScalingMode::Weak), 1.0);
}

TEST(ScalingFactors, ReferenceAgainstItself) {
  const auto runs = strong_fixture();
  const MetricsAt ref{runs[0].run.resources,
                      compute_pop_metrics(runs[0].run.regions.front(), runs[0].run.resources)};
  const ScalingFactors f = scaling_factors(ref, ref, ScalingMode::Strong);
  EXPECT_DOUBLE_EQ(f.computation_scalability, 1.0);
  EXPECT_DOUBLE_EQ(f.global_efficiency, ref.metrics.parallel_efficiency);
}

TEST(BuildEfficiencyTable, SingleRunFolder) {
  const std::vector<SourcedRun> runs{run_at("only.json", {2, 4}, "2024-01-01T00:00:00Z")};
  const EfficiencyTable t = build_efficiency_table(runs, "Global");
  ASSERT_EQ(t.columns.size(), 1u);
  EXPECT_EQ(t.mode, ScalingMode::Weak);
  EXPECT_EQ(t.columns[0].factors, ScalingFactors{});
  EXPECT_EQ(t.columns[0].source, "only.json");
}

TEST(BuildEfficiencyTable, StrongFixture) {
  const EfficiencyTable t = build_efficiency_table(strong_fixture(), "Global");
  ASSERT_EQ(t.columns.size(), 2u);
  EXPECT_EQ(t.mode, ScalingMode::Strong);
  EXPECT_EQ(t.reference, (ResourceConfig{2, 56}));
  const auto& ref = t.columns[0];
  const auto& big = t.columns[1];
  EXPECT_NEAR(ref.metrics.parallel_efficiency, 0.91, 0.01);
  EXPECT_NEAR(big.metrics.parallel_efficiency, 0.63, 0.01);
  EXPECT_NEAR(big.factors.ipc_scalability, 3.28, 0.01);
  EXPECT_NEAR(big.factors.instruction_scalability, 0.99, 0.01);
  EXPECT_NEAR(big.factors.frequency_scalability, 0.88, 0.01);
  EXPECT_NEAR(big.factors.computation_scalability, 2.85, 0.02);
  EXPECT_NEAR(big.factors.global_efficiency, 1.80, 0.02);
  EXPECT_NEAR(big.metrics.mpi_parallel_efficiency, 0.96, 0.01);
  EXPECT_NEAR(big.metrics.omp_serialization_efficiency, 0.68, 0.01);
}

TEST(BuildEfficiencyTable, MissingRegionNamesTheFile) {
  const ResourceConfig c{2, 4};
  std::vector<SourcedRun> runs{run_at("a.json", c, "2024-01-01T00:00:00Z"),
                               run_at("b.json", {4, 4}, "2024-01-01T00:00:00Z")};
  runs[0].run.regions.push_back(ideal_region("timestep", c));
  try {
    build_efficiency_table(runs, "timestep");
    FAIL() << "expected RegionMissing";
  } catch (const RegionMissing& e) {
    EXPECT_EQ(e.region(), "timestep");
    EXPECT_EQ(e.source(), "b.json");
  }
}

TEST(BuildEfficiencyTable, Properties) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 300; ++i) {
    std::vector<SourcedRun> runs;
    const int n = 1 + static_cast<int>(rng() % 5);
    for (int k = 0; k < n; ++k) {
      const ResourceConfig c = random_config(rng);
      runs.push_back({"run" + std::to_string(k) + ".json",
                      make_run(c, {random_valid_region(rng, c)}, "2024-01-01T00:00:00Z")});
    }
    const EfficiencyTable t = build_efficiency_table(runs, "Global");
    ASSERT_FALSE(t.columns.empty());
    ASSERT_EQ(t.columns.front().config, t.reference);
    ASSERT_EQ(t.columns.front().factors.computation_scalability, 1.0);
    ASSERT_TRUE(std::is_sorted(t.columns.begin(), t.columns.end(),
                               [](const auto& a, const auto& b) { return a.config < b.config; }));
    for (const TableColumn& col : t.columns) {
      const ScalingFactors& f = col.factors;
      const long double comp = static_cast<long double>(f.ipc_scalability) *
                               f.instruction_scalability * f.frequency_scalability;
      ASSERT_LE(std::fabs(comp - f.computation_scalability) / comp, 1e-12L);
      const long double global =
          static_cast<long double>(col.metrics.parallel_efficiency) * f.computation_scalability;
      ASSERT_LE(std::fabs(global - f.global_efficiency) / global, 1e-12L);
    }
    std::vector<SourcedRun> shuffled = runs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const EfficiencyTable again = build_efficiency_table(shuffled, "Global");
    ASSERT_EQ(again.columns.size(), t.columns.size());
    for (std::size_t k = 0; k < t.columns.size(); ++k) {
      ASSERT_EQ(again.columns[k].source, t.columns[k].source);
      ASSERT_EQ(again.columns[k].factors, t.columns[k].factors);
    }
  }
}
