#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "talp/measurement.hpp"
#include "talp/pop_model.hpp"
#include "talp/report.hpp"
#include "talp/scaling.hpp"
#include "talp/zip.hpp"

namespace fs = std::filesystem;
using namespace talp;

namespace {

RegionMeasurement region(const std::string& name, const ResourceConfig& c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.5, 1.0);
  RegionMeasurement r;
  r.name = name;
  r.elapsed_ns = 1'000'000'000;
  const std::int64_t total = c.total_cpus() * r.elapsed_ns;
  r.mpi_cpu_ns = static_cast<std::int64_t>(0.1 * unit(rng) * static_cast<double>(total));
  r.max_non_mpi_rank_ns = r.elapsed_ns;
  if (c.omp_threads > 1) r.omp_serialization_cpu_ns = r.mpi_cpu_ns / 2;
  r.useful_cpu_ns = total - r.mpi_cpu_ns - r.omp_serialization_cpu_ns;
  r.cycles = 2 * r.useful_cpu_ns;
  r.instructions = 3 * r.cycles;
  return r;
}

std::vector<SourcedRun> history(int configs, int runs_per_config) {
  std::mt19937_64 rng(1);
  std::vector<SourcedRun> out;
  for (int k = 0; k < configs; ++k) {
    const ResourceConfig c{1 << k, 8};
    for (int i = 0; i < runs_per_config; ++i) {
      RunMeasurement run;
      run.run_timestamp = Timestamp::from_instant(Instant{} + std::chrono::hours(24 * i));
      run.resources = c;
      run.regions = {region("Global", c, rng), region("timestep", c, rng)};
      out.push_back({"talp_" + c.label() + "_" + std::to_string(i) + ".json", std::move(run)});
    }
  }
  return out;
}

}  // namespace

static void BM_ComputePopMetrics(benchmark::State& state) {
  std::mt19937_64 rng(7);
  const ResourceConfig c{4, 56};
  const RegionMeasurement r = region("Global", c, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_pop_metrics(r, c));
  }
}
BENCHMARK(BM_ComputePopMetrics);

static void BM_ParseRunMeasurement(benchmark::State& state) {
  const std::string text = serialize_run_measurement(history(1, 1).front().run);
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_run_measurement(text));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ParseRunMeasurement);

static void BM_BuildEfficiencyTable(benchmark::State& state) {
  const auto runs = history(static_cast<int>(state.range(0)), 10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_efficiency_table(runs, "Global"));
  }
}
BENCHMARK(BM_BuildEfficiencyTable)->Arg(2)->Arg(8);

static void BM_BuildTimeSeries(benchmark::State& state) {
  const auto runs = history(4, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_time_series(runs, "exp"));
  }
}
BENCHMARK(BM_BuildTimeSeries)->Arg(10)->Arg(100);

static void BM_RenderReport(benchmark::State& state) {
  const fs::path out = fs::temp_directory_path() / "talp-bench-report";
  ExperimentTree tree;
  tree.root = "in";
  tree.experiments["group/exp"] = history(4, static_cast<int>(state.range(0)));
  RenderOptions options;
  options.output_dir = out;
  options.regions = {"Global", "timestep"};
  options.badge_region = "Global";
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_report(tree, options));
  }
  fs::remove_all(out);
}
BENCHMARK(BM_RenderReport)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_BadgeSvg(benchmark::State& state) {
  const Badge badge{"timestep", "8x56", 0.87, BadgeColor::Green};
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_badge_svg(badge));
  }
}
BENCHMARK(BM_BadgeSvg);

static void BM_ZipRoundTrip(benchmark::State& state) {
  std::vector<ZipEntry> entries;
  for (const SourcedRun& s : history(4, static_cast<int>(state.range(0)))) {
    entries.push_back({"talp/exp/" + s.filename, serialize_run_measurement(s.run)});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(read_zip(write_zip(entries)));
  }
}
BENCHMARK(BM_ZipRoundTrip)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
