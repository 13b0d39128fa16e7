#include "talp/scaling.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "talp/errors.hpp"

namespace talp {

std::string_view to_string(ScalingMode mode) {
  return mode == ScalingMode::Weak ? "weak" : "strong";
}

bool EfficiencyTable::mpi_only() const {
  return !columns.empty() && std::all_of(columns.begin(), columns.end(), [](const TableColumn& c) {
    return c.config.omp_threads == 1;
  });
}

std::map<ResourceConfig, SourcedRun> latest_per_config(std::span<const SourcedRun> runs) {
  std::map<ResourceConfig, SourcedRun> latest;
  for (const SourcedRun& run : runs) {
    auto [it, inserted] = latest.try_emplace(run.run.resources, run);
    if (!inserted && chronologically_before(it->second, run)) it->second = run;
  }
  return latest;
}

ResourceConfig select_reference(const std::set<ResourceConfig>& configs) {
  if (configs.empty()) throw DomainError("cannot select a reference from no configurations");
  return *configs.begin();  // ResourceConfig orders by total CPUs, then ranks
}

namespace {

double per_cpu(const ScalingPoint& p) {
  return static_cast<double>(p.instructions) / static_cast<double>(p.config.total_cpus());
}

}  // namespace

ScalingMode detect_scaling_mode(std::span<const ScalingPoint> points,
                                const ResourceConfig& reference) {
  auto ref = std::find_if(points.begin(), points.end(),
                          [&](const ScalingPoint& p) { return p.config == reference; });
  if (ref == points.end()) {
    throw DomainError(fmt::format("reference {} not among scaling points", reference.label()));
  }
  const double ref_rate = per_cpu(*ref);
  for (const ScalingPoint& p : points) {
    // Tiny slack so that an exact 10% deviation is not lost to rounding.
    if (std::abs(per_cpu(p) - ref_rate) / ref_rate > kWeakScalingTolerance + 1e-12) {
      return ScalingMode::Strong;
    }
  }
  return ScalingMode::Weak;
}

double instruction_scaling(const ScalingPoint& target, const ScalingPoint& reference,
                           ScalingMode mode) {
  if (target.instructions <= 0 || reference.instructions <= 0) {
    throw DomainError("instruction counts must be positive");
  }
  if (mode == ScalingMode::Strong) {
    return static_cast<double>(reference.instructions) / static_cast<double>(target.instructions);
  }
  return per_cpu(reference) / per_cpu(target);
}

ScalingFactors scaling_factors(const MetricsAt& target, const MetricsAt& reference,
                               ScalingMode mode) {
  ScalingFactors f;
  f.ipc_scalability = target.metrics.ipc / reference.metrics.ipc;
  f.frequency_scalability = target.metrics.frequency_ghz / reference.metrics.frequency_ghz;
  f.instruction_scalability =
      instruction_scaling({target.config, target.metrics.instructions},
                          {reference.config, reference.metrics.instructions}, mode);
  f.computation_scalability =
      f.ipc_scalability * f.instruction_scalability * f.frequency_scalability;
  f.global_efficiency = target.metrics.parallel_efficiency * f.computation_scalability;
  return f;
}

EfficiencyTable build_efficiency_table(std::span<const SourcedRun> runs, std::string_view region) {
  if (runs.empty()) throw DomainError("cannot build a table from no runs");
  for (const SourcedRun& r : runs) {
    if (r.run.find_region(region) == nullptr) {
      throw RegionMissing(std::string(region), r.filename,
                          fmt::format("region '{}' missing in '{}'", region, r.filename));
    }
  }

  const auto latest = latest_per_config(runs);
  std::set<ResourceConfig> configs;
  std::vector<ScalingPoint> points;
  for (const auto& [config, run] : latest) {
    configs.insert(config);
    points.push_back({config, run.run.find_region(region)->instructions});
  }

  EfficiencyTable table;
  table.region = std::string(region);
  table.reference = select_reference(configs);
  table.mode = detect_scaling_mode(points, table.reference);

  for (const auto& [config, run] : latest) {
    TableColumn col;
    col.config = config;
    col.metrics = compute_pop_metrics(*run.run.find_region(region), config);
    col.timestamp = resolve_timestamp(run.run);
    col.source = run.filename;
    table.columns.push_back(std::move(col));
  }
  // std::map ordering already puts the reference (smallest config) first.
  const MetricsAt ref{table.columns.front().config, table.columns.front().metrics};
  for (TableColumn& col : table.columns) {
    col.factors = scaling_factors({col.config, col.metrics}, ref, table.mode);
  }
  return table;
}

}  // namespace talp
