#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "talp/measurement.hpp"
#include "talp/pop_model.hpp"

namespace talp {

enum class ScalingMode { Weak, Strong };

std::string_view to_string(ScalingMode mode);

/// Relative per-CPU instruction deviation tolerated for weak scaling (inclusive).
inline constexpr double kWeakScalingTolerance = 0.10;

struct ScalingFactors {
  double ipc_scalability = 1.0;
  double instruction_scalability = 1.0;
  double frequency_scalability = 1.0;
  double computation_scalability = 1.0;
  double global_efficiency = 1.0;

  friend bool operator==(const ScalingFactors&, const ScalingFactors&) = default;
};

struct TableColumn {
  ResourceConfig config;
  PopMetrics metrics;
  ScalingFactors factors;
  Timestamp timestamp;  // resolved timestamp of the run used
  std::string source;   // file the column was computed from
};

struct EfficiencyTable {
  std::string region;
  ScalingMode mode = ScalingMode::Weak;
  ResourceConfig reference;
  std::vector<TableColumn> columns;  // reference first, then ascending resources

  /// True when every column ran with a single OpenMP thread.
  bool mpi_only() const;
};

/// Newest run per configuration, by chronologically_before.
std::map<ResourceConfig, SourcedRun> latest_per_config(std::span<const SourcedRun> runs);

/// Configuration with the fewest total CPUs, ties by fewer ranks.
/// Throws DomainError when `configs` is empty.
ResourceConfig select_reference(const std::set<ResourceConfig>& configs);

struct ScalingPoint {
  ResourceConfig config;
  std::int64_t instructions = 0;
};

/// Weak iff every point's instructions per CPU lie within
/// kWeakScalingTolerance (relative) of the reference's; Strong otherwise.
ScalingMode detect_scaling_mode(std::span<const ScalingPoint> points,
                                const ResourceConfig& reference);

/// Strong: N_ref / N_t. Weak: (N_ref / P_ref) / (N_t / P_t).
double instruction_scaling(const ScalingPoint& target, const ScalingPoint& reference,
                           ScalingMode mode);

struct MetricsAt {
  ResourceConfig config;
  PopMetrics metrics;
};

ScalingFactors scaling_factors(const MetricsAt& target, const MetricsAt& reference,
                               ScalingMode mode);

/// Scaling-efficiency table of `region` over one experiment folder.
/// Throws RegionMissing naming the first run lacking the region, or a
/// propagated DomainError.
EfficiencyTable build_efficiency_table(std::span<const SourcedRun> runs, std::string_view region);

}  // namespace talp
