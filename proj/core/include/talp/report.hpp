#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "talp/measurement.hpp"
#include "talp/pop_model.hpp"
#include "talp/scaling.hpp"

namespace talp {

// ---------------------------------------------------------------- time series

struct RegionPoint {
  std::string name;
  PopMetrics metrics;  // carries elapsed_s, ipc, frequency_ghz, instructions

  friend bool operator==(const RegionPoint&, const RegionPoint&) = default;
};

struct SeriesPoint {
  Timestamp timestamp;  // resolved
  std::optional<std::string> commit_hash;
  std::vector<RegionPoint> regions;

  friend bool operator==(const SeriesPoint&, const SeriesPoint&) = default;
};

struct TimeSeriesBundle {
  std::string experiment;
  ResourceConfig config;
  std::vector<SeriesPoint> points;  // ascending resolved timestamp

  friend bool operator==(const TimeSeriesBundle&, const TimeSeriesBundle&) = default;
};

/// One bundle per configuration (ascending), holding the full history.
/// Propagates DomainError from compute_pop_metrics.
std::vector<TimeSeriesBundle> build_time_series(std::span<const SourcedRun> runs,
                                                std::string_view experiment);

// --------------------------------------------------------------------- colors

enum class BadgeColor { Green, Orange, Red };
enum class MetricKind { Efficiency, Scalability };

std::string_view to_string(BadgeColor color);
/// Hex fill used in badges and table cells.
std::string_view hex_color(BadgeColor color);

/// >= 0.80 green, >= 0.50 orange, else red. Scalabilities above 1.0 are green.
BadgeColor color_for(double value, MetricKind kind);

/// Half-up rounding to two decimals and its "%.2f" text.
double round2(double value);
std::string format2(double value);

// ---------------------------------------------------------------------- badge

struct Badge {
  std::string region;
  std::string config_label;
  double value = 0.0;
  BadgeColor color = BadgeColor::Green;
};

/// Flat two-panel SVG, 20 px high: "PE {region} {config}" on slate, the
/// value on the status color. Width is 10 + 6*len(left) + 10 + 6*len(value) + 10.
std::string render_badge_svg(const Badge& badge);

// ---------------------------------------------------------------------- table

/// Row labels in display order.
std::span<const std::string_view> table_metric_names();

/// "metric,{labels...}" followed by one row per metric; OpenMP rows read "-"
/// for MPI-only tables.
std::string export_table_csv(const EfficiencyTable& table);

// ---------------------------------------------------------------- data island

struct ExperimentData {
  std::string experiment;
  std::vector<std::string> regions;  // highlighted selection
  std::vector<TimeSeriesBundle> series;
  std::vector<EfficiencyTable> tables;
};

std::string serialize_experiment_data(const ExperimentData& data);
/// Throws SchemaError on malformed input.
ExperimentData parse_experiment_data(std::string_view json);

// --------------------------------------------------------------------- render

struct RenderOptions {
  std::filesystem::path output_dir;
  std::vector<std::string> regions;  // "Global" is always added
  std::optional<std::string> badge_region;
  /// Script inlined into experiment pages. nullopt selects the bundle
  /// embedded at build time (which may be empty).
  std::optional<std::string> chart_bundle;
};

struct ReportWarning {
  std::string experiment;
  std::string message;
};

struct ReportBundle {
  std::filesystem::path index;
  std::vector<std::filesystem::path> pages;
  std::vector<std::filesystem::path> data_files;
  std::vector<std::filesystem::path> badges;
  std::vector<std::filesystem::path> tables;
  std::vector<ReportWarning> warnings;
};

/// Writes:
///   out/index.html
///   out/<experiment>/index.html, data.json, table_<region>.csv
///   out/badges/<experiment>/<region>_<config>.svg
/// Throws EmptyTree when the tree has no experiments, IoError on write failure.
ReportBundle render_report(const ExperimentTree& tree, const RenderOptions& options);

/// Chart script compiled into the library; empty when none was configured.
std::string_view embedded_chart_bundle();

}  // namespace talp
