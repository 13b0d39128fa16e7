#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include <fmt/format.h>
#include <json.hpp>

#include "talp/errors.hpp"
#include "talp/report.hpp"
#include "report_detail.hpp"

namespace talp {
using ojson = nlohmann::ordered_json;

std::vector<TimeSeriesBundle> build_time_series(std::span<const SourcedRun> runs,
                                                std::string_view experiment) {
  std::map<ResourceConfig, std::vector<const SourcedRun*>> by_config;
  for (const SourcedRun& r : runs) by_config[r.run.resources].push_back(&r);

  std::vector<TimeSeriesBundle> bundles;
  for (auto& [config, group] : by_config) {
    std::sort(group.begin(), group.end(), [](const SourcedRun* a, const SourcedRun* b) {
      return chronologically_before(*a, *b);
    });
    TimeSeriesBundle bundle{std::string(experiment), config, {}};
    for (const SourcedRun* r : group) {
      SeriesPoint point;
      point.timestamp = resolve_timestamp(r->run);
      if (r->run.git) point.commit_hash = r->run.git->commit_hash;
      for (const RegionMeasurement& region : r->run.regions) {
        point.regions.push_back({region.name, compute_pop_metrics(region, config)});
      }
      bundle.points.push_back(std::move(point));
    }
    bundles.push_back(std::move(bundle));
  }
  return bundles;
}

std::string_view to_string(BadgeColor color) {
  switch (color) {
    case BadgeColor::Green: return "green";
    case BadgeColor::Orange: return "orange";
    case BadgeColor::Red: return "red";
  }
  return "red";
}

std::string_view hex_color(BadgeColor color) {
  switch (color) {
    case BadgeColor::Green: return "#4c1";
    case BadgeColor::Orange: return "#fe7d37";
    case BadgeColor::Red: return "#e05d44";
  }
  return "#e05d44";
}

BadgeColor color_for(double value, MetricKind kind) {
  if (kind == MetricKind::Scalability && value > 1.0) return BadgeColor::Green;
  if (value >= 0.80) return BadgeColor::Green;
  if (value >= 0.50) return BadgeColor::Orange;
  return BadgeColor::Red;
}

double round2(double value) {
  // The epsilon lifts decimal ties such as 1.005 (stored as 1.00499...) upwards.
  return std::floor(value * 100.0 + 0.5 + 1e-9) / 100.0;
}

std::string format2(double value) { return fmt::format("{:.2f}", round2(value)); }

namespace {

std::size_t display_width(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(
      s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_badge_svg(const Badge& badge) {
  const std::string left = fmt::format("PE {} {}", badge.region, badge.config_label);
  const std::string right = format2(badge.value);
  const std::size_t left_w = 10 + 6 * display_width(left) + 5;
  const std::size_t right_w = 5 + 6 * display_width(right) + 10;
  const std::size_t width = left_w + right_w;
  const std::string label = xml_escape(left + ": " + right);

  std::string svg;
  svg += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"20\" role=\"img\" "
      "aria-label=\"{}\">\n",
      width, label);
  svg += fmt::format("  <title>{}</title>\n", label);
  svg += fmt::format("  <rect width=\"{}\" height=\"20\" fill=\"#555\"/>\n", left_w);
  svg += fmt::format("  <rect x=\"{}\" width=\"{}\" height=\"20\" fill=\"{}\"/>\n", left_w,
                     right_w, hex_color(badge.color));
  svg +=
      "  <g fill=\"#fff\" text-anchor=\"middle\" "
      "font-family=\"Verdana,Geneva,DejaVu Sans,sans-serif\" font-size=\"11\">\n";
  svg += fmt::format("    <text x=\"{}\" y=\"14\">{}</text>\n", static_cast<double>(left_w) / 2.0,
                     xml_escape(left));
  svg += fmt::format("    <text x=\"{}\" y=\"14\">{}</text>\n",
                     static_cast<double>(left_w) + static_cast<double>(right_w) / 2.0,
                     xml_escape(right));
  svg += "  </g>\n</svg>\n";
  return svg;
}

// ---------------------------------------------------------------------- table

namespace {

constexpr std::array<std::string_view, 13> kMetricNames{
    "Global efficiency",
    "Parallel efficiency",
    "Computation scalability",
    "IPC scalability",
    "Instruction scalability",
    "Frequency scalability",
    "MPI Parallel efficiency",
    "MPI Load balance",
    "MPI Communication efficiency",
    "OpenMP Parallel efficiency",
    "OpenMP Load Balance",
    "OpenMP Scheduling efficiency",
    "OpenMP Serialization efficiency",
};

double metric_value(const TableColumn& c, std::size_t row) {
  switch (row) {
    case 0: return c.factors.global_efficiency;
    case 1: return c.metrics.parallel_efficiency;
    case 2: return c.factors.computation_scalability;
    case 3: return c.factors.ipc_scalability;
    case 4: return c.factors.instruction_scalability;
    case 5: return c.factors.frequency_scalability;
    case 6: return c.metrics.mpi_parallel_efficiency;
    case 7: return c.metrics.mpi_load_balance;
    case 8: return c.metrics.mpi_communication_efficiency;
    case 9: return c.metrics.omp_parallel_efficiency;
    case 10: return c.metrics.omp_load_balance;
    case 11: return c.metrics.omp_scheduling_efficiency;
    default: return c.metrics.omp_serialization_efficiency;
  }
}

}  // namespace

std::span<const std::string_view> table_metric_names() { return kMetricNames; }

namespace detail {

// Shared with the HTML renderer.
bool is_openmp_row(std::size_t row) { return row >= 9; }
bool is_scalability_row(std::size_t row) { return row >= 2 && row <= 5; }
double table_cell(const TableColumn& c, std::size_t row) { return metric_value(c, row); }

}  // namespace detail

std::string export_table_csv(const EfficiencyTable& table) {
  std::string out = "metric";
  for (const TableColumn& c : table.columns) out += "," + c.config.label();
  out += "\n";
  const bool suppress_omp = table.mpi_only();
  for (std::size_t row = 0; row < kMetricNames.size(); ++row) {
    out += kMetricNames[row];
    for (const TableColumn& c : table.columns) {
      out += ",";
      out += suppress_omp && detail::is_openmp_row(row) ? std::string("-")
                                                         : format2(metric_value(c, row));
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------- data island

namespace {

ojson config_json(const ResourceConfig& c) {
  ojson j;
  j["mpi_ranks"] = c.mpi_ranks;
  j["omp_threads"] = c.omp_threads;
  j["label"] = c.label();
  return j;
}

ojson metrics_json(const PopMetrics& m) {
  ojson j;
  j["elapsed_s"] = m.elapsed_s;
  j["parallel_efficiency"] = m.parallel_efficiency;
  j["mpi_parallel_efficiency"] = m.mpi_parallel_efficiency;
  j["mpi_load_balance"] = m.mpi_load_balance;
  j["mpi_communication_efficiency"] = m.mpi_communication_efficiency;
  j["omp_parallel_efficiency"] = m.omp_parallel_efficiency;
  j["omp_load_balance"] = m.omp_load_balance;
  j["omp_scheduling_efficiency"] = m.omp_scheduling_efficiency;
  j["omp_serialization_efficiency"] = m.omp_serialization_efficiency;
  j["ipc"] = m.ipc;
  j["frequency_ghz"] = m.frequency_ghz;
  j["instructions"] = m.instructions;
  return j;
}

ojson factors_json(const ScalingFactors& f) {
  ojson j;
  j["ipc_scalability"] = f.ipc_scalability;
  j["instruction_scalability"] = f.instruction_scalability;
  j["frequency_scalability"] = f.frequency_scalability;
  j["computation_scalability"] = f.computation_scalability;
  j["global_efficiency"] = f.global_efficiency;
  return j;
}

ojson bundle_json(const TimeSeriesBundle& b) {
  ojson j;
  j["experiment"] = b.experiment;
  j["config"] = config_json(b.config);
  ojson points = ojson::array();
  for (const SeriesPoint& p : b.points) {
    ojson pj;
    pj["timestamp"] = p.timestamp.text();
    pj["commit_hash"] = p.commit_hash ? ojson(*p.commit_hash) : ojson(nullptr);
    ojson regions = ojson::array();
    for (const RegionPoint& r : p.regions) {
      ojson rj;
      rj["name"] = r.name;
      rj["elapsed_s"] = r.metrics.elapsed_s;
      rj["ipc"] = r.metrics.ipc;
      rj["frequency_ghz"] = r.metrics.frequency_ghz;
      rj["instructions"] = r.metrics.instructions;
      rj["metrics"] = metrics_json(r.metrics);
      regions.push_back(std::move(rj));
    }
    pj["regions"] = std::move(regions);
    points.push_back(std::move(pj));
  }
  j["points"] = std::move(points);
  return j;
}

ojson table_json(const EfficiencyTable& t) {
  ojson j;
  j["region"] = t.region;
  j["mode"] = std::string(to_string(t.mode));
  j["reference"] = config_json(t.reference);
  ojson cols = ojson::array();
  for (const TableColumn& c : t.columns) {
    ojson cj;
    cj["config"] = config_json(c.config);
    cj["metrics"] = metrics_json(c.metrics);
    cj["factors"] = factors_json(c.factors);
    cj["timestamp"] = c.timestamp.text();
    cj["source"] = c.source;
    cols.push_back(std::move(cj));
  }
  j["columns"] = std::move(cols);
  return j;
}

// Reading back. at() throws nlohmann exceptions that are mapped to SchemaError.

ResourceConfig config_from(const ojson& j) {
  return ResourceConfig::make(j.at("mpi_ranks").get<int>(), j.at("omp_threads").get<int>());
}

PopMetrics metrics_from(const ojson& j) {
  PopMetrics m;
  m.elapsed_s = j.at("elapsed_s").get<double>();
  m.parallel_efficiency = j.at("parallel_efficiency").get<double>();
  m.mpi_parallel_efficiency = j.at("mpi_parallel_efficiency").get<double>();
  m.mpi_load_balance = j.at("mpi_load_balance").get<double>();
  m.mpi_communication_efficiency = j.at("mpi_communication_efficiency").get<double>();
  m.omp_parallel_efficiency = j.at("omp_parallel_efficiency").get<double>();
  m.omp_load_balance = j.at("omp_load_balance").get<double>();
  m.omp_scheduling_efficiency = j.at("omp_scheduling_efficiency").get<double>();
  m.omp_serialization_efficiency = j.at("omp_serialization_efficiency").get<double>();
  m.ipc = j.at("ipc").get<double>();
  m.frequency_ghz = j.at("frequency_ghz").get<double>();
  m.instructions = j.at("instructions").get<std::int64_t>();
  return m;
}

ScalingFactors factors_from(const ojson& j) {
  ScalingFactors f;
  f.ipc_scalability = j.at("ipc_scalability").get<double>();
  f.instruction_scalability = j.at("instruction_scalability").get<double>();
  f.frequency_scalability = j.at("frequency_scalability").get<double>();
  f.computation_scalability = j.at("computation_scalability").get<double>();
  f.global_efficiency = j.at("global_efficiency").get<double>();
  return f;
}

Timestamp timestamp_from(const ojson& j) {
  const auto text = j.get<std::string>();
  auto ts = Timestamp::parse(text);
  if (!ts) throw SchemaError("timestamp", "", fmt::format("invalid timestamp '{}'", text));
  return *ts;
}

TimeSeriesBundle bundle_from(const ojson& j) {
  TimeSeriesBundle b;
  b.experiment = j.at("experiment").get<std::string>();
  b.config = config_from(j.at("config"));
  for (const ojson& pj : j.at("points")) {
    SeriesPoint p;
    p.timestamp = timestamp_from(pj.at("timestamp"));
    if (const ojson& h = pj.at("commit_hash"); !h.is_null()) p.commit_hash = h.get<std::string>();
    for (const ojson& rj : pj.at("regions")) {
      p.regions.push_back({rj.at("name").get<std::string>(), metrics_from(rj.at("metrics"))});
    }
    b.points.push_back(std::move(p));
  }
  return b;
}

EfficiencyTable table_from(const ojson& j) {
  EfficiencyTable t;
  t.region = j.at("region").get<std::string>();
  const auto mode = j.at("mode").get<std::string>();
  if (mode != "weak" && mode != "strong") {
    throw SchemaError("mode", "", fmt::format("unknown scaling mode '{}'", mode));
  }
  t.mode = mode == "weak" ? ScalingMode::Weak : ScalingMode::Strong;
  t.reference = config_from(j.at("reference"));
  for (const ojson& cj : j.at("columns")) {
    TableColumn c;
    c.config = config_from(cj.at("config"));
    c.metrics = metrics_from(cj.at("metrics"));
    c.factors = factors_from(cj.at("factors"));
    c.timestamp = timestamp_from(cj.at("timestamp"));
    c.source = cj.at("source").get<std::string>();
    t.columns.push_back(std::move(c));
  }
  return t;
}

}  // namespace

std::string serialize_experiment_data(const ExperimentData& data) {
  ojson doc;
  doc["experiment"] = data.experiment;
  doc["regions"] = data.regions;
  ojson series = ojson::array();
  for (const auto& b : data.series) series.push_back(bundle_json(b));
  doc["series"] = std::move(series);
  ojson tables = ojson::array();
  for (const auto& t : data.tables) tables.push_back(table_json(t));
  doc["tables"] = std::move(tables);
  return doc.dump(1);
}

ExperimentData parse_experiment_data(std::string_view json) {
  try {
    const ojson doc = ojson::parse(json.begin(), json.end());
    ExperimentData data;
    data.experiment = doc.at("experiment").get<std::string>();
    if (auto it = doc.find("regions"); it != doc.end()) {
      data.regions = it->get<std::vector<std::string>>();
    }
    for (const ojson& b : doc.at("series")) data.series.push_back(bundle_from(b));
    for (const ojson& t : doc.at("tables")) data.tables.push_back(table_from(t));
    return data;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("", "", fmt::format("malformed experiment data: {}", e.what()));
  } catch (const DomainError& e) {
    throw SchemaError("config", "", fmt::format("malformed experiment data: {}", e.what()));
  }
}

}  // namespace talp
