#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "io_util.hpp"
#include "report_detail.hpp"
#include "talp/errors.hpp"
#include "talp/report.hpp"

namespace talp {
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kStyle = R"(body{font-family:sans-serif;margin:2em;color:#222}
table{border-collapse:collapse;margin:1em 0}
th,td{border:1px solid #ccc;padding:3px 8px;text-align:right}
th.metric{text-align:left;font-weight:normal}
th.l1{padding-left:1.2em}th.l2{padding-left:2.4em}th.l3{padding-left:3.6em}
td.green{background:#c6efce}td.orange{background:#ffe0b2}td.red{background:#ffc7ce}
p.note{color:#666}ul.warnings{color:#a40}
)";

// Indentation level of each table row in the HTML view.
constexpr int kRowLevel[] = {0, 1, 1, 2, 2, 2, 2, 3, 3, 2, 3, 3, 3};

std::string html_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string url_encode_segment(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' ||
        c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += fmt::format("%{:02X}", c);
    }
  }
  return out;
}

std::string url_encode_path(std::string_view path) {
  std::string out;
  std::size_t start = 0;
  while (true) {
    const std::size_t slash = path.find('/', start);
    out += url_encode_segment(path.substr(start, slash - start));
    if (slash == std::string_view::npos) break;
    out += '/';
    start = slash + 1;
  }
  return out;
}

std::string file_safe(std::string_view s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  return out.empty() ? "_" : out;
}

std::string relative_root(std::string_view experiment) {
  std::string up = "../";
  for (char c : experiment) {
    if (c == '/') up += "../";
  }
  return up;
}

/// JSON embedded in a <script> element must not contain a closing tag.
std::string script_safe(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '<' && i + 1 < text.size() && text[i + 1] == '/') {
      out += "<\\/";
      ++i;
    } else {
      out += text[i];
    }
  }
  return out;
}

std::string badge_filename(std::string_view region, const ResourceConfig& config) {
  return fmt::format("{}_{}.svg", file_safe(region), config.label());
}

std::string page_head(std::string_view title) {
  return fmt::format(
      "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n"
      "<title>{}</title>\n<style>\n{}</style>\n</head>\n<body>\n",
      html_escape(title), kStyle);
}

std::string render_table_html(const EfficiencyTable& table, std::string_view csv_href) {
  std::string out;
  out += fmt::format(
      "<h3>Region <code>{}</code></h3>\n<p>{} scaling, reference {}. <a href=\"{}\">CSV</a></p>\n",
      html_escape(table.region), table.mode == ScalingMode::Weak ? "Weak" : "Strong",
      table.reference.label(), csv_href);
  out += "<table class=\"efficiency\">\n<thead><tr><th class=\"metric\">Resources (MPIxOpenMP)</th>";
  for (const TableColumn& c : table.columns) out += fmt::format("<th>{}</th>", c.config.label());
  out += "</tr></thead>\n<tbody>\n";

  const bool suppress_omp = table.mpi_only();
  const auto names = table_metric_names();
  for (std::size_t row = 0; row < names.size(); ++row) {
    if (suppress_omp && detail::is_openmp_row(row)) continue;
    out += fmt::format("<tr><th class=\"metric l{}\">{}</th>", kRowLevel[row], names[row]);
    const MetricKind kind =
        detail::is_scalability_row(row) ? MetricKind::Scalability : MetricKind::Efficiency;
    for (const TableColumn& c : table.columns) {
      const double v = detail::table_cell(c, row);
      out += fmt::format("<td class=\"{}\">{}</td>", to_string(color_for(round2(v), kind)),
                         format2(v));
    }
    out += "</tr>\n";
  }
  out += "</tbody>\n</table>\n";
  return out;
}

std::string render_history_html(const std::vector<TimeSeriesBundle>& series,
                                const std::vector<std::string>& regions) {
  std::string out;
  for (const TimeSeriesBundle& b : series) {
    out += fmt::format("<h3>{}</h3>\n<table class=\"history\">\n", b.config.label());
    out +=
        "<thead><tr><th>Timestamp</th><th>Commit</th><th>Region</th><th>Elapsed [s]</th>"
        "<th>Parallel efficiency</th><th>IPC</th><th>Frequency [GHz]</th>"
        "<th>Instructions</th></tr></thead>\n<tbody>\n";
    for (const SeriesPoint& p : b.points) {
      const std::string commit = p.commit_hash ? p.commit_hash->substr(0, 8) : std::string("-");
      for (const RegionPoint& r : p.regions) {
        if (std::find(regions.begin(), regions.end(), r.name) == regions.end()) continue;
        out += fmt::format(
            "<tr><td>{}</td><td><code>{}</code></td><td>{}</td><td>{:.3f}</td><td>{}</td>"
            "<td>{}</td><td>{}</td><td>{}</td></tr>\n",
            html_escape(p.timestamp.text()), commit, html_escape(r.name), r.metrics.elapsed_s,
            format2(r.metrics.parallel_efficiency), format2(r.metrics.ipc),
            format2(r.metrics.frequency_ghz), r.metrics.instructions);
      }
    }
    out += "</tbody>\n</table>\n";
  }
  return out;
}

struct BadgeRef {
  std::string href;  // relative to the output root
  std::string alt;
};

struct ExperimentSummary {
  std::string path;
  std::size_t runs = 0;
  std::vector<std::string> configs;
  std::vector<BadgeRef> badges;
};

class ReportWriter {
 public:
  ReportWriter(const ExperimentTree& tree, const RenderOptions& options)
      : tree_(tree), options_(options) {
    regions_.emplace_back(kGlobalRegion);
    for (const std::string& r : options.regions) {
      if (std::find(regions_.begin(), regions_.end(), r) == regions_.end()) regions_.push_back(r);
    }
    bundle_ = options.chart_bundle ? *options.chart_bundle : std::string(embedded_chart_bundle());
  }

  ReportBundle run() {
    if (tree_.experiments.empty()) {
      throw EmptyTree(fmt::format("no experiments found below '{}'", tree_.root.string()));
    }
    std::vector<ExperimentSummary> summaries;
    for (const auto& [path, runs] : tree_.experiments) summaries.push_back(experiment(path, runs));
    write_index(summaries);
    return std::move(result_);
  }

 private:
  void warn(const std::string& experiment, std::string message) {
    result_.warnings.push_back({experiment, std::move(message)});
  }

  void emit(const fs::path& path, std::string_view content, std::vector<fs::path>& list) {
    write_file(path, content);
    list.push_back(path);
  }

  ExperimentSummary experiment(const std::string& path, const std::vector<SourcedRun>& all_runs) {
    ExperimentSummary summary{path, all_runs.size(), {}, {}};
    const fs::path dir = options_.output_dir / fs::path(path);

    std::vector<SourcedRun> runs;
    for (const SourcedRun& r : all_runs) {
      if (validate_consistency(r.run).empty()) {
        runs.push_back(r);
      } else {
        warn(path, fmt::format("'{}' is inconsistent and was excluded", r.filename));
      }
    }

    ExperimentData data;
    data.experiment = path;
    data.regions = regions_;
    data.series = build_time_series(runs, path);
    for (const TimeSeriesBundle& b : data.series) summary.configs.push_back(b.config.label());

    std::string tables_html;
    for (const std::string& region : regions_) {
      std::vector<SourcedRun> with_region;
      std::copy_if(runs.begin(), runs.end(), std::back_inserter(with_region),
                   [&](const SourcedRun& r) { return r.run.find_region(region) != nullptr; });
      if (with_region.empty()) {
        warn(path, fmt::format("region '{}' not found in any run", region));
        continue;
      }
      if (with_region.size() != runs.size()) {
        warn(path, fmt::format("region '{}' missing in {} of {} runs", region,
                               runs.size() - with_region.size(), runs.size()));
      }
      EfficiencyTable table = build_efficiency_table(with_region, region);
      const std::string csv_name = fmt::format("table_{}.csv", file_safe(region));
      emit(dir / csv_name, export_table_csv(table), result_.tables);
      tables_html += render_table_html(table, url_encode_segment(csv_name));
      data.tables.push_back(std::move(table));
    }

    if (options_.badge_region) summary.badges = badges(path, runs);

    const std::string data_json = serialize_experiment_data(data);
    emit(dir / "data.json", data_json, result_.data_files);
    emit(dir / "index.html", page(path, summary, tables_html, data, data_json), result_.pages);
    return summary;
  }

  std::vector<BadgeRef> badges(const std::string& path, const std::vector<SourcedRun>& runs) {
    const std::string& region = *options_.badge_region;
    std::vector<SourcedRun> with_region;
    std::copy_if(runs.begin(), runs.end(), std::back_inserter(with_region),
                 [&](const SourcedRun& r) { return r.run.find_region(region) != nullptr; });
    if (with_region.empty()) {
      warn(path, fmt::format("badge region '{}' not found in any run", region));
      return {};
    }
    std::vector<BadgeRef> refs;
    for (const auto& [config, latest] : latest_per_config(with_region)) {
      const double pe = compute_pop_metrics(*latest.run.find_region(region), config)
                            .parallel_efficiency;
      const Badge badge{region, config.label(), pe,
                        color_for(round2(pe), MetricKind::Efficiency)};
      const std::string name = badge_filename(region, config);
      emit(options_.output_dir / "badges" / fs::path(path) / name, render_badge_svg(badge),
           result_.badges);
      refs.push_back({"badges/" + url_encode_path(path) + "/" + url_encode_segment(name),
                      fmt::format("PE {} {}: {}", region, config.label(), format2(pe))});
    }
    return refs;
  }

  std::string page(const std::string& path, const ExperimentSummary& summary,
                   const std::string& tables_html, const ExperimentData& data,
                   const std::string& data_json) const {
    const std::string root = relative_root(path);
    std::string out = page_head(path);
    out += fmt::format("<p><a href=\"{}index.html\">All experiments</a></p>\n", root);
    out += fmt::format("<h1>{}</h1>\n", html_escape(path));
    out += fmt::format("<p>{} runs, configurations: {}.</p>\n", summary.runs,
                       summary.configs.empty() ? std::string("none")
                                               : fmt::format("{}", fmt::join(summary.configs, ", ")));
    if (!summary.badges.empty()) {
      out += "<p class=\"badges\">";
      for (const BadgeRef& b : summary.badges) {
        out += fmt::format("<img src=\"{}{}\" alt=\"{}\"> ", root, b.href, html_escape(b.alt));
      }
      out += "</p>\n";
    }

    std::vector<std::string> warnings;
    for (const ReportWarning& w : result_.warnings) {
      if (w.experiment == path) warnings.push_back(w.message);
    }
    if (!warnings.empty()) {
      out += "<ul class=\"warnings\">\n";
      for (const auto& w : warnings) out += fmt::format("<li>{}</li>\n", html_escape(w));
      out += "</ul>\n";
    }

    out += "<h2>Scaling efficiency</h2>\n";
    out += tables_html.empty() ? "<p class=\"note\">No table could be computed.</p>\n" : tables_html;

    out += "<h2>Time evolution</h2>\n<div id=\"talp-charts\"></div>\n";
    if (bundle_.empty()) {
      out +=
          "<p class=\"note\">Interactive charts are not part of this build. The raw series are "
          "listed below and in <a href=\"data.json\">data.json</a>.</p>\n";
    } else {
      out += "<p class=\"note\">Raw data: <a href=\"data.json\">data.json</a>.</p>\n";
    }
    out += render_history_html(data.series, regions_);

    out += "<script type=\"application/json\" id=\"talp-data\">";
    out += script_safe(data_json);
    out += "</script>\n";
    if (!bundle_.empty()) {
      out += "<script>\n";
      out += script_safe(bundle_);
      out += "\n</script>\n";
    }
    out += "</body>\n</html>\n";
    return out;
  }

  void write_index(const std::vector<ExperimentSummary>& summaries) {
    std::string out = page_head("Performance report");
    out += "<h1>Performance report</h1>\n<ul class=\"experiments\">\n";
    for (const ExperimentSummary& s : summaries) {
      out += fmt::format("<li><a href=\"{}/index.html\">{}</a> ({} runs)", url_encode_path(s.path),
                         html_escape(s.path), s.runs);
      for (const BadgeRef& b : s.badges) {
        out += fmt::format(" <img src=\"{}\" alt=\"{}\">", b.href, html_escape(b.alt));
      }
      out += "</li>\n";
    }
    out += "</ul>\n</body>\n</html>\n";
    result_.index = options_.output_dir / "index.html";
    write_file(result_.index, out);
  }

  const ExperimentTree& tree_;
  const RenderOptions& options_;
  std::vector<std::string> regions_;
  std::string bundle_;
  ReportBundle result_;
};

}  // namespace

ReportBundle render_report(const ExperimentTree& tree, const RenderOptions& options) {
  return ReportWriter(tree, options).run();
}

}  // namespace talp
