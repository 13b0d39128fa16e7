#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <stdexcept>

#include <CLI11.hpp>

#include "talp/errors.hpp"
#include "talp/report.hpp"

namespace talp::cli {
namespace fs = std::filesystem;

namespace {

enum class Level { Trace, Debug, Info, Warning, Error, Silent };

const std::map<std::string, Level>& level_names() {
  static const std::map<std::string, Level> names{
      {"trace", Level::Trace}, {"debug", Level::Debug},     {"info", Level::Info},
      {"warning", Level::Warning}, {"warn", Level::Warning}, {"error", Level::Error},
      {"silent", Level::Silent},
  };
  return names;
}

class Diagnostics {
 public:
  Diagnostics(Context& ctx, const std::string& level)
      : ctx_(ctx), level_(level_names().at(level)) {}

  void info(const std::string& msg) const { emit(Level::Info, "info", msg); }
  void warn(const std::string& msg) const { emit(Level::Warning, "warning", msg); }
  void error(const std::string& msg) const { ctx_.err << "error: " << msg << '\n'; }

  /// Machine-readable summary on standard output.
  void summary(const std::string& line) const {
    if (level_ != Level::Silent) ctx_.out << line << '\n';
  }

 private:
  void emit(Level at, const char* tag, const std::string& msg) const {
    if (level_ <= at && level_ != Level::Silent) ctx_.err << tag << ": " << msg << '\n';
  }

  Context& ctx_;
  Level level_;
};

std::optional<std::string> env_value(const Context& ctx, const char* key) {
  auto it = ctx.env.find(key);
  if (it == ctx.env.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

struct ReportArgs {
  std::string input;
  std::string output;
  std::vector<std::string> regions;
  std::string badge_region;
};

int ci_report(const ReportArgs& args, const Diagnostics& log) {
  ExperimentTree tree;
  try {
    tree = scan_experiment_tree(args.input);
  } catch (const IoError& e) {
    log.error(e.what());
    return kInputError;
  }
  for (const ScanWarning& w : tree.warnings) log.warn(w.path.string() + ": " + w.message);
  if (tree.experiments.empty()) {
    log.error("no experiments found below '" + args.input + "'");
    return kEmptyInput;
  }

  RenderOptions options;
  options.output_dir = args.output;
  options.regions = args.regions;
  if (!args.badge_region.empty()) options.badge_region = args.badge_region;
  try {
    const ReportBundle bundle = render_report(tree, options);
    for (const ReportWarning& w : bundle.warnings) log.warn(w.experiment + ": " + w.message);
    log.info("report written to " + bundle.index.string());
    log.summary("experiments=" + std::to_string(bundle.pages.size()) +
                " badges=" + std::to_string(bundle.badges.size()) +
                " warnings=" + std::to_string(tree.warnings.size() + bundle.warnings.size()));
  } catch (const EmptyTree& e) {
    log.error(e.what());
    return kEmptyInput;
  } catch (const Error& e) {
    log.error(e.what());
    return kInputError;
  }
  return kSuccess;
}

int metadata(const std::string& dir, Context& ctx, const Diagnostics& log) {
  const GitCommandProvider git;
  const CommitInfoProvider& vcs = ctx.vcs ? *ctx.vcs : git;
  try {
    const int updated = inject_git_metadata(dir, ctx.env, vcs);
    log.info("added git metadata to " + std::to_string(updated) + " file(s)");
    log.summary(std::to_string(updated));
    return kSuccess;
  } catch (const Error& e) {
    log.error(e.what());
    return kInputError;
  }
}

struct DownloadArgs {
  std::string gitlab_url;
  std::string project_id;
  std::string job_name;
  std::string ref;
  std::string output_file;
  std::string token;
};

int download_gitlab(const DownloadArgs& args, Context& ctx, const Diagnostics& log) {
  ArtifactSource src;
  src.base_url = args.gitlab_url.empty() ? env_value(ctx, "CI_API_V4_URL").value_or("")
                                         : args.gitlab_url;
  src.project_id = args.project_id.empty() ? env_value(ctx, "CI_PROJECT_ID").value_or("")
                                           : args.project_id;
  src.job_name = args.job_name;
  src.ref = args.ref;
  if (!args.token.empty()) {
    src.token = args.token;
  } else if (auto t = env_value(ctx, "GITLAB_PRIVATE_TOKEN")) {
    src.token = *t;
  } else if (auto j = env_value(ctx, "CI_JOB_TOKEN")) {
    src.token = *j;
    src.token_kind = TokenKind::Job;
  } else {
    log.warn("no token given; the request is sent unauthenticated");
  }
  if (src.base_url.empty()) {
    log.error("--gitlab-url is required when CI_API_V4_URL is not set");
    return kUsageError;
  }
  if (src.project_id.empty()) {
    log.error("--project-id is required when CI_PROJECT_ID is not set");
    return kUsageError;
  }
  try {
    validate_source(src);
  } catch (const std::invalid_argument& e) {
    log.error(e.what());
    return kUsageError;
  }

  std::string archive;
  try {
    archive = download_artifacts(src, ctx.retry, [&](std::string_view m) { log.info(std::string(m)); });
  } catch (const NotFound&) {
    log.info("no previous artifacts");
    return kSuccess;
  } catch (const AuthError& e) {
    log.error(e.what());
    return kNetworkError;
  } catch (const TransportError& e) {
    log.error(e.what());
    return kNetworkError;
  }

  try {
    const fs::path out = args.output_file;
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    std::ofstream file(out, std::ios::binary | std::ios::trunc);
    file.write(archive.data(), static_cast<std::streamsize>(archive.size()));
    file.close();
    if (!file) throw IoError("cannot write '" + out.string() + "'");
  } catch (const std::exception& e) {
    log.error(e.what());
    return kInputError;
  }
  log.info("saved " + std::to_string(archive.size()) + " bytes to " + args.output_file);
  log.summary(std::to_string(archive.size()));
  return kSuccess;
}

}  // namespace

Environment process_environment() {
  Environment env;
  for (const char* key :
       {"CI_COMMIT_SHA", "CI_COMMIT_BRANCH", "CI_COMMIT_REF_NAME", "CI_COMMIT_TIMESTAMP",
        "GITLAB_PRIVATE_TOKEN", "CI_JOB_TOKEN", "CI_API_V4_URL", "CI_PROJECT_ID"}) {
    if (const char* v = std::getenv(key)) env[key] = v;
  }
  return env;
}

int run(const std::vector<std::string>& args, Context& ctx) {
  CLI::App app{"Continuous performance reports from TALP measurement files", "talp"};
  app.require_subcommand(1);

  std::vector<std::string> log_levels;
  for (const auto& [name, _] : level_names()) log_levels.push_back(name);
  std::string log_level = "info";
  auto add_log_level = [&](CLI::App* sub) {
    sub->add_option("--log-level", log_level, "Diagnostics verbosity")
        ->check(CLI::IsMember(log_levels));
  };

  ReportArgs report;
  auto* ci = app.add_subcommand("ci-report", "Generate the HTML report from an experiment tree");
  ci->add_option("-i,--input", report.input, "Top-level folder containing the experiments")
      ->required();
  ci->add_option("-o,--output", report.output, "Output directory of the report")->required();
  ci->add_option("--regions", report.regions, "Regions to tabulate (Global is always included)");
  ci->add_option("--region-for-badge", report.badge_region,
                 "Region whose parallel efficiency is shown in the badges");
  add_log_level(ci);

  std::string metadata_dir;
  auto* meta = app.add_subcommand("metadata", "Add git metadata to measurement files in place");
  meta->add_option("-i,--input", metadata_dir, "Folder with measurement files")->required();
  add_log_level(meta);

  DownloadArgs download;
  auto* dl = app.add_subcommand("download-gitlab",
                                "Download the artifacts of the previous pipeline from GitLab");
  dl->add_option("--gitlab-url", download.gitlab_url, "GitLab URL (default: CI_API_V4_URL)");
  dl->add_option("--project-id", download.project_id, "Project id or path (default: CI_PROJECT_ID)");
  dl->add_option("--job-name", download.job_name, "Job that produced the artifacts")->required();
  dl->add_option("--ref", download.ref, "Branch or tag")->required();
  dl->add_option("--output-file", download.output_file, "Where to store the zip archive")
      ->required();
  dl->add_option("--token", download.token,
                 "Access token (default: GITLAB_PRIVATE_TOKEN, then CI_JOB_TOKEN)");
  add_log_level(dl);

  std::vector<std::string> argv_storage{"talp"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, ctx.out, ctx.err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, ctx.out, ctx.err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, ctx.out, ctx.err);
    ctx.err << app.help();
    return kUsageError;
  }

  const Diagnostics log(ctx, log_level);
  if (ci->parsed()) return ci_report(report, log);
  if (meta->parsed()) return metadata(metadata_dir, ctx, log);
  return download_gitlab(download, ctx, log);
}

}  // namespace talp::cli
