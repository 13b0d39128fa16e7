#include "talp/measurement.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "talp/errors.hpp"
#include "io_util.hpp"

namespace talp {
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

ResourceConfig ResourceConfig::make(int mpi_ranks, int omp_threads) {
  if (mpi_ranks < 1 || omp_threads < 1) {
    throw DomainError(
        fmt::format("resource counts must be >= 1, got {}x{}", mpi_ranks, omp_threads));
  }
  return ResourceConfig{mpi_ranks, omp_threads};
}

std::string ResourceConfig::label() const { return fmt::format("{}x{}", mpi_ranks, omp_threads); }

bool is_commit_hash(std::string_view hash) {
  return hash.size() == 40 && std::all_of(hash.begin(), hash.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

const RegionMeasurement* RunMeasurement::find_region(std::string_view name) const {
  auto it = std::find_if(regions.begin(), regions.end(),
                         [&](const RegionMeasurement& r) { return r.name == name; });
  return it == regions.end() ? nullptr : &*it;
}

namespace {

[[noreturn]] void schema_fail(const std::string& field, const std::string& pointer,
                              const std::string& why) {
  throw SchemaError(field, pointer, fmt::format("field '{}' at {}: {}", field, pointer, why));
}

const ojson& require(const ojson& obj, const std::string& key, const std::string& parent) {
  const std::string pointer = parent + "/" + key;
  auto it = obj.find(key);
  if (it == obj.end()) schema_fail(key, pointer, "missing required field");
  return *it;
}

std::int64_t require_int(const ojson& obj, const std::string& key, const std::string& parent) {
  const ojson& v = require(obj, key, parent);
  const std::string pointer = parent + "/" + key;
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(INT64_MAX)) schema_fail(key, pointer, "integer out of range");
    return static_cast<std::int64_t>(u);
  }
  if (v.is_number_integer()) return v.get<std::int64_t>();
  schema_fail(key, pointer, fmt::format("expected integer, got {}", v.type_name()));
}

std::string require_string(const ojson& obj, const std::string& key, const std::string& parent) {
  const ojson& v = require(obj, key, parent);
  if (!v.is_string()) {
    schema_fail(key, parent + "/" + key, fmt::format("expected string, got {}", v.type_name()));
  }
  return v.get<std::string>();
}

Timestamp require_timestamp(const ojson& obj, const std::string& key, const std::string& parent) {
  const std::string text = require_string(obj, key, parent);
  auto ts = Timestamp::parse(text);
  if (!ts) {
    schema_fail(key, parent + "/" + key,
                fmt::format("'{}' is not an ISO 8601 timestamp with UTC offset", text));
  }
  return *ts;
}

const ojson& require_object(const ojson& obj, const std::string& key, const std::string& parent) {
  const ojson& v = require(obj, key, parent);
  if (!v.is_object()) {
    schema_fail(key, parent + "/" + key, fmt::format("expected object, got {}", v.type_name()));
  }
  return v;
}

RegionMeasurement parse_region(const ojson& obj, const std::string& pointer) {
  if (!obj.is_object()) schema_fail("regions", pointer, "expected object");
  RegionMeasurement r;
  r.name = require_string(obj, "name", pointer);
  if (r.name.empty()) schema_fail("name", pointer + "/name", "region name must not be empty");

  struct Field {
    const char* key;
    std::int64_t RegionMeasurement::*member;
    bool strictly_positive;
  };
  static constexpr std::array<Field, 8> kFields{{
      {"elapsed_ns", &RegionMeasurement::elapsed_ns, true},
      {"useful_cpu_ns", &RegionMeasurement::useful_cpu_ns, false},
      {"mpi_cpu_ns", &RegionMeasurement::mpi_cpu_ns, false},
      {"omp_serialization_cpu_ns", &RegionMeasurement::omp_serialization_cpu_ns, false},
      {"omp_scheduling_cpu_ns", &RegionMeasurement::omp_scheduling_cpu_ns, false},
      {"max_non_mpi_rank_ns", &RegionMeasurement::max_non_mpi_rank_ns, false},
      {"instructions", &RegionMeasurement::instructions, true},
      {"cycles", &RegionMeasurement::cycles, true},
  }};
  for (const auto& f : kFields) {
    const std::int64_t v = require_int(obj, f.key, pointer);
    if (v < 0 || (f.strictly_positive && v == 0)) {
      schema_fail(f.key, pointer + "/" + f.key,
                  fmt::format("must be {} 0, got {}", f.strictly_positive ? ">" : ">=", v));
    }
    r.*f.member = v;
  }
  return r;
}

ojson git_to_json(const GitMetadata& g) {
  ojson j;
  j["commit_hash"] = g.commit_hash;
  j["branch"] = g.branch;
  j["commit_timestamp"] = g.commit_timestamp.text();
  return j;
}

ojson parse_document(std::string_view content) {
  try {
    return ojson::parse(content.begin(), content.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("", fmt::format("byte {}", e.byte), fmt::format("malformed JSON: {}", e.what()));
  }
}

RunMeasurement from_document(const ojson& doc) {
  if (!doc.is_object()) schema_fail("", "", "top-level value must be an object");

  RunMeasurement run;
  const std::int64_t version = require_int(doc, "schema_version", "");
  if (version < 1) schema_fail("schema_version", "/schema_version", "must be >= 1");
  if (version > kSchemaVersion) {
    throw VersionError(fmt::format("schema_version {} is newer than supported version {}",
                                   version, kSchemaVersion));
  }
  run.schema_version = static_cast<int>(version);
  run.run_timestamp = require_timestamp(doc, "run_timestamp", "");

  const ojson& res = require_object(doc, "resources", "");
  const std::int64_t ranks = require_int(res, "mpi_ranks", "/resources");
  const std::int64_t threads = require_int(res, "omp_threads", "/resources");
  if (ranks < 1 || ranks > INT32_MAX) schema_fail("mpi_ranks", "/resources/mpi_ranks", "must be >= 1");
  if (threads < 1 || threads > INT32_MAX) {
    schema_fail("omp_threads", "/resources/omp_threads", "must be >= 1");
  }
  run.resources = ResourceConfig{static_cast<int>(ranks), static_cast<int>(threads)};

  if (auto it = doc.find("git"); it != doc.end() && !it->is_null()) {
    if (!it->is_object()) schema_fail("git", "/git", "expected object");
    GitMetadata git;
    git.commit_hash = require_string(*it, "commit_hash", "/git");
    if (!is_commit_hash(git.commit_hash)) {
      schema_fail("commit_hash", "/git/commit_hash", "expected 40 lowercase hex characters");
    }
    git.branch = require_string(*it, "branch", "/git");
    if (git.branch.empty()) schema_fail("branch", "/git/branch", "must not be empty");
    git.commit_timestamp = require_timestamp(*it, "commit_timestamp", "/git");
    run.git = std::move(git);
  }

  const ojson& regions = require(doc, "regions", "");
  if (!regions.is_array()) schema_fail("regions", "/regions", "expected array");
  if (regions.empty()) schema_fail("regions", "/regions", "at least one region is required");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const std::string pointer = fmt::format("/regions/{}", i);
    RegionMeasurement r = parse_region(regions[i], pointer);
    if (!seen.insert(r.name).second) {
      schema_fail("name", pointer + "/name", fmt::format("duplicate region '{}'", r.name));
    }
    run.regions.push_back(std::move(r));
  }
  if (!seen.contains(std::string(kGlobalRegion))) {
    schema_fail("regions", "/regions", "the 'Global' region is required");
  }
  return run;
}

}  // namespace

RunMeasurement parse_run_measurement(std::string_view content) {
  return from_document(parse_document(content));
}

std::string serialize_run_measurement(const RunMeasurement& run) {
  ojson doc;
  doc["schema_version"] = run.schema_version;
  doc["run_timestamp"] = run.run_timestamp.text();
  doc["resources"] = {{"mpi_ranks", run.resources.mpi_ranks},
                      {"omp_threads", run.resources.omp_threads}};
  if (run.git) doc["git"] = git_to_json(*run.git);
  ojson regions = ojson::array();
  for (const auto& r : run.regions) {
    ojson j;
    j["name"] = r.name;
    j["elapsed_ns"] = r.elapsed_ns;
    j["useful_cpu_ns"] = r.useful_cpu_ns;
    j["mpi_cpu_ns"] = r.mpi_cpu_ns;
    j["omp_serialization_cpu_ns"] = r.omp_serialization_cpu_ns;
    j["omp_scheduling_cpu_ns"] = r.omp_scheduling_cpu_ns;
    j["max_non_mpi_rank_ns"] = r.max_non_mpi_rank_ns;
    j["instructions"] = r.instructions;
    j["cycles"] = r.cycles;
    regions.push_back(std::move(j));
  }
  doc["regions"] = std::move(regions);
  return doc.dump(2) + "\n";
}

std::vector<Violation> validate_region(const RegionMeasurement& r, const ResourceConfig& c) {
  std::vector<Violation> out;
  auto add = [&](const char* rule, long double observed, long double bound, std::string msg) {
    out.push_back(Violation{r.name, rule, static_cast<double>(observed),
                            static_cast<double>(bound), std::move(msg)});
  };

  const std::int64_t pools[] = {r.useful_cpu_ns, r.mpi_cpu_ns, r.omp_serialization_cpu_ns,
                                r.omp_scheduling_cpu_ns, r.max_non_mpi_rank_ns};
  for (std::int64_t v : pools) {
    if (v < 0) {
      add("non-negative", v, 0, "time fields must be >= 0");
      break;
    }
  }
  if (r.elapsed_ns <= 0) add("elapsed-positive", r.elapsed_ns, 0, "elapsed_ns must be > 0");
  if (r.instructions <= 0) add("instructions-positive", r.instructions, 0, "instructions must be > 0");
  if (r.cycles <= 0) add("cycles-positive", r.cycles, 0, "cycles must be > 0");
  if (r.useful_cpu_ns <= 0) add("useful-positive", r.useful_cpu_ns, 0, "useful_cpu_ns must be > 0");

  const long double total = static_cast<long double>(c.total_cpus()) * r.elapsed_ns;
  const long double pool_sum = static_cast<long double>(r.useful_cpu_ns) + r.mpi_cpu_ns +
                               r.omp_serialization_cpu_ns + r.omp_scheduling_cpu_ns;
  if (pool_sum > total) {
    add("pool-sum", pool_sum, total, "CPU time pools exceed total_cpus x elapsed_ns");
  }
  if (r.max_non_mpi_rank_ns > r.elapsed_ns) {
    add("max-bound", r.max_non_mpi_rank_ns, r.elapsed_ns,
        "max_non_mpi_rank_ns exceeds elapsed_ns");
  }
  // o_avg = (T - mpi) / P must not exceed o_max; compared as (T - mpi) <= P * o_max.
  const long double non_mpi = total - r.mpi_cpu_ns;
  const long double max_scaled = static_cast<long double>(c.total_cpus()) * r.max_non_mpi_rank_ns;
  if (non_mpi > max_scaled) {
    add("max-avg", non_mpi / c.total_cpus(), r.max_non_mpi_rank_ns,
        "average non-MPI time exceeds max_non_mpi_rank_ns");
  }
  if (c.omp_threads == 1 && (r.omp_serialization_cpu_ns != 0 || r.omp_scheduling_cpu_ns != 0)) {
    add("mpi-only-omp-pools",
        static_cast<long double>(r.omp_serialization_cpu_ns) + r.omp_scheduling_cpu_ns, 0,
        "OpenMP loss pools must be zero when omp_threads == 1");
  }
  return out;
}

std::vector<Violation> validate_consistency(const RunMeasurement& run) {
  std::vector<Violation> out;
  for (const auto& region : run.regions) {
    auto v = validate_region(region, run.resources);
    out.insert(out.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  }
  return out;
}

Timestamp resolve_timestamp(const RunMeasurement& run) {
  return run.git ? run.git->commit_timestamp : run.run_timestamp;
}

bool chronologically_before(const SourcedRun& a, const SourcedRun& b) {
  const Instant ra = resolve_timestamp(a.run).instant();
  const Instant rb = resolve_timestamp(b.run).instant();
  if (ra != rb) return ra < rb;
  const Instant ta = a.run.run_timestamp.instant();
  const Instant tb = b.run.run_timestamp.instant();
  if (ta != tb) return ta < tb;
  return a.filename < b.filename;
}

namespace {

bool is_measurement_file(const fs::directory_entry& e) {
  std::error_code ec;
  return e.is_regular_file(ec) && e.path().extension() == ".json";
}

std::vector<fs::path> measurement_files_below(const fs::path& dir) {
  std::vector<fs::path> files;
  std::error_code ec;
  for (fs::recursive_directory_iterator it(dir, fs::directory_options::skip_permission_denied, ec),
       end;
       it != end; it.increment(ec)) {
    if (ec) break;
    if (is_measurement_file(*it)) files.push_back(it->path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string format_violations(const std::vector<Violation>& vs) {
  std::string out;
  for (const auto& v : vs) {
    if (!out.empty()) out += "; ";
    out += fmt::format("{} [{}]: {} (observed {}, bound {})", v.region, v.rule, v.message,
                       v.observed, v.bound);
  }
  return out;
}

}  // namespace

ExperimentTree scan_experiment_tree(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw IoError(fmt::format("input directory '{}' does not exist or is not a directory",
                              root.string()));
  }
  ExperimentTree tree;
  tree.root = root;

  for (const fs::path& file : measurement_files_below(root)) {
    const fs::path rel_dir = file.parent_path().lexically_relative(root);
    if (rel_dir.empty() || rel_dir == ".") {
      tree.warnings.push_back({file, "measurement file directly in the input root is ignored; "
                                     "place it inside an experiment folder"});
      continue;
    }
    std::string content;
    try {
      content = read_file(file);
    } catch (const IoError& e) {
      tree.warnings.push_back({file, e.what()});
      continue;
    }
    try {
      RunMeasurement run = parse_run_measurement(content);
      if (auto violations = validate_consistency(run); !violations.empty()) {
        tree.warnings.push_back(
            {file, "inconsistent measurement, excluded from tables: " + format_violations(violations)});
      }
      tree.experiments[rel_dir.generic_string()].push_back(
          {file.filename().string(), std::move(run)});
    } catch (const Error& e) {
      tree.warnings.push_back({file, fmt::format("skipped: {}", e.what())});
    }
  }
  for (auto& [_, runs] : tree.experiments) {
    std::sort(runs.begin(), runs.end(),
              [](const SourcedRun& a, const SourcedRun& b) { return a.filename < b.filename; });
  }
  return tree;
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

std::optional<std::string> run_capture(const std::string& command) {
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(::popen(command.c_str(), "r"), ::pclose);
  if (!pipe) return std::nullopt;
  std::string out;
  std::array<char, 256> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe.get()) != nullptr) {
    out += buf.data();
  }
  const int status = ::pclose(pipe.release());
  if (status != 0) return std::nullopt;
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  if (out.empty()) return std::nullopt;
  return out;
}

std::optional<std::string> non_empty(const Environment& env, const char* key) {
  auto it = env.find(key);
  if (it == env.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

GitMetadata resolve_metadata(const fs::path& dir, const Environment& env,
                             const CommitInfoProvider& vcs) {
  std::optional<std::string> hash = non_empty(env, "CI_COMMIT_SHA");
  std::optional<std::string> branch = non_empty(env, "CI_COMMIT_BRANCH");
  if (!branch) branch = non_empty(env, "CI_COMMIT_REF_NAME");
  std::optional<std::string> ts = non_empty(env, "CI_COMMIT_TIMESTAMP");

  if (hash && !is_commit_hash(*hash)) hash.reset();
  if (ts && !Timestamp::parse(*ts)) ts.reset();

  if (!hash || !branch || !ts) {
    const CommitInfo info = vcs.query(dir);
    if (!hash && info.commit_hash && is_commit_hash(*info.commit_hash)) hash = info.commit_hash;
    if (!branch && info.branch && !info.branch->empty()) branch = info.branch;
    if (!ts && info.commit_timestamp && Timestamp::parse(*info.commit_timestamp)) {
      ts = info.commit_timestamp;
    }
  }
  if (!hash || !branch || !ts) {
    std::string missing;
    if (!hash) missing += " commit hash";
    if (!branch) missing += " branch";
    if (!ts) missing += " commit timestamp";
    throw NoMetadataSource(fmt::format(
        "could not determine git metadata (missing:{}); set CI_COMMIT_SHA, CI_COMMIT_BRANCH and "
        "CI_COMMIT_TIMESTAMP or run inside a git repository",
        missing));
  }
  return GitMetadata{*hash, *branch, *Timestamp::parse(*ts)};
}

}  // namespace

CommitInfo GitCommandProvider::query(const fs::path& dir) const {
  const std::string prefix = "git -C " + shell_quote(dir.string()) + " ";
  const std::string quiet = " 2>/dev/null";
  CommitInfo info;
  info.commit_hash = run_capture(prefix + "rev-parse HEAD" + quiet);
  info.branch = run_capture(prefix + "rev-parse --abbrev-ref HEAD" + quiet);
  if (info.branch == "HEAD") info.branch.reset();  // detached
  info.commit_timestamp = run_capture(prefix + "log -1 --format=%cI" + quiet);
  return info;
}

Environment ci_environment_from_process() {
  Environment env;
  for (const char* key : {"CI_COMMIT_SHA", "CI_COMMIT_BRANCH", "CI_COMMIT_REF_NAME",
                          "CI_COMMIT_TIMESTAMP"}) {
    if (const char* v = std::getenv(key)) env[key] = v;
  }
  return env;
}

int inject_git_metadata(const fs::path& dir, const Environment& env,
                        const CommitInfoProvider& vcs) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw IoError(fmt::format("'{}' does not exist or is not a directory", dir.string()));
  }
  std::optional<GitMetadata> metadata;
  int updated = 0;
  for (const fs::path& file : measurement_files_below(dir)) {
    const std::string content = read_file(file);
    ojson doc;
    try {
      doc = parse_document(content);
      const RunMeasurement run = from_document(doc);
      if (run.git) continue;
    } catch (const Error&) {
      continue;
    }
    if (!metadata) metadata = resolve_metadata(dir, env, vcs);
    doc["git"] = git_to_json(*metadata);
    write_file_atomic(file, doc.dump(2) + "\n");
    ++updated;
  }
  return updated;
}

}  // namespace talp
