#pragma once

/**
 * @file measurement.hpp
 * @brief Measurement file format, validation and the experiment folder scan.
 *
 * A measurement file is one JSON document per execution holding raw
 * per-region aggregates (times in nanoseconds, CPU times summed over all
 * CPUs, hardware counters of useful computation). Every efficiency is
 * derived from these aggregates by pop_model; nothing precomputed is read.
 *
 * An experiment is any directory below the input root that directly holds
 * at least one "*.json" measurement file. Previous runs of the same
 * experiment live side by side in that directory.
 */

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "talp/timestamp.hpp"

namespace talp {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kGlobalRegion = "Global";

/// MPI ranks x OpenMP threads of one run. Ordered by total CPUs, then ranks.
struct ResourceConfig {
  int mpi_ranks = 1;
  int omp_threads = 1;

  /// Throws DomainError unless both counts are >= 1.
  static ResourceConfig make(int mpi_ranks, int omp_threads);

  std::int64_t total_cpus() const noexcept {
    return static_cast<std::int64_t>(mpi_ranks) * omp_threads;
  }
  /// "{ranks}x{threads}", e.g. "2x56".
  std::string label() const;

  friend bool operator==(const ResourceConfig&, const ResourceConfig&) = default;
  friend std::strong_ordering operator<=>(const ResourceConfig& a, const ResourceConfig& b) {
    if (auto c = a.total_cpus() <=> b.total_cpus(); c != 0) return c;
    return a.mpi_ranks <=> b.mpi_ranks;
  }
};

struct GitMetadata {
  std::string commit_hash;  // 40 lowercase hex digits
  std::string branch;
  Timestamp commit_timestamp;

  friend bool operator==(const GitMetadata&, const GitMetadata&) = default;
};

/// True when `hash` is exactly 40 lowercase hex characters.
bool is_commit_hash(std::string_view hash);

struct RegionMeasurement {
  std::string name;
  std::int64_t elapsed_ns = 0;
  std::int64_t useful_cpu_ns = 0;
  std::int64_t mpi_cpu_ns = 0;
  std::int64_t omp_serialization_cpu_ns = 0;
  std::int64_t omp_scheduling_cpu_ns = 0;
  /// max over ranks of (per-rank non-MPI CPU time / omp_threads)
  std::int64_t max_non_mpi_rank_ns = 0;
  std::int64_t instructions = 0;
  std::int64_t cycles = 0;

  friend bool operator==(const RegionMeasurement&, const RegionMeasurement&) = default;
};

struct RunMeasurement {
  int schema_version = kSchemaVersion;
  Timestamp run_timestamp;
  ResourceConfig resources;
  std::optional<GitMetadata> git;
  std::vector<RegionMeasurement> regions;

  const RegionMeasurement* find_region(std::string_view name) const;

  friend bool operator==(const RunMeasurement&, const RunMeasurement&) = default;
};

/// Parses and structurally validates one measurement document. Unknown
/// members are ignored.
/// Throws SchemaError (naming the field and its JSON pointer) or VersionError.
RunMeasurement parse_run_measurement(std::string_view content);

/// Canonical JSON text of `run` (2-space indent, trailing newline).
std::string serialize_run_measurement(const RunMeasurement& run);

struct Violation {
  std::string region;
  std::string rule;  // "pool-sum", "max-bound", "max-avg", ...
  double observed = 0.0;
  double bound = 0.0;
  std::string message;
};

/// Relational consistency checks on the raw aggregates. Violations are data.
///
/// Rules: "non-negative", "elapsed-positive", "instructions-positive",
/// "cycles-positive", "useful-positive", "pool-sum" (all pools fit in
/// total_cpus x elapsed), "max-bound" (max non-MPI rank time <= elapsed),
/// "max-avg" (average non-MPI time <= max) and "mpi-only-omp-pools"
/// (OpenMP pools are zero when omp_threads == 1).
std::vector<Violation> validate_consistency(const RunMeasurement& run);
std::vector<Violation> validate_region(const RegionMeasurement& region, const ResourceConfig& c);

/// Commit timestamp when git metadata is present, otherwise run_timestamp.
Timestamp resolve_timestamp(const RunMeasurement& run);

/// A run together with the file name it was read from (or a synthetic name).
struct SourcedRun {
  std::string filename;
  RunMeasurement run;
};

/// Strict weak order used everywhere runs are sorted in time: resolved
/// instant, then run_timestamp instant, then filename ascending.
bool chronologically_before(const SourcedRun& a, const SourcedRun& b);

struct ScanWarning {
  std::filesystem::path path;
  std::string message;
};

struct ExperimentTree {
  std::filesystem::path root;
  /// Experiment path relative to root ("/" separated) -> runs sorted by filename.
  std::map<std::string, std::vector<SourcedRun>> experiments;
  std::vector<ScanWarning> warnings;
};

/// Throws IoError if `root` is missing or not a readable directory. Malformed
/// files are skipped with a warning; consistency violations are kept but
/// reported as warnings.
ExperimentTree scan_experiment_tree(const std::filesystem::path& root);

struct CommitInfo {
  std::optional<std::string> commit_hash;
  std::optional<std::string> branch;
  std::optional<std::string> commit_timestamp;
};

/// Source of version-control metadata for a working directory.
class CommitInfoProvider {
 public:
  virtual ~CommitInfoProvider() = default;
  /// Returns whatever it can determine; absent fields mean "unknown".
  virtual CommitInfo query(const std::filesystem::path& dir) const = 0;
};

/// Asks the `git` executable found on PATH.
class GitCommandProvider final : public CommitInfoProvider {
 public:
  CommitInfo query(const std::filesystem::path& dir) const override;
};

using Environment = std::map<std::string, std::string>;

/// Snapshot of the CI_COMMIT_* variables from the process environment.
Environment ci_environment_from_process();

/// Adds a "git" block to every parseable measurement file under `dir` that
/// lacks one, rewriting it in place and preserving unknown members. CI
/// variables win over the provider field by field. Returns the number of
/// files rewritten. Throws NoMetadataSource or IoError.
int inject_git_metadata(const std::filesystem::path& dir, const Environment& env,
                        const CommitInfoProvider& vcs);

}  // namespace talp
