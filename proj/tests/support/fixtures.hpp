#pragma once

// Test-only helpers: analytic inversion of the efficiency model into raw
// aggregates, an independent forward oracle, random valid measurements and
// on-disk experiment trees.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "talp/measurement.hpp"

namespace talp::testing {

struct EfficiencyTargets {
  double mpi_load_balance = 1.0;
  double mpi_communication = 1.0;
  double omp_load_balance = 1.0;
  double omp_scheduling = 1.0;
  double omp_serialization = 1.0;

  double parallel_efficiency() const {
    return mpi_load_balance * mpi_communication * omp_load_balance * omp_scheduling *
           omp_serialization;
  }
};

struct CounterTargets {
  double ipc = 1.0;
  double frequency_ghz = 2.0;
};

/// Raw aggregates whose forward evaluation reproduces `eff` and `counters`.
RegionMeasurement invert_region(const std::string& name, const ResourceConfig& config,
                                std::int64_t elapsed_ns, const EfficiencyTargets& eff,
                                const CounterTargets& counters);

/// Elapsed time at which `config` retires `instructions` under the targets.
std::int64_t elapsed_for_instructions(double instructions, const ResourceConfig& config,
                                      const EfficiencyTargets& eff,
                                      const CounterTargets& counters);

/// Forward formulas evaluated in long double directly on the raw pools.
struct OracleMetrics {
  long double pe, mpi_pe, mpi_lb, mpi_comm, omp_pe, omp_lb, omp_sched, omp_serial, ipc, freq;
};
OracleMetrics oracle_metrics(const RegionMeasurement& r, const ResourceConfig& c);

Timestamp ts(const char* text);

RunMeasurement make_run(const ResourceConfig& config, std::vector<RegionMeasurement> regions,
                        const char* run_timestamp = "2024-05-01T12:00:00Z");

/// A fully lossless serial-identity region ("Global", 1x1 friendly).
RegionMeasurement ideal_region(const std::string& name, const ResourceConfig& config,
                               std::int64_t elapsed_ns = 1'000'000'000,
                               std::int64_t instructions_per_cpu = 2'000'000'000);

/// Random region satisfying every validate_region rule for `config`.
RegionMeasurement random_valid_region(std::mt19937_64& rng, const ResourceConfig& config,
                                      const std::string& name = "Global");
ResourceConfig random_config(std::mt19937_64& rng);

std::string git_hash(const std::string& prefix);

void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

/// Three experiments in the usual folder layout:
///   mesh_1/comparison      talp_1x112.json talp_2x56.json talp_4x28.json
///   mesh_1/strong_scaling  talp_8x14.json talp_8x28.json
///   mesh_2/weak_scaling    talp_8x{14,28}_{9dc04ca,ed8b9ef}.json
void write_sample_tree(const std::filesystem::path& root);

/// Two-run folders inverted from reference scaling tables: 2x56
/// reference plus 4x56 (strong) or 8x56 (weak). Global only.
std::vector<SourcedRun> strong_fixture();
std::vector<SourcedRun> weak_fixture();

/// Removes the directory on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

/// Relative href/src targets in every HTML file under `root` that do not exist.
std::vector<std::string> dangling_links(const std::filesystem::path& root);

/// Minimal XML well-formedness check (balanced tags, quoted attributes, one root).
bool well_formed_xml(const std::string& text, std::string* why = nullptr);

/// Content of the <script id="talp-data"> element of an HTML page.
std::string extract_data_island(const std::string& html);

/// Byte-level snapshot of every file under `root`, keyed by relative path.
std::vector<std::pair<std::string, std::string>> snapshot(const std::filesystem::path& root);

}  // namespace talp::testing
