#include "talp/pop_model.hpp"

#include <fmt/format.h>

#include "talp/errors.hpp"

namespace talp {
namespace {

void require_consistent(const RegionMeasurement& r, const ResourceConfig& c) {
  if (c.mpi_ranks < 1 || c.omp_threads < 1) {
    throw DomainError(fmt::format("invalid resource configuration {}", c.label()));
  }
  const auto violations = validate_region(r, c);
  if (!violations.empty()) {
    const Violation& v = violations.front();
    throw DomainError(fmt::format("region '{}' violates rule '{}': {} (observed {}, bound {})",
                                  r.name, v.rule, v.message, v.observed, v.bound));
  }
}

// Pools as doubles. T = P*E may exceed the exact integer range of double
// only for absurdly long runs; relative error stays ~1e-16.
struct Pools {
  double total;       // T
  double non_mpi;     // W
  double serialized;  // S
  double scheduled;   // Q
  double useful;      // U
};

Pools pools_of(const RegionMeasurement& r, const ResourceConfig& c) {
  const long double total = static_cast<long double>(c.total_cpus()) * r.elapsed_ns;
  const long double w = total - r.mpi_cpu_ns;
  const long double s = w - r.omp_serialization_cpu_ns;
  const long double q = s - r.omp_scheduling_cpu_ns;
  return {static_cast<double>(total), static_cast<double>(w), static_cast<double>(s),
          static_cast<double>(q), static_cast<double>(r.useful_cpu_ns)};
}

MpiHierarchy mpi_unchecked(const RegionMeasurement& r, const ResourceConfig& c, const Pools& p) {
  if (r.max_non_mpi_rank_ns <= 0) {
    throw DomainError(fmt::format("region '{}': max_non_mpi_rank_ns must be > 0", r.name));
  }
  const double o_max = static_cast<double>(r.max_non_mpi_rank_ns);
  const double o_avg = p.non_mpi / static_cast<double>(c.total_cpus());
  const double comm = o_max / static_cast<double>(r.elapsed_ns);
  const double lb = o_avg / o_max;
  return {lb * comm, lb, comm};
}

OmpHierarchy omp_unchecked(const RegionMeasurement& r, const Pools& p) {
  if (p.non_mpi <= 0.0) {
    throw DomainError(fmt::format("region '{}': no non-MPI time (W <= 0)", r.name));
  }
  if (p.serialized <= 0.0 || p.scheduled <= 0.0) {
    throw DomainError(
        fmt::format("region '{}': OpenMP loss pools consume all non-MPI time", r.name));
  }
  const double serial = p.serialized / p.non_mpi;
  const double sched = p.scheduled / p.serialized;
  const double lb = p.useful / p.scheduled;
  return {lb * sched * serial, lb, sched, serial};
}

}  // namespace

double parallel_efficiency(const RegionMeasurement& r, const ResourceConfig& c) {
  require_consistent(r, c);
  const Pools p = pools_of(r, c);
  return p.useful / p.total;
}

MpiHierarchy mpi_hierarchy(const RegionMeasurement& r, const ResourceConfig& c) {
  require_consistent(r, c);
  return mpi_unchecked(r, c, pools_of(r, c));
}

OmpHierarchy omp_hierarchy(const RegionMeasurement& r, const ResourceConfig& c) {
  require_consistent(r, c);
  return omp_unchecked(r, pools_of(r, c));
}

double ipc(const RegionMeasurement& r) {
  if (r.cycles <= 0) throw DomainError(fmt::format("region '{}': cycles must be > 0", r.name));
  return static_cast<double>(r.instructions) / static_cast<double>(r.cycles);
}

double frequency_ghz(const RegionMeasurement& r) {
  if (r.useful_cpu_ns <= 0) {
    throw DomainError(fmt::format("region '{}': useful_cpu_ns must be > 0", r.name));
  }
  return static_cast<double>(r.cycles) / static_cast<double>(r.useful_cpu_ns);
}

PopMetrics compute_pop_metrics(const RegionMeasurement& r, const ResourceConfig& c) {
  require_consistent(r, c);
  const Pools p = pools_of(r, c);
  const MpiHierarchy mpi = mpi_unchecked(r, c, p);
  const OmpHierarchy omp = omp_unchecked(r, p);

  PopMetrics m;
  m.elapsed_s = static_cast<double>(r.elapsed_ns) * 1e-9;
  m.mpi_parallel_efficiency = mpi.parallel_efficiency;
  m.mpi_load_balance = mpi.load_balance;
  m.mpi_communication_efficiency = mpi.communication_efficiency;
  m.omp_parallel_efficiency = omp.parallel_efficiency;
  m.omp_load_balance = omp.load_balance;
  m.omp_scheduling_efficiency = omp.scheduling_efficiency;
  m.omp_serialization_efficiency = omp.serialization_efficiency;
  m.parallel_efficiency = mpi.parallel_efficiency * omp.parallel_efficiency;
  m.ipc = ipc(r);
  m.frequency_ghz = frequency_ghz(r);
  m.instructions = r.instructions;
  return m;
}

}  // namespace talp
