#pragma once

/**
 * @file pop_model.hpp
 * @brief Absolute efficiency hierarchy of one region of one run.
 *
 * With P total CPUs, E elapsed ns and T = P*E:
 *
 *   W = T - mpi             (non-MPI CPU time)
 *   S = W - omp_serialization
 *   Q = S - omp_scheduling
 *   U = useful
 *
 *   parallel efficiency      = U / T = mpi_pe * omp_pe
 *   mpi_pe  = W / T          = mpi_load_balance * mpi_communication
 *     mpi_communication      = o_max / E
 *     mpi_load_balance       = o_avg / o_max,  o_avg = W / P
 *   omp_pe  = U / W          = omp_load_balance * omp_scheduling * omp_serialization
 *     omp_serialization      = S / W
 *     omp_scheduling         = Q / S
 *     omp_load_balance       = U / Q
 *
 * IPC is instructions / cycles and frequency (GHz) is cycles / U.
 */

#include <cstdint>
#include <tuple>

#include "talp/measurement.hpp"

namespace talp {

struct PopMetrics {
  double elapsed_s = 0.0;
  double parallel_efficiency = 0.0;
  double mpi_parallel_efficiency = 0.0;
  double mpi_load_balance = 0.0;
  double mpi_communication_efficiency = 0.0;
  double omp_parallel_efficiency = 0.0;
  double omp_load_balance = 0.0;
  double omp_scheduling_efficiency = 0.0;
  double omp_serialization_efficiency = 0.0;
  double ipc = 0.0;
  double frequency_ghz = 0.0;
  std::int64_t instructions = 0;

  friend bool operator==(const PopMetrics&, const PopMetrics&) = default;
};

struct MpiHierarchy {
  double parallel_efficiency;
  double load_balance;
  double communication_efficiency;
};

struct OmpHierarchy {
  double parallel_efficiency;
  double load_balance;
  double scheduling_efficiency;
  double serialization_efficiency;
};

// All functions throw DomainError when `r` fails validate_region or a
// denominator is zero.

double parallel_efficiency(const RegionMeasurement& r, const ResourceConfig& c);
MpiHierarchy mpi_hierarchy(const RegionMeasurement& r, const ResourceConfig& c);
OmpHierarchy omp_hierarchy(const RegionMeasurement& r, const ResourceConfig& c);
double ipc(const RegionMeasurement& r);
double frequency_ghz(const RegionMeasurement& r);

PopMetrics compute_pop_metrics(const RegionMeasurement& r, const ResourceConfig& c);

}  // namespace talp
