#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cellmech/agent_pool.hpp"
#include "cellmech/engine.hpp"

namespace cellmech {

// Benchmark A: a cubic lattice of equal cells that grow and divide.
struct BenchmarkAConfig {
  std::size_t side_count = 64;
  std::size_t steps = 10;
  double spacing = 20.0;
  double diameter = 30.0;
  double adherence = kDefaultAdherence;
  ForceParams force_params;
  GrowthParams growth;
  std::vector<ExecutionStrategy> strategies{ExecutionStrategy::serial()};
  std::vector<NeighborBackend> backends{NeighborBackend::kGrid};
  Precision precision = Precision::kFp64;
  std::size_t morton_sort_every = 1;
  std::size_t repeats = 5;
  std::size_t warmup = 1;

  void validate() const;
};

// Benchmark B: random agents in a cube sized for a target neighbor count,
// frozen in place so the density stays constant.
struct BenchmarkBConfig {
  std::size_t agent_count = 100'000;
  std::vector<double> target_densities{1, 3, 6, 11, 17, 27, 35, 47};
  std::size_t steps = 1;
  /// Neighbor-counting radius; agents get this diameter, so neighbors are
  /// exactly the agents in contact.
  double radius = 5.0;
  double adherence = kDefaultAdherence;
  ForceParams force_params;
  std::vector<ExecutionStrategy> strategies{ExecutionStrategy::serial()};
  std::vector<NeighborBackend> backends{NeighborBackend::kGrid};
  Precision precision = Precision::kFp64;
  std::uint64_t seed = 1;
  std::size_t morton_sort_every = 1;
  std::size_t repeats = 5;
  std::size_t warmup = 1;
  std::size_t density_sample = 1000;

  void validate() const;
};

struct BenchmarkRow {
  std::string bench;
  NeighborBackend backend = NeighborBackend::kGrid;
  ExecutionStrategy strategy;
  Precision precision = Precision::kFp64;
  std::optional<double> density_target;
  double density_measured = 0;
  std::size_t agents = 0;  // agents at the start of the run
  std::size_t final_agents = 0;
  std::size_t steps = 0;
  // Per-step wall time, median over the timed repeats.
  double t_grid_ms = 0;
  double t_force_ms = 0;
  double t_behavior_ms = 0;
  double t_total_ms = 0;
  // Totals over all steps of one run (identical across repeats).
  std::uint64_t force_evals = 0;
  std::uint64_t candidates = 0;
  std::uint64_t bytes_modeled = 0;
  std::size_t divisions = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t state_hash = 0;
  std::uint64_t neighbor_hash = 0;
};

using BenchmarkReport = std::vector<BenchmarkRow>;

/// Cube side L with (n - 1) * (4/3) pi radius^3 / L^3 = target, the expected
/// neighbor count for uniform placement ignoring boundary depletion.
double box_side_for_density(std::size_t agent_count, double radius, double target_mean_neighbors);

/// Mean number of agents within `radius` of each sampled agent, by brute
/// force. `sample` agents are taken at evenly spaced indices (all if 0 or
/// larger than the pool).
template <std::floating_point T>
double measure_density(const AgentPool<T>& pool, T radius, std::size_t sample);

/// Frozen benchmark B pool for one density target.
template <std::floating_point T>
AgentPool<T> spawn_benchmark_b(const BenchmarkBConfig& config, double target);

template <std::floating_point T>
AgentPool<T> spawn_benchmark_a(const BenchmarkAConfig& config);

SimulationConfig benchmark_a_simulation(const BenchmarkAConfig& config,
                                        const ExecutionStrategy& strategy,
                                        NeighborBackend backend);
SimulationConfig benchmark_b_simulation(const BenchmarkBConfig& config,
                                        const ExecutionStrategy& strategy,
                                        NeighborBackend backend);

BenchmarkReport run_benchmark_a(const BenchmarkAConfig& config);
BenchmarkReport run_benchmark_b(const BenchmarkBConfig& config);

/// FLOPs per modeled byte: force_evals * kFlopsPerForceEvaluation / bytes.
/// Zero evaluations give 0; nonzero evaluations with no bytes throw
/// std::invalid_argument (counters missing).
double arithmetic_intensity(std::uint64_t force_evals, std::uint64_t bytes_modeled);
double estimate_arithmetic_intensity(const BenchmarkRow& row);

struct BackendTiming {
  double grid_build_ms = 0;
  double grid_query_ms = 0;
  double kd_build_ms = 0;
  double kd_query_ms = 0;
  std::uint64_t grid_neighbor_hash = 0;
  std::uint64_t kd_neighbor_hash = 0;

  double grid_total_ms() const { return grid_build_ms + grid_query_ms; }
  double kd_total_ms() const { return kd_build_ms + kd_query_ms; }
};

/// Serial build plus an all-agent neighbor query on both backends; medians
/// over `repeats` after one warm-up.
template <std::floating_point T>
BackendTiming compare_backends(const AgentPool<T>& pool, T radius, std::size_t repeats);

inline constexpr const char* kReportHeader =
    "bench,backend,strategy,precision,density_target,density_measured,agents,steps,t_grid_ms,"
    "t_force_ms,t_behavior_ms,t_total_ms,force_evals,candidates,bytes_modeled,ai_flops_per_byte,"
    "threads,final_agents,divisions,config_hash,state_hash,neighbor_hash";

void write_report_csv(const BenchmarkReport& report, std::ostream& out);

/// Horizontal bar chart of t_total_ms, one bar per row.
void write_report_svg(const BenchmarkReport& report, const std::string& title, std::ostream& out);

double median(std::vector<double> values);

struct PrecisionDrift {
  bool same_agents = false;  // identical uid sets
  double max_relative = 0;   // max over coordinates of |a - b| / max(|b|, 1)
};

/// Compares a float run against a double run of the same model, matching
/// agents by uid.
PrecisionDrift precision_drift(const AgentPool<float>& single, const AgentPool<double>& reference);

}  // namespace cellmech
