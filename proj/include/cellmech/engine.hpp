#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cellmech/agent_pool.hpp"
#include "cellmech/kd_tree.hpp"
#include "cellmech/mechanics.hpp"
#include "cellmech/uniform_grid.hpp"

namespace cellmech {

enum class StrategyKind { kSerial, kAgentParallel, kVoxelTiled };

struct ExecutionStrategy {
  StrategyKind kind = StrategyKind::kSerial;
  int threads = 1;
  /// Staging capacity per tile for kVoxelTiled; 0 means 27 * (max box
  /// occupancy of the current grid).
  std::size_t tile_capacity = 0;

  static ExecutionStrategy serial() { return {}; }
  static ExecutionStrategy agent_parallel(int threads) {
    return {StrategyKind::kAgentParallel, threads, 0};
  }
  static ExecutionStrategy voxel_tiled(int threads, std::size_t capacity = 0) {
    return {StrategyKind::kVoxelTiled, threads, capacity};
  }

  /// "serial", "parallel" or "tiled", as accepted by parse().
  std::string name() const;
  /// Accepts serial / parallel / tiled; the thread count comes from `threads`.
  static ExecutionStrategy parse(std::string_view text, int threads);
  void validate() const;
};

enum class NeighborBackend { kGrid, kKdTree };

std::string_view to_string(NeighborBackend b);
NeighborBackend parse_backend(std::string_view text);

struct GrowthParams {
  double volume_growth_rate = 4000.0;  // volume units per step
  double division_diameter = 40.0;
  bool division_enabled = true;

  void validate() const {
    if (!(volume_growth_rate > 0)) throw std::invalid_argument("volume_growth_rate must be > 0");
    if (!(division_diameter > 0)) throw std::invalid_argument("division_diameter must be > 0");
  }
};

struct SimulationConfig {
  ForceParams force_params;
  ExecutionStrategy strategy;
  Precision precision = Precision::kFp64;
  std::size_t morton_sort_every = 1;  // 0 = never
  std::size_t steps = 1;
  std::optional<GrowthParams> growth;
  bool freeze_displacement = false;
  /// Neighbor radius; the effective value is max(this, largest diameter).
  double interaction_radius = 0.0;
  NeighborBackend backend = NeighborBackend::kGrid;
  DegeneratePolicy degenerate_policy = DegeneratePolicy::kDeterministic;
  std::size_t max_boxes = kDefaultBoxCap;

  void validate() const;
};

struct StepStats {
  std::size_t step = 0;
  std::size_t agents_before = 0;
  std::size_t agents_after = 0;
  std::size_t divisions = 0;
  bool sorted = false;
  double t_behavior_ms = 0;
  double t_sort_ms = 0;
  double t_grid_ms = 0;  // neighbor index build (grid or kd-tree)
  double t_force_ms = 0;
  double t_apply_ms = 0;
  double t_total_ms = 0;
  ForceCounters counters;
  std::uint64_t bytes_modeled = 0;
  std::size_t max_box_occupancy = 0;
  std::size_t staged_records = 0;  // kVoxelTiled only
};

struct RunReport {
  Precision precision = Precision::kFp64;
  std::vector<StepStats> steps;
  std::uint64_t final_state_hash = 0;

  ForceCounters total_counters() const;
  std::uint64_t total_bytes_modeled() const;
  std::size_t total_divisions() const;
};

/// Bytes of agent state a force phase touches: each distance test reads a
/// candidate's position and diameter (4 scalars); each query agent reads its
/// own 4, its adherence, and writes 3 displacement components.
constexpr std::uint64_t modeled_bytes(std::uint64_t candidates, std::uint64_t agents,
                                      Precision p) {
  return scalar_bytes(p) * (4 * candidates + 8 * agents);
}

template <std::floating_point T>
T sphere_volume(T diameter) {
  return std::numbers::pi_v<T> / T(6) * diameter * diameter * diameter;
}

template <std::floating_point T>
T sphere_diameter(T volume) {
  return std::cbrt(T(6) * volume / std::numbers::pi_v<T>);
}

/// Grows every agent's volume by the growth rate, then splits each agent
/// whose diameter reached the division threshold. Daughters are appended in
/// ascending mother-uid order, so results do not depend on pool order.
template <std::floating_point T>
std::size_t grow_and_divide(AgentPool<T>& pool, const GrowthParams& growth, std::size_t step);

/// Total sphere volume of the pool, summed in double.
template <std::floating_point T>
double total_volume(const AgentPool<T>& pool);

/// Per-step scheduler: behavior, optional Z-order sort, index build, force
/// phase into the displacement buffer, apply phase.
template <std::floating_point T>
class Engine {
 public:
  explicit Engine(SimulationConfig config);

  StepStats step(AgentPool<T>& pool);
  RunReport run(AgentPool<T>& pool);

  const SimulationConfig& config() const { return config_; }
  std::size_t steps_taken() const { return step_index_; }

 private:
  void force_phase(AgentPool<T>& pool, const UniformGrid<T>* grid, const KdTree<T>* tree,
                   T radius, StepStats& stats);

  SimulationConfig config_;
  std::size_t step_index_ = 0;
};

template <std::floating_point T>
RunReport run(AgentPool<T>& pool, const SimulationConfig& config) {
  return Engine<T>(config).run(pool);
}

/// One line per step: step, agents, divisions, phase timings, counters.
void write_step_log(const RunReport& report, std::ostream& out);

/// Hash over each agent's uid-ordered neighbor uid list, agents taken in uid
/// order, for the given backend. Used to compare backends.
template <std::floating_point T>
std::uint64_t neighbor_set_hash(const AgentPool<T>& pool, NeighborBackend backend, T radius,
                                std::size_t max_boxes = kDefaultBoxCap);

}  // namespace cellmech
