#include "cellmech/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <ostream>
#include <stdexcept>
#include <string>

#include "cellmech/kd_tree.hpp"
#include "cellmech/morton.hpp"
#include "cellmech/random.hpp"

namespace cellmech {

std::string ExecutionStrategy::name() const {
  switch (kind) {
    case StrategyKind::kSerial:
      return "serial";
    case StrategyKind::kAgentParallel:
      return "parallel";
    case StrategyKind::kVoxelTiled:
      return "tiled";
  }
  return "unknown";
}

ExecutionStrategy ExecutionStrategy::parse(std::string_view text, int threads) {
  if (text == "serial") return serial();
  if (text == "parallel" || text == "agent-parallel") return agent_parallel(threads);
  if (text == "tiled" || text == "voxel-tiled") return voxel_tiled(threads);
  throw std::invalid_argument("unknown strategy '" + std::string(text) + "'");
}

void ExecutionStrategy::validate() const {
  if (threads < 1) throw std::invalid_argument("thread count must be >= 1");
}

std::string_view to_string(NeighborBackend b) {
  return b == NeighborBackend::kGrid ? "grid" : "kdtree";
}

NeighborBackend parse_backend(std::string_view text) {
  if (text == "grid") return NeighborBackend::kGrid;
  if (text == "kdtree" || text == "kd-tree") return NeighborBackend::kKdTree;
  throw std::invalid_argument("unknown backend '" + std::string(text) + "'");
}

void SimulationConfig::validate() const {
  force_params.validate();
  strategy.validate();
  if (growth) growth->validate();
  if (interaction_radius < 0) throw std::invalid_argument("interaction radius must be >= 0");
  if (backend == NeighborBackend::kKdTree && strategy.kind == StrategyKind::kVoxelTiled) {
    throw std::invalid_argument("the voxel-tiled strategy requires the grid backend");
  }
}

ForceCounters RunReport::total_counters() const {
  ForceCounters total;
  for (const auto& s : steps) total += s.counters;
  return total;
}

std::uint64_t RunReport::total_bytes_modeled() const {
  std::uint64_t total = 0;
  for (const auto& s : steps) total += s.bytes_modeled;
  return total;
}

std::size_t RunReport::total_divisions() const {
  std::size_t total = 0;
  for (const auto& s : steps) total += s.divisions;
  return total;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

/// Runs compute(i, scratch, counters) for every agent, serially or with an
/// OpenMP worksharing loop. Exceptions thrown by workers are rethrown here.
template <typename Compute>
void for_each_agent(std::size_t n, bool parallel, int threads, ForceCounters& total,
                    Compute&& compute) {
  if (!parallel) {
    NeighborScratch scratch;
    ForceCounters counters;
    for (std::size_t i = 0; i < n; ++i) compute(i, scratch, counters);
    total += counters;
    return;
  }
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel num_threads(threads)
  {
    NeighborScratch scratch;
    ForceCounters counters;
#pragma omp for schedule(dynamic, 512)
    for (std::int64_t i = 0; i < count; ++i) {
      if (failed.load(std::memory_order_relaxed)) continue;
      try {
        compute(static_cast<std::size_t>(i), scratch, counters);
      } catch (...) {
#pragma omp critical(cellmech_error)
        if (!error) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
      }
    }
#pragma omp critical(cellmech_counters)
    total += counters;
  }
  if (error) std::rethrow_exception(error);
}

template <std::floating_point T>
struct StagedAgent {
  std::uint64_t uid;
  T x, y, z, radius;
  std::uint32_t index;
};

/// Parallel loop over nonempty boxes. Each tile copies its 27-box stencil
/// into a contiguous scratch buffer in ascending uid, then every member agent
/// of the box reads only the staged copy.
template <std::floating_point T>
std::size_t voxel_tiled_forces(AgentPool<T>& pool, const UniformGrid<T>& grid,
                               const ForceParams& params, const ExecutionStrategy& strategy,
                               DegeneratePolicy policy, ForceCounters& total) {
  const std::size_t capacity =
      strategy.tile_capacity > 0 ? strategy.tile_capacity : 27 * grid.max_occupancy();
  std::vector<std::uint32_t> boxes;
  const auto box_count = grid.box_count();
  for (std::size_t b = 0; b < box_count.size(); ++b) {
    if (box_count[b] > 0) boxes.push_back(static_cast<std::uint32_t>(b));
  }

  const AgentPool<T>& cpool = pool;
  const T kappa = static_cast<T>(params.kappa);
  const T gamma = static_cast<T>(params.gamma);
  const T radius = grid.box_length();
  const T r2 = radius * radius;
  const auto adherence = cpool.adherence();

  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::size_t staged_total = 0;
  const auto tiles = static_cast<std::int64_t>(boxes.size());
#pragma omp parallel num_threads(strategy.threads) reduction(+ : staged_total)
  {
    std::vector<StagedAgent<T>> staged;
    staged.reserve(capacity);
    ForceCounters counters;
#pragma omp for schedule(dynamic, 16)
    for (std::int64_t t = 0; t < tiles; ++t) {
      if (failed.load(std::memory_order_relaxed)) continue;
      try {
        const std::size_t box = boxes[static_cast<std::size_t>(t)];
        staged.clear();
        grid.for_each_stencil_box(box, [&](std::size_t nb) {
          grid.for_each_in_box(nb, [&](std::uint32_t j) {
            staged.push_back({cpool.uid(j), cpool.x()[j], cpool.y()[j], cpool.z()[j],
                              cpool.radius(j), j});
          });
        });
        if (staged.size() > capacity) {
          const auto c = grid.box_coords(box);
          throw CapacityError("tile for box " + std::to_string(box) + " (" +
                              std::to_string(c[0]) + "," + std::to_string(c[1]) + "," +
                              std::to_string(c[2]) + ") stages " +
                              std::to_string(staged.size()) + " records, capacity " +
                              std::to_string(capacity));
        }
        std::sort(staged.begin(), staged.end(),
                  [](const auto& a, const auto& b) { return a.uid < b.uid; });
        staged_total += staged.size();

        grid.for_each_in_box(box, [&](std::uint32_t i) {
          const T qx = cpool.x()[i], qy = cpool.y()[i], qz = cpool.z()[i];
          const Vec3<T> pi{qx, qy, qz};
          const T ri = cpool.radius(i);
          const std::uint64_t ui = cpool.uid(i);
          Vec3<T> sum{};
          for (const auto& s : staged) {
            ++counters.candidates;
            const T ddx = s.x - qx, ddy = s.y - qy, ddz = s.z - qz;
            if (ddx * ddx + ddy * ddy + ddz * ddz <= r2 && s.index != i) {
              add_pair_force(sum, pi, ri, ui, Vec3<T>{s.x, s.y, s.z}, s.radius, s.uid, kappa,
                             gamma, policy, counters);
            }
          }
          pool.set_displacement(i, resolve_displacement(sum, adherence[i], params));
        });
      } catch (...) {
#pragma omp critical(cellmech_error)
        if (!error) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
      }
    }
#pragma omp critical(cellmech_counters)
    total += counters;
  }
  if (error) std::rethrow_exception(error);
  return staged_total;
}

}  // namespace

template <std::floating_point T>
std::size_t grow_and_divide(AgentPool<T>& pool, const GrowthParams& growth, std::size_t step) {
  const T rate = static_cast<T>(growth.volume_growth_rate);
  const auto diameters = pool.diameter();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    pool.set_diameter(i, sphere_diameter(sphere_volume(diameters[i]) + rate));
  }
  if (!growth.division_enabled) return 0;

  const T threshold = static_cast<T>(growth.division_diameter);
  std::vector<std::pair<std::uint64_t, std::size_t>> dividing;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool.diameter()[i] >= threshold) dividing.emplace_back(pool.uid(i), i);
  }
  std::sort(dividing.begin(), dividing.end());
  pool.reserve(pool.size() + dividing.size());
  for (const auto& [uid, i] : dividing) {
    const T mother_diameter = pool.diameter()[i];
    const T half_diameter = sphere_diameter(sphere_volume(mother_diameter) / T(2));
    const double offset = static_cast<double>(mother_diameter) * 0.5 / 4.0;
    const Vec3<double> dir = unit_vector(counter_key(uid, step, kStreamDivision));
    const Vec3<T> p = pool.position(i);
    const Vec3<T> daughter{static_cast<T>(static_cast<double>(p.x) + dir.x * offset),
                           static_cast<T>(static_cast<double>(p.y) + dir.y * offset),
                           static_cast<T>(static_cast<double>(p.z) + dir.z * offset)};
    pool.set_diameter(i, half_diameter);
    pool.append({0, daughter, half_diameter, pool.adherence()[i]});
  }
  return dividing.size();
}

template <std::floating_point T>
double total_volume(const AgentPool<T>& pool) {
  double sum = 0;
  for (T d : pool.diameter()) sum += sphere_volume(static_cast<double>(d));
  return sum;
}

template <std::floating_point T>
Engine<T>::Engine(SimulationConfig config) : config_(std::move(config)) {
  config_.precision = precision_of<T>();
  config_.validate();
}

template <std::floating_point T>
void Engine<T>::force_phase(AgentPool<T>& pool, const UniformGrid<T>* grid, const KdTree<T>* tree,
                            T radius, StepStats& stats) {
  const ExecutionStrategy& strategy = config_.strategy;
  const ForceParams& params = config_.force_params;
  const DegeneratePolicy policy = config_.degenerate_policy;
  const AgentPool<T>& cpool = pool;
  const auto adherence = cpool.adherence();

  if (strategy.kind == StrategyKind::kVoxelTiled) {
    stats.staged_records =
        voxel_tiled_forces(pool, *grid, params, strategy, policy, stats.counters);
    return;
  }
  const bool parallel = strategy.kind == StrategyKind::kAgentParallel;
  if (grid != nullptr) {
    for_each_agent(pool.size(), parallel, strategy.threads, stats.counters,
                   [&](std::size_t i, NeighborScratch& scratch, ForceCounters& counters) {
                     const Vec3<T> sum =
                         accumulate_forces(cpool, *grid, i, params, policy, &counters, &scratch);
                     pool.set_displacement(i, resolve_displacement(sum, adherence[i], params));
                   });
    return;
  }
  const T kappa = static_cast<T>(params.kappa);
  const T gamma = static_cast<T>(params.gamma);
  for_each_agent(pool.size(), parallel, strategy.threads, stats.counters,
                 [&](std::size_t i, NeighborScratch& scratch, ForceCounters& counters) {
                   const Vec3<T> pi = cpool.position(i);
                   const T ri = cpool.radius(i);
                   const std::uint64_t ui = cpool.uid(i);
                   Vec3<T> sum{};
                   counters.candidates += tree->radius_query(
                       cpool, i, radius,
                       [&](std::size_t j) {
                         add_pair_force(sum, pi, ri, ui, cpool.position(j), cpool.radius(j),
                                        cpool.uid(j), kappa, gamma, policy, counters);
                       },
                       scratch);
                   pool.set_displacement(i, resolve_displacement(sum, adherence[i], params));
                 });
}

template <std::floating_point T>
StepStats Engine<T>::step(AgentPool<T>& pool) {
  const auto t_step = Clock::now();
  StepStats stats;
  stats.step = step_index_;
  stats.agents_before = pool.size();

  if (config_.growth && !pool.empty()) {
    const auto t0 = Clock::now();
    stats.divisions = grow_and_divide(pool, *config_.growth, step_index_);
    stats.t_behavior_ms = ms_since(t0);
  }

  if (!pool.empty()) {
    const auto diameters = pool.diameter();
    const T radius = std::max(static_cast<T>(config_.interaction_radius),
                              *std::max_element(diameters.begin(), diameters.end()));
    GridOptions grid_options;
    grid_options.max_boxes = config_.max_boxes;
    grid_options.threads = config_.strategy.threads;
    grid_options.build = config_.strategy.kind == StrategyKind::kSerial ? GridBuild::kSerial
                                                                         : GridBuild::kParallel;

    if (config_.morton_sort_every > 0 && step_index_ % config_.morton_sort_every == 0) {
      const auto t0 = Clock::now();
      const auto grid = UniformGrid<T>::build(pool, radius, grid_options);
      reorder_pool(pool, compute_sort_permutation(pool, grid));
      stats.sorted = true;
      stats.t_sort_ms = ms_since(t0);
    }

    const auto t_index = Clock::now();
    std::optional<UniformGrid<T>> grid;
    std::optional<KdTree<T>> tree;
    if (config_.backend == NeighborBackend::kGrid) {
      grid.emplace(UniformGrid<T>::build(pool, radius, grid_options));
      stats.max_box_occupancy = grid->max_occupancy();
    } else {
      tree.emplace(KdTree<T>::build(pool));
    }
    stats.t_grid_ms = ms_since(t_index);

    const auto t_force = Clock::now();
    force_phase(pool, grid ? &*grid : nullptr, tree ? &*tree : nullptr, radius, stats);
    stats.t_force_ms = ms_since(t_force);
    stats.bytes_modeled =
        modeled_bytes(stats.counters.candidates, pool.size(), precision_of<T>());

    if (!config_.freeze_displacement) {
      const auto t0 = Clock::now();
      for (std::size_t i = 0; i < pool.size(); ++i) {
        pool.set_position(i, add(pool.position(i), pool.displacement(i)));
      }
      stats.t_apply_ms = ms_since(t0);
    }
  }

  stats.agents_after = pool.size();
  ++step_index_;
  stats.t_total_ms = ms_since(t_step);
  return stats;
}

template <std::floating_point T>
RunReport Engine<T>::run(AgentPool<T>& pool) {
  RunReport report;
  report.precision = precision_of<T>();
  report.steps.reserve(config_.steps);
  for (std::size_t s = 0; s < config_.steps; ++s) report.steps.push_back(step(pool));
  report.final_state_hash = state_hash(pool);
  return report;
}

void write_step_log(const RunReport& report, std::ostream& out) {
  for (const auto& s : report.steps) {
    out << "step " << s.step << " agents " << s.agents_before << "->" << s.agents_after
        << " divisions " << s.divisions << (s.sorted ? " sorted" : "") << " behavior_ms "
        << s.t_behavior_ms << " sort_ms " << s.t_sort_ms << " grid_ms " << s.t_grid_ms
        << " force_ms " << s.t_force_ms << " apply_ms " << s.t_apply_ms << " total_ms "
        << s.t_total_ms << " force_evals " << s.counters.force_evaluations << " candidates "
        << s.counters.candidates << " degenerate " << s.counters.degenerate << '\n';
  }
}

template <std::floating_point T>
std::uint64_t neighbor_set_hash(const AgentPool<T>& pool, NeighborBackend backend, T radius,
                                std::size_t max_boxes) {
  if (pool.empty()) return kFnvOffset;
  std::vector<std::pair<std::uint64_t, std::size_t>> order;
  order.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) order.emplace_back(pool.uid(i), i);
  std::sort(order.begin(), order.end());

  std::uint64_t h = kFnvOffset;
  NeighborScratch scratch;
  auto visit = [&](std::size_t j) {
    const std::uint64_t u = pool.uid(j);
    h = fnv1a(h, &u, sizeof u);
  };
  const std::uint64_t separator = ~std::uint64_t{0};
  if (backend == NeighborBackend::kGrid) {
    GridOptions options;
    options.max_boxes = max_boxes;
    const auto grid = UniformGrid<T>::build(pool, radius, options);
    for (const auto& [uid, i] : order) {
      h = fnv1a(h, &uid, sizeof uid);
      grid.for_each_neighbor(pool, i, radius, visit, scratch);
      h = fnv1a(h, &separator, sizeof separator);
    }
  } else {
    const auto tree = KdTree<T>::build(pool);
    for (const auto& [uid, i] : order) {
      h = fnv1a(h, &uid, sizeof uid);
      tree.radius_query(pool, i, radius, visit, scratch);
      h = fnv1a(h, &separator, sizeof separator);
    }
  }
  return h;
}

template std::size_t grow_and_divide<float>(AgentPool<float>&, const GrowthParams&, std::size_t);
template std::size_t grow_and_divide<double>(AgentPool<double>&, const GrowthParams&, std::size_t);
template double total_volume<float>(const AgentPool<float>&);
template double total_volume<double>(const AgentPool<double>&);
template class Engine<float>;
template class Engine<double>;
template std::uint64_t neighbor_set_hash<float>(const AgentPool<float>&, NeighborBackend, float,
                                                std::size_t);
template std::uint64_t neighbor_set_hash<double>(const AgentPool<double>&, NeighborBackend,
                                                 double, std::size_t);

}  // namespace cellmech
