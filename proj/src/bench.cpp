#include "cellmech/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "cellmech/kd_tree.hpp"
#include "cellmech/uniform_grid.hpp"

namespace cellmech {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::uint64_t hash_string(const std::string& s) { return fnv1a(kFnvOffset, s.data(), s.size()); }

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

struct PhaseTimes {
  double grid = 0, force = 0, behavior = 0, total = 0;
};

PhaseTimes per_step_times(const RunReport& report) {
  PhaseTimes t;
  if (report.steps.empty()) return t;
  for (const auto& s : report.steps) {
    t.grid += s.t_grid_ms + s.t_sort_ms;
    t.force += s.t_force_ms;
    t.behavior += s.t_behavior_ms;
    t.total += s.t_total_ms;
  }
  const auto n = static_cast<double>(report.steps.size());
  return {t.grid / n, t.force / n, t.behavior / n, t.total / n};
}

/// One benchmark row under measurement: every run starts from a copy of
/// `initial` and timed runs feed the per-phase medians.
template <std::floating_point T>
struct RowJob {
  const AgentPool<T>* initial = nullptr;
  SimulationConfig sim;
  BenchmarkRow row;
  std::vector<double> grid, force, behavior, total;
  AgentPool<T> last;
  RunReport report;

  void run_once(bool timed) {
    AgentPool<T> pool = *initial;
    RunReport r = run(pool, sim);
    if (!timed) return;
    const PhaseTimes t = per_step_times(r);
    grid.push_back(t.grid);
    force.push_back(t.force);
    behavior.push_back(t.behavior);
    total.push_back(t.total);
    report = std::move(r);
    last = std::move(pool);
  }

  void finish() {
    row.t_grid_ms = median(grid);
    row.t_force_ms = median(force);
    row.t_behavior_ms = median(behavior);
    row.t_total_ms = median(total);
    const ForceCounters c = report.total_counters();
    row.force_evals = c.force_evaluations;
    row.candidates = c.candidates;
    row.bytes_modeled = report.total_bytes_modeled();
    row.divisions = report.total_divisions();
    row.final_agents = last.size();
    row.state_hash = report.final_state_hash;
    if (!last.empty()) {
      const auto d = last.diameter();
      const T radius = std::max(static_cast<T>(sim.interaction_radius),
                                *std::max_element(d.begin(), d.end()));
      row.neighbor_hash = neighbor_set_hash(last, row.backend, radius, sim.max_boxes);
    }
  }
};

/// Warm-up rounds, then timed rounds; each round runs every row once, so
/// slow drift of the machine spreads over all rows instead of biasing one.
template <std::floating_point T>
BenchmarkReport time_rows(std::vector<RowJob<T>>& jobs, std::size_t warmup, std::size_t repeats) {
  for (std::size_t w = 0; w < warmup; ++w) {
    for (auto& job : jobs) job.run_once(false);
  }
  for (std::size_t r = 0; r < std::max<std::size_t>(repeats, 1); ++r) {
    for (auto& job : jobs) job.run_once(true);
  }
  BenchmarkReport rows;
  for (auto& job : jobs) {
    job.finish();
    rows.push_back(job.row);
  }
  return rows;
}

std::string row_key(const BenchmarkRow& row, const std::string& extra) {
  std::ostringstream os;
  os << row.bench << '|' << to_string(row.backend) << '|' << row.strategy.name() << '|'
     << row.strategy.threads << '|' << to_string(row.precision) << '|' << row.steps << '|'
     << (row.density_target ? format_double(*row.density_target) : "") << '|' << extra;
  return os.str();
}

template <std::floating_point T>
BenchmarkReport benchmark_a_impl(const BenchmarkAConfig& config) {
  const AgentPool<T> initial = spawn_benchmark_a<T>(config);
  const double density =
      measure_density(initial, static_cast<T>(config.diameter), std::size_t{1000});
  std::ostringstream extra;
  extra << config.side_count << '|' << config.spacing << '|' << config.diameter << '|'
        << config.adherence << '|' << config.growth.volume_growth_rate << '|'
        << config.growth.division_diameter << '|' << config.morton_sort_every;
  std::vector<RowJob<T>> jobs;
  for (NeighborBackend backend : config.backends) {
    for (const ExecutionStrategy& strategy : config.strategies) {
      if (backend == NeighborBackend::kKdTree && strategy.kind == StrategyKind::kVoxelTiled) {
        continue;
      }
      BenchmarkRow row;
      row.bench = "A";
      row.backend = backend;
      row.strategy = strategy;
      row.precision = precision_of<T>();
      row.density_measured = density;
      row.agents = initial.size();
      row.steps = config.steps;
      row.config_hash = hash_string(row_key(row, extra.str()));
      jobs.push_back({&initial, benchmark_a_simulation(config, strategy, backend), row});
    }
  }
  return time_rows(jobs, config.warmup, config.repeats);
}

template <std::floating_point T>
BenchmarkReport benchmark_b_impl(const BenchmarkBConfig& config) {
  std::ostringstream extra;
  extra << config.agent_count << '|' << config.radius << '|' << config.seed << '|'
        << config.morton_sort_every;
  std::vector<AgentPool<T>> pools;
  pools.reserve(config.target_densities.size());
  std::vector<RowJob<T>> jobs;
  for (double target : config.target_densities) {
    const AgentPool<T>& initial = pools.emplace_back(spawn_benchmark_b<T>(config, target));
    const double density =
        measure_density(initial, static_cast<T>(config.radius), config.density_sample);
    for (NeighborBackend backend : config.backends) {
      for (const ExecutionStrategy& strategy : config.strategies) {
        if (backend == NeighborBackend::kKdTree && strategy.kind == StrategyKind::kVoxelTiled) {
          continue;
        }
        BenchmarkRow row;
        row.bench = "B";
        row.backend = backend;
        row.strategy = strategy;
        row.precision = precision_of<T>();
        row.density_target = target;
        row.density_measured = density;
        row.agents = initial.size();
        row.steps = config.steps;
        row.config_hash = hash_string(row_key(row, extra.str()));
        jobs.push_back({&initial, benchmark_b_simulation(config, strategy, backend), row});
      }
    }
  }
  return time_rows(jobs, config.warmup, config.repeats);
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

void BenchmarkAConfig::validate() const {
  if (side_count < 2) throw std::invalid_argument("benchmark A side_count must be >= 2");
  if (!(spacing > 0) || !(diameter > 0)) {
    throw std::invalid_argument("spacing and diameter must be positive");
  }
  if (strategies.empty() || backends.empty()) {
    throw std::invalid_argument("at least one strategy and backend required");
  }
  force_params.validate();
  growth.validate();
  for (const auto& s : strategies) s.validate();
}

void BenchmarkBConfig::validate() const {
  if (agent_count < 2) throw std::invalid_argument("benchmark B agent_count must be >= 2");
  if (target_densities.empty()) throw std::invalid_argument("no density targets");
  for (double t : target_densities) {
    if (!(t > 0)) throw std::invalid_argument("density targets must be positive");
  }
  if (!(radius > 0)) throw std::invalid_argument("radius must be positive");
  if (strategies.empty() || backends.empty()) {
    throw std::invalid_argument("at least one strategy and backend required");
  }
  force_params.validate();
  for (const auto& s : strategies) s.validate();
}

double box_side_for_density(std::size_t agent_count, double radius, double target) {
  if (agent_count < 2 || !(radius > 0) || !(target > 0)) {
    throw std::invalid_argument("box_side_for_density needs agent_count >= 2 and positive inputs");
  }
  const double ball = 4.0 / 3.0 * std::numbers::pi * radius * radius * radius;
  return std::cbrt(static_cast<double>(agent_count - 1) * ball / target);
}

template <std::floating_point T>
double measure_density(const AgentPool<T>& pool, T radius, std::size_t sample) {
  const std::size_t n = pool.size();
  if (n == 0) return 0;
  const std::size_t k = (sample == 0 || sample > n) ? n : sample;
  std::uint64_t neighbors = 0;
  for (std::size_t s = 0; s < k; ++s) {
    const std::size_t q = s * n / k;
    const Vec3<T> p = pool.position(q);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != q && within_radius(pool.position(j), p, radius)) ++neighbors;
    }
  }
  return static_cast<double>(neighbors) / static_cast<double>(k);
}

template <std::floating_point T>
AgentPool<T> spawn_benchmark_b(const BenchmarkBConfig& config, double target) {
  const double side = box_side_for_density(config.agent_count, config.radius, target);
  const Aabb<T> bounds{{0, 0, 0}, {static_cast<T>(side), static_cast<T>(side), static_cast<T>(side)}};
  return spawn_random<T>(config.agent_count, bounds, static_cast<T>(config.radius),
                         static_cast<T>(config.adherence), config.seed);
}

template <std::floating_point T>
AgentPool<T> spawn_benchmark_a(const BenchmarkAConfig& config) {
  return spawn_grid<T>(config.side_count, static_cast<T>(config.spacing),
                       static_cast<T>(config.diameter), static_cast<T>(config.adherence));
}

SimulationConfig benchmark_a_simulation(const BenchmarkAConfig& config,
                                        const ExecutionStrategy& strategy,
                                        NeighborBackend backend) {
  SimulationConfig sim;
  sim.force_params = config.force_params;
  sim.strategy = strategy;
  sim.precision = config.precision;
  sim.morton_sort_every = config.morton_sort_every;
  sim.steps = config.steps;
  sim.growth = config.growth;
  sim.backend = backend;
  return sim;
}

SimulationConfig benchmark_b_simulation(const BenchmarkBConfig& config,
                                        const ExecutionStrategy& strategy,
                                        NeighborBackend backend) {
  SimulationConfig sim;
  sim.force_params = config.force_params;
  sim.strategy = strategy;
  sim.precision = config.precision;
  sim.morton_sort_every = config.morton_sort_every;
  sim.steps = config.steps;
  sim.freeze_displacement = true;
  sim.interaction_radius = config.radius;
  sim.backend = backend;
  return sim;
}

BenchmarkReport run_benchmark_a(const BenchmarkAConfig& config) {
  config.validate();
  return config.precision == Precision::kFp32 ? benchmark_a_impl<float>(config)
                                              : benchmark_a_impl<double>(config);
}

BenchmarkReport run_benchmark_b(const BenchmarkBConfig& config) {
  config.validate();
  return config.precision == Precision::kFp32 ? benchmark_b_impl<float>(config)
                                              : benchmark_b_impl<double>(config);
}

double arithmetic_intensity(std::uint64_t force_evals, std::uint64_t bytes_modeled) {
  if (force_evals == 0) return 0.0;
  if (bytes_modeled == 0) throw std::invalid_argument("arithmetic intensity: missing byte counter");
  return static_cast<double>(force_evals) * kFlopsPerForceEvaluation /
         static_cast<double>(bytes_modeled);
}

double estimate_arithmetic_intensity(const BenchmarkRow& row) {
  return arithmetic_intensity(row.force_evals, row.bytes_modeled);
}

template <std::floating_point T>
BackendTiming compare_backends(const AgentPool<T>& pool, T radius, std::size_t repeats) {
  BackendTiming out;
  std::vector<double> gb, gq, kb, kq;
  NeighborScratch scratch;
  for (std::size_t r = 0; r <= std::max<std::size_t>(repeats, 1); ++r) {
    std::uint64_t grid_sum = kFnvOffset;
    std::uint64_t kd_sum = kFnvOffset;

    auto t0 = Clock::now();
    const auto grid = UniformGrid<T>::build(pool, radius);
    const double grid_build = ms_since(t0);
    t0 = Clock::now();
    for (std::size_t i = 0; i < pool.size(); ++i) {
      grid.for_each_neighbor(pool, i, radius, [&](std::size_t j) {
        const std::uint64_t u = pool.uid(j);
        grid_sum = (grid_sum ^ u) * kFnvPrime;
      }, scratch);
    }
    const double grid_query = ms_since(t0);

    t0 = Clock::now();
    const auto tree = KdTree<T>::build(pool);
    const double kd_build = ms_since(t0);
    t0 = Clock::now();
    for (std::size_t i = 0; i < pool.size(); ++i) {
      tree.radius_query(pool, i, radius, [&](std::size_t j) {
        const std::uint64_t u = pool.uid(j);
        kd_sum = (kd_sum ^ u) * kFnvPrime;
      }, scratch);
    }
    const double kd_query = ms_since(t0);

    out.grid_neighbor_hash = grid_sum;
    out.kd_neighbor_hash = kd_sum;
    if (r == 0) continue;  // warm-up
    gb.push_back(grid_build);
    gq.push_back(grid_query);
    kb.push_back(kd_build);
    kq.push_back(kd_query);
  }
  out.grid_build_ms = median(gb);
  out.grid_query_ms = median(gq);
  out.kd_build_ms = median(kb);
  out.kd_query_ms = median(kq);
  return out;
}

void write_report_csv(const BenchmarkReport& report, std::ostream& out) {
  out << kReportHeader << '\n';
  for (const auto& r : report) {
    out << r.bench << ',' << to_string(r.backend) << ',' << r.strategy.name() << ','
        << to_string(r.precision) << ','
        << (r.density_target ? format_double(*r.density_target) : std::string()) << ','
        << format_double(r.density_measured) << ',' << r.agents << ',' << r.steps << ','
        << format_double(r.t_grid_ms) << ',' << format_double(r.t_force_ms) << ','
        << format_double(r.t_behavior_ms) << ',' << format_double(r.t_total_ms) << ','
        << r.force_evals << ',' << r.candidates << ',' << r.bytes_modeled << ','
        << format_double(estimate_arithmetic_intensity(r)) << ',' << r.strategy.threads << ','
        << r.final_agents << ',' << r.divisions << ',' << hex(r.config_hash) << ','
        << hex(r.state_hash) << ',' << hex(r.neighbor_hash) << '\n';
  }
}

void write_report_svg(const BenchmarkReport& report, const std::string& title, std::ostream& out) {
  const int bar_height = 18;
  const int gap = 6;
  const int label_width = 260;
  const int chart_width = 480;
  const int top = 40;
  const int height = top + static_cast<int>(report.size()) * (bar_height + gap) + 30;
  double max_t = 0;
  for (const auto& r : report) max_t = std::max(max_t, r.t_total_ms);
  if (max_t <= 0) max_t = 1;

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << label_width + chart_width + 100
      << "\" height=\"" << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<text x=\"10\" y=\"22\" font-size=\"15\">" << title << " (t_total_ms per step)</text>\n";
  int y = top;
  for (const auto& r : report) {
    std::string label = to_string(r.backend).data();
    label += " " + r.strategy.name() + "(" + std::to_string(r.strategy.threads) + ") " +
             std::string(to_string(r.precision));
    if (r.density_target) label += " n=" + format_double(*r.density_target);
    const double w = chart_width * r.t_total_ms / max_t;
    out << "<text x=\"10\" y=\"" << y + bar_height - 5 << "\">" << label << "</text>\n";
    out << "<rect x=\"" << label_width << "\" y=\"" << y << "\" width=\"" << w << "\" height=\""
        << bar_height << "\" fill=\"#1f77b4\"/>\n";
    out << "<text x=\"" << label_width + w + 4 << "\" y=\"" << y + bar_height - 5 << "\">"
        << format_double(std::round(r.t_total_ms * 100) / 100) << "</text>\n";
    y += bar_height + gap;
  }
  out << "</svg>\n";
}

PrecisionDrift precision_drift(const AgentPool<float>& single, const AgentPool<double>& reference) {
  PrecisionDrift drift;
  const auto a = sorted_records(single);
  const auto b = sorted_records(reference);
  if (a.size() != b.size()) return drift;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].uid != b[i].uid) return drift;
  }
  drift.same_agents = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double pa[3] = {a[i].position.x, a[i].position.y, a[i].position.z};
    const double pb[3] = {b[i].position.x, b[i].position.y, b[i].position.z};
    for (int c = 0; c < 3; ++c) {
      const double rel = std::abs(pa[c] - pb[c]) / std::max(std::abs(pb[c]), 1.0);
      drift.max_relative = std::max(drift.max_relative, rel);
    }
  }
  return drift;
}

template double measure_density<float>(const AgentPool<float>&, float, std::size_t);
template double measure_density<double>(const AgentPool<double>&, double, std::size_t);
template AgentPool<float> spawn_benchmark_b<float>(const BenchmarkBConfig&, double);
template AgentPool<double> spawn_benchmark_b<double>(const BenchmarkBConfig&, double);
template AgentPool<float> spawn_benchmark_a<float>(const BenchmarkAConfig&);
template AgentPool<double> spawn_benchmark_a<double>(const BenchmarkAConfig&);
template BackendTiming compare_backends<float>(const AgentPool<float>&, float, std::size_t);
template BackendTiming compare_backends<double>(const AgentPool<double>&, double, std::size_t);

}  // namespace cellmech
