#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cellmech/bench.hpp"
#include "oracles.hpp"

using namespace cellmech;

namespace {

BenchmarkBConfig small_b() {
  BenchmarkBConfig b;
  b.agent_count = 4000;
  b.target_densities = {3, 11};
  b.repeats = 2;
  b.warmup = 1;
  b.density_sample = 0;
  b.strategies = {ExecutionStrategy::serial(), ExecutionStrategy::agent_parallel(2)};
  return b;
}

std::string without_timings(const BenchmarkReport& report) {
  std::ostringstream out;
  for (const auto& r : report) {
    out << r.bench << r.strategy.name() << r.density_measured << r.agents << r.final_agents
        << r.force_evals << r.candidates << r.bytes_modeled << r.divisions << r.config_hash
        << r.state_hash << r.neighbor_hash << '\n';
  }
  return out.str();
}

}  // namespace

TEST_CASE("median") {
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  CHECK(median({}) == 0);
}

TEST_CASE("cube side for a density target") {
  const double side = box_side_for_density(1000, 5, 27);
  const double expected = std::cbrt(999 * 4.0 / 3.0 * 3.141592653589793 * 125 / 27);
  CHECK(side == doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(box_side_for_density(1, 5, 27), std::invalid_argument);
  CHECK_THROWS_AS(box_side_for_density(100, 5, 0), std::invalid_argument);
}

TEST_CASE("measured density matches the oracle") {
  const auto pool = spawn_random<double>(1500, {{0, 0, 0}, {60, 60, 60}}, 5, 0.4, 4);
  CHECK(measure_density(pool, 5.0, 0) == doctest::Approx(oracle::mean_neighbor_count(pool, 5.0)));
  CHECK(measure_density(pool, 5.0, 100) >= 0);
}

TEST_CASE("calibration recovers the target at scale") {
  BenchmarkBConfig b;
  b.agent_count = 50000;
  for (double target : {3.0, 27.0}) {
    const auto pool = spawn_benchmark_b<double>(b, target);
    const double measured = measure_density(pool, b.radius, 1000);
    CHECK(std::abs(measured - target) <= 0.1 * target);
  }
}

TEST_CASE("arithmetic intensity") {
  CHECK(arithmetic_intensity(0, 0) == 0);
  CHECK_THROWS_AS(arithmetic_intensity(5, 0), std::invalid_argument);
  const std::uint64_t evals = 1234, candidates = 5678, agents = 100;
  const double fp32 = arithmetic_intensity(evals, modeled_bytes(candidates, agents, Precision::kFp32));
  const double fp64 = arithmetic_intensity(evals, modeled_bytes(candidates, agents, Precision::kFp64));
  CHECK(fp32 == 2 * fp64);
  CHECK(fp64 == evals * kFlopsPerForceEvaluation / (8.0 * (4 * candidates + 8 * agents)));
}

TEST_CASE("benchmark B report") {
  const auto b = small_b();
  const auto report = run_benchmark_b(b);
  REQUIRE(report.size() == 4);
  for (const auto& row : report) {
    CHECK(row.bench == "B");
    CHECK(row.agents == 4000);
    CHECK(row.final_agents == 4000);
    CHECK(row.t_total_ms > 0);
    CHECK(row.force_evals > 0);
    CHECK(row.density_target.has_value());
  }
  CHECK(report[0].force_evals == report[1].force_evals);
  CHECK(report[0].state_hash == report[1].state_hash);
  CHECK(report[2].force_evals > report[0].force_evals);
  CHECK(without_timings(run_benchmark_b(b)) == without_timings(report));

  std::ostringstream csv;
  write_report_csv(report, csv);
  const std::string text = csv.str();
  CHECK(text.rfind(std::string(kReportHeader) + "\n", 0) == 0);
  std::size_t lines = 0;
  for (char c : text) lines += c == '\n';
  CHECK(lines == 5);

  std::ostringstream svg;
  write_report_svg(report, "B", svg);
  CHECK(svg.str().find("<svg") != std::string::npos);
  CHECK(svg.str().find("</svg>") != std::string::npos);
}

TEST_CASE("benchmark A report") {
  BenchmarkAConfig a;
  a.side_count = 4;
  a.steps = 10;
  a.repeats = 1;
  a.warmup = 0;
  a.strategies = {ExecutionStrategy::serial(), ExecutionStrategy::voxel_tiled(2)};
  a.backends = {NeighborBackend::kGrid, NeighborBackend::kKdTree};
  const auto report = run_benchmark_a(a);
  REQUIRE(report.size() == 3);  // the tiled strategy needs the grid
  for (const auto& row : report) {
    CHECK(row.bench == "A");
    CHECK(row.agents == 64);
    CHECK(row.final_agents == 256);
    CHECK(row.divisions == 192);
    CHECK(row.state_hash == report[0].state_hash);
  }
  CHECK(estimate_arithmetic_intensity(report[0]) > 0);
}

TEST_CASE("backend comparison reports matching neighbor sets") {
  const auto pool = spawn_random<double>(3000, {{0, 0, 0}, {80, 80, 80}}, 5, 0.4, 6);
  const auto t = compare_backends(pool, 5.0, 2);
  CHECK(t.grid_neighbor_hash == t.kd_neighbor_hash);
  CHECK(t.grid_total_ms() > 0);
  CHECK(t.kd_total_ms() > 0);
}

TEST_CASE("precision drift") {
  BenchmarkAConfig a;
  a.side_count = 4;
  a.steps = 10;
  auto single = spawn_benchmark_a<float>(a);
  auto reference = spawn_benchmark_a<double>(a);
  const auto exact = precision_drift(single, reference);
  CHECK(exact.same_agents);
  CHECK(exact.max_relative == 0);
  run(single, benchmark_a_simulation(a, ExecutionStrategy::serial(), NeighborBackend::kGrid));
  run(reference, benchmark_a_simulation(a, ExecutionStrategy::serial(), NeighborBackend::kGrid));
  const auto drift = precision_drift(single, reference);
  CHECK(drift.same_agents);
  CHECK(drift.max_relative > 0);
  CHECK(drift.max_relative < 1e-3);
}

TEST_CASE("config validation") {
  BenchmarkAConfig a;
  a.side_count = 1;
  CHECK_THROWS_AS(a.validate(), std::invalid_argument);
  BenchmarkBConfig b;
  b.target_densities = {0};
  CHECK_THROWS_AS(b.validate(), std::invalid_argument);
  b = {};
  b.agent_count = 1;
  CHECK_THROWS_AS(b.validate(), std::invalid_argument);
}
