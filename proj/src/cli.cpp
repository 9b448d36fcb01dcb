#include "cellmech/cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "cellmech/bench.hpp"
#include "cellmech/engine.hpp"
#include "cellmech/kd_tree.hpp"
#include "cellmech/uniform_grid.hpp"

namespace cellmech::cli {

using nlohmann::json;

namespace {

/// Raised for configuration problems; maps to exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int default_threads() {
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

json common_defaults() {
  return {{"seed", 1},        {"precision", "fp64"}, {"threads", default_threads()},
          {"morton_every", 1}, {"out", "."}};
}

json force_defaults() {
  const ForceParams f;
  return {{"kappa", f.kappa},
          {"gamma", f.gamma},
          {"timestep", f.timestep},
          {"max_displacement", f.max_displacement},
          {"adherence_scale", f.adherence_scale}};
}

std::string flag_name(const std::string& key) {
  std::string name = "--" + key;
  std::replace(name.begin(), name.end(), '_', '-');
  return name;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

json coerce(const json& like, const std::string& key, const std::string& text) {
  auto fail = [&]() -> json {
    throw UsageError("invalid value '" + text + "' for " + key);
  };
  if (like.is_boolean()) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    return fail();
  }
  if (like.is_number_integer()) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return fail();
    return v;
  }
  if (like.is_number()) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return fail();
    return v;
  }
  return text;
}

/// Brings a config-file value to the type of the default.
json coerce_json(const json& like, const std::string& key, const json& value) {
  if (value.is_array()) {
    std::string joined;
    for (const auto& item : value) {
      if (!joined.empty()) joined += ',';
      joined += item.is_string() ? item.get<std::string>() : item.dump();
    }
    return coerce(like, key, joined);
  }
  if (value.is_string()) return coerce(like, key, value.get<std::string>());
  if (like.is_boolean() && value.is_boolean()) return value;
  if (like.is_number_integer() && value.is_number_integer()) return value;
  if (like.is_number() && !like.is_number_integer() && value.is_number()) {
    return value.get<double>();
  }
  if (like.is_string()) return value.dump();
  throw UsageError("config key '" + key + "' has the wrong type");
}

template <typename V>
V get(const json& values, const char* key) {
  return values.at(key).get<V>();
}

ForceParams force_params_from(const json& v) {
  ForceParams f;
  f.kappa = get<double>(v, "kappa");
  f.gamma = get<double>(v, "gamma");
  f.timestep = get<double>(v, "timestep");
  f.max_displacement = get<double>(v, "max_displacement");
  f.adherence_scale = get<double>(v, "adherence_scale");
  return f;
}

std::size_t get_count(const json& v, const char* key) {
  const long long n = get<long long>(v, key);
  if (n < 0) throw UsageError(std::string(key) + " must be nonnegative");
  return static_cast<std::size_t>(n);
}

int get_threads(const json& v) {
  const long long t = get<long long>(v, "threads");
  if (t < 1) throw UsageError("threads must be >= 1");
  return static_cast<int>(t);
}

std::vector<ExecutionStrategy> strategies_from(const json& v) {
  std::vector<ExecutionStrategy> out;
  for (const auto& name : split_list(get<std::string>(v, "strategies"))) {
    out.push_back(ExecutionStrategy::parse(name, get_threads(v)));
  }
  return out;
}

std::vector<NeighborBackend> backends_from(const json& v) {
  std::vector<NeighborBackend> out;
  for (const auto& name : split_list(get<std::string>(v, "backends"))) {
    out.push_back(parse_backend(name));
  }
  return out;
}

std::filesystem::path output_dir(const json& v) {
  std::filesystem::path dir = get<std::string>(v, "out");
  std::filesystem::create_directories(dir);
  return dir;
}

template <std::floating_point T>
AgentPool<T> make_pool(const json& v) {
  const std::string source = get<std::string>(v, "agents");
  const auto colon = source.find(':');
  if (colon == std::string::npos) throw UsageError("agents must be grid:N, random:N or csv:PATH");
  const std::string kind = source.substr(0, colon);
  const std::string arg = source.substr(colon + 1);
  const T diameter = static_cast<T>(get<double>(v, "diameter"));
  const T adherence = static_cast<T>(get<double>(v, "adherence"));
  if (kind == "csv") {
    std::ifstream in(arg);
    if (!in) throw UsageError("cannot open snapshot '" + arg + "'");
    return read_snapshot_csv<T>(in);
  }
  const json count = coerce(json(0), "agents", arg);
  if (count.get<long long>() < 0) throw UsageError("agent count must be nonnegative");
  const auto n = count.get<std::size_t>();
  if (kind == "grid") {
    return spawn_grid<T>(n, static_cast<T>(get<double>(v, "spacing")), diameter, adherence);
  }
  if (kind == "random") {
    double side = get<double>(v, "side_length");
    if (side <= 0) {
      const double radius = std::max(get<double>(v, "interaction_radius"), static_cast<double>(diameter));
      side = n >= 2 ? box_side_for_density(n, radius, get<double>(v, "density"))
                    : static_cast<double>(diameter);
    }
    const T s = static_cast<T>(side);
    return spawn_random<T>(n, Aabb<T>{{0, 0, 0}, {s, s, s}}, diameter, adherence,
                           get<std::uint64_t>(v, "seed"));
  }
  throw UsageError("unknown agent source '" + kind + "'");
}

SimulationConfig simulation_from(const json& v) {
  SimulationConfig sim;
  sim.force_params = force_params_from(v);
  sim.strategy = ExecutionStrategy::parse(get<std::string>(v, "strategy"), get_threads(v));
  sim.strategy.tile_capacity = get_count(v, "tile_capacity");
  sim.precision = parse_precision(get<std::string>(v, "precision"));
  sim.morton_sort_every = get_count(v, "morton_every");
  sim.steps = get_count(v, "steps");
  if (get<bool>(v, "growth")) {
    GrowthParams g;
    g.volume_growth_rate = get<double>(v, "growth_rate");
    g.division_diameter = get<double>(v, "division_diameter");
    g.division_enabled = get<bool>(v, "division");
    sim.growth = g;
  }
  sim.freeze_displacement = get<bool>(v, "freeze");
  sim.interaction_radius = get<double>(v, "interaction_radius");
  sim.backend = parse_backend(get<std::string>(v, "backend"));
  sim.validate();
  return sim;
}

void write_run_report_csv(const RunReport& report, std::ostream& out) {
  out << "step,agents_before,agents_after,divisions,sorted,t_behavior_ms,t_sort_ms,t_grid_ms,"
         "t_force_ms,t_apply_ms,t_total_ms,force_evals,candidates,degenerate,bytes_modeled,"
         "ai_flops_per_byte\n";
  for (const auto& s : report.steps) {
    out << s.step << ',' << s.agents_before << ',' << s.agents_after << ',' << s.divisions << ','
        << (s.sorted ? 1 : 0) << ',' << s.t_behavior_ms << ',' << s.t_sort_ms << ','
        << s.t_grid_ms << ',' << s.t_force_ms << ',' << s.t_apply_ms << ',' << s.t_total_ms
        << ',' << s.counters.force_evaluations << ',' << s.counters.candidates << ','
        << s.counters.degenerate << ',' << s.bytes_modeled << ','
        << arithmetic_intensity(s.counters.force_evaluations, s.bytes_modeled) << '\n';
  }
}

template <std::floating_point T>
int run_impl(const json& v, std::ostream& out, std::ostream& err) {
  SimulationConfig sim;
  AgentPool<T> pool;
  std::filesystem::path dir;
  try {
    sim = simulation_from(v);
    pool = make_pool<T>(v);
    dir = output_dir(v);
  } catch (const UsageError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  {
    std::ofstream f(dir / "initial.csv");
    write_snapshot_csv(pool, f);
  }
  const std::size_t initial = pool.size();
  RunReport report;
  try {
    report = run(pool, sim);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  {
    std::ofstream f(dir / "snapshot.csv");
    write_snapshot_csv(pool, f);
  }
  {
    std::ofstream f(dir / "run_report.csv");
    write_run_report_csv(report, f);
  }
  if (get<bool>(v, "log")) write_step_log(report, out);
  out << "agents " << initial << " -> " << pool.size() << ", steps " << report.steps.size()
      << ", state_hash " << std::hex << report.final_state_hash << std::dec << ", snapshot "
      << (dir / "snapshot.csv").string() << '\n';
  return kExitOk;
}

BenchmarkAConfig bench_a_from(const json& v) {
  BenchmarkAConfig c;
  c.side_count = get_count(v, "side");
  c.steps = get_count(v, "steps");
  c.spacing = get<double>(v, "spacing");
  c.diameter = get<double>(v, "diameter");
  c.adherence = get<double>(v, "adherence");
  c.force_params = force_params_from(v);
  c.growth.volume_growth_rate = get<double>(v, "growth_rate");
  c.growth.division_diameter = get<double>(v, "division_diameter");
  c.strategies = strategies_from(v);
  c.backends = backends_from(v);
  c.precision = parse_precision(get<std::string>(v, "precision"));
  c.morton_sort_every = get_count(v, "morton_every");
  c.repeats = get_count(v, "repeats");
  c.warmup = get_count(v, "warmup");
  c.validate();
  return c;
}

BenchmarkBConfig bench_b_from(const json& v) {
  BenchmarkBConfig c;
  c.agent_count = get_count(v, "agents");
  c.target_densities.clear();
  for (const auto& d : split_list(get<std::string>(v, "densities"))) {
    c.target_densities.push_back(coerce(json(0.0), "densities", d).get<double>());
  }
  c.steps = get_count(v, "steps");
  c.radius = get<double>(v, "radius");
  c.adherence = get<double>(v, "adherence");
  c.force_params = force_params_from(v);
  c.strategies = strategies_from(v);
  c.backends = backends_from(v);
  c.precision = parse_precision(get<std::string>(v, "precision"));
  c.seed = get<std::uint64_t>(v, "seed");
  c.morton_sort_every = get_count(v, "morton_every");
  c.repeats = get_count(v, "repeats");
  c.warmup = get_count(v, "warmup");
  c.density_sample = get_count(v, "density_sample");
  c.validate();
  return c;
}

void print_check(std::ostream& out, bool pass, const std::string& name, const std::string& detail) {
  out << (pass ? "PASS " : "FAIL ") << name << " (" << detail << ")\n";
}

}  // namespace

json default_values(const std::string& subcommand, const std::string& bench_id) {
  json v = common_defaults();
  if (subcommand == "run") {
    v.update(force_defaults());
    v.update(json{{"agents", "grid:4"},
                  {"steps", 1},
                  {"strategy", "serial"},
                  {"backend", "grid"},
                  {"tile_capacity", 0},
                  {"spacing", 20.0},
                  {"diameter", 30.0},
                  {"adherence", kDefaultAdherence},
                  {"density", 27.0},
                  {"side_length", 0.0},
                  {"interaction_radius", 0.0},
                  {"growth", false},
                  {"growth_rate", GrowthParams{}.volume_growth_rate},
                  {"division_diameter", GrowthParams{}.division_diameter},
                  {"division", true},
                  {"freeze", false},
                  {"log", false}});
  } else if (subcommand == "bench") {
    const bool is_b = bench_id == "B";
    v.update(force_defaults());
    v.update(json{{"bench", is_b ? "B" : "A"},
                  {"side", 32},
                  {"steps", is_b ? 1 : 10},
                  {"spacing", 20.0},
                  {"diameter", 30.0},
                  {"adherence", kDefaultAdherence},
                  {"growth_rate", GrowthParams{}.volume_growth_rate},
                  {"division_diameter", GrowthParams{}.division_diameter},
                  {"agents", 100000},
                  {"densities", "1,3,6,11,17,27,35,47"},
                  {"radius", 5.0},
                  {"density_sample", 1000},
                  {"strategies", "serial,parallel"},
                  {"backends", "grid"},
                  {"repeats", 5},
                  {"warmup", 1},
                  {"svg", false}});
  } else if (subcommand == "verify") {
    v.update(json{{"precision_tolerance", 1e-3}, {"sample", 500}, {"side", 8}, {"steps", 10}});
  } else {
    throw std::invalid_argument("unknown subcommand '" + subcommand + "'");
  }
  return v;
}

int cmd_run(const CliConfig& config, std::ostream& out, std::ostream& err) {
  const json& v = config.values;
  return parse_precision(get<std::string>(v, "precision")) == Precision::kFp32
             ? run_impl<float>(v, out, err)
             : run_impl<double>(v, out, err);
}

int cmd_bench(const CliConfig& config, std::ostream& out, std::ostream& err) {
  const json& v = config.values;
  const std::string id = get<std::string>(v, "bench");
  if (id != "A" && id != "B") throw UsageError("benchmark id must be A or B");
  BenchmarkReport report;
  std::filesystem::path dir;
  BenchmarkAConfig a;
  BenchmarkBConfig b;
  try {
    if (id == "A") {
      a = bench_a_from(v);
    } else {
      b = bench_b_from(v);
    }
    dir = output_dir(v);
  } catch (const UsageError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  try {
    report = id == "A" ? run_benchmark_a(a) : run_benchmark_b(b);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  const auto csv = dir / ("bench_" + id + ".csv");
  {
    std::ofstream f(csv);
    write_report_csv(report, f);
  }
  if (get<bool>(v, "svg")) {
    std::ofstream f(dir / ("bench_" + id + ".svg"));
    write_report_svg(report, "Benchmark " + id, f);
  }
  write_report_csv(report, out);
  out << "wrote " << csv.string() << '\n';
  return kExitOk;
}

int cmd_verify(const CliConfig& config, std::ostream& out, std::ostream& err) {
  const json& v = config.values;
  bool all = true;
  try {
    const std::uint64_t seed = get<std::uint64_t>(v, "seed");
    const int threads = get_threads(v);

    // Grid and kd-tree against the brute-force oracle.
    {
      const std::size_t n = std::max<std::size_t>(get_count(v, "sample"), 2);
      const double radius = 5.0;
      const double side = box_side_for_density(n, radius, 10.0);
      const auto pool = spawn_random<double>(n, {{0, 0, 0}, {side, side, side}}, radius,
                                             kDefaultAdherence, seed);
      const auto grid = UniformGrid<double>::build(pool, radius);
      const auto tree = KdTree<double>::build(pool);
      std::size_t mismatches = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto expected = brute_force_neighbors(pool, i, radius);
        std::vector<std::size_t> from_grid, from_tree;
        grid.for_each_neighbor(pool, i, radius, [&](std::size_t j) { from_grid.push_back(j); });
        tree.radius_query(pool, i, radius, [&](std::size_t j) { from_tree.push_back(j); });
        if (from_grid != expected || from_tree != expected) ++mismatches;
      }
      const bool pass = mismatches == 0;
      all &= pass;
      print_check(out, pass, "grid_oracle",
                  std::to_string(n) + " agents, " + std::to_string(mismatches) + " mismatches");
    }

    // Float against double on a small proliferating lattice.
    BenchmarkAConfig small;
    small.side_count = get_count(v, "side");
    small.steps = get_count(v, "steps");
    {
      const double tolerance = get<double>(v, "precision_tolerance");
      auto single = spawn_benchmark_a<float>(small);
      auto reference = spawn_benchmark_a<double>(small);
      run(single, benchmark_a_simulation(small, ExecutionStrategy::serial(), NeighborBackend::kGrid));
      run(reference,
          benchmark_a_simulation(small, ExecutionStrategy::serial(), NeighborBackend::kGrid));
      const PrecisionDrift drift = precision_drift(single, reference);
      const bool pass = drift.same_agents && drift.max_relative <= tolerance;
      all &= pass;
      std::ostringstream detail;
      detail << "max relative drift " << drift.max_relative << ", tolerance " << tolerance
             << (drift.same_agents ? "" : ", agent sets differ");
      print_check(out, pass, "precision_drift", detail.str());
    }

    // All strategies reach the same state.
    {
      std::vector<std::uint64_t> hashes;
      for (const auto& strategy :
           {ExecutionStrategy::serial(), ExecutionStrategy::agent_parallel(threads),
            ExecutionStrategy::voxel_tiled(threads)}) {
        auto pool = spawn_benchmark_a<double>(small);
        hashes.push_back(
            run(pool, benchmark_a_simulation(small, strategy, NeighborBackend::kGrid))
                .final_state_hash);
      }
      const bool pass = std::all_of(hashes.begin(), hashes.end(),
                                    [&](std::uint64_t h) { return h == hashes.front(); });
      all &= pass;
      std::ostringstream detail;
      detail << "serial/parallel/tiled hashes " << std::hex << hashes[0] << '/' << hashes[1] << '/'
             << hashes[2];
      print_check(out, pass, "strategy_equivalence", detail.str());
    }
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return all ? kExitOk : kExitFailure;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Agent-based cell mechanics engine and benchmark harness", "cellmech"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app = nullptr;
    json defaults;
    std::map<std::string, std::string> raw;
    std::map<std::string, bool> flags;
    std::map<std::string, CLI::Option*> options;
    std::string config_path;
    bool print_config = false;
  };
  std::map<std::string, Sub> subs;
  const std::map<std::string, std::string> descriptions = {
      {"run", "Run a simulation and write pool snapshots and a per-step report"},
      {"bench", "Run benchmark A (proliferation) or B (density sweep)"},
      {"verify", "Run the embedded cross-checks"}};

  for (const auto& [name, description] : descriptions) {
    Sub& sub = subs[name];
    sub.app = app.add_subcommand(name, description);
    sub.defaults = default_values(name);
    sub.app->add_option("--config", sub.config_path, "Flat JSON config file");
    sub.app->add_flag("--print-config", sub.print_config,
                      "Print the resolved configuration and exit");
    for (const auto& [key, value] : sub.defaults.items()) {
      if (name == "bench" && key == "bench") {
        sub.options[key] = sub.app->add_option(key, sub.raw[key], "Benchmark id: A or B");
        continue;
      }
      const std::string help = "default: " + value.dump();
      if (value.is_boolean()) {
        sub.options[key] = sub.app->add_flag(flag_name(key), sub.flags[key], help);
      } else {
        sub.options[key] = sub.app->add_option(flag_name(key), sub.raw[key], help);
      }
    }
  }

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const bool help = e.get_exit_code() == 0;
    (help ? out : err) << (help ? app.help() : std::string(e.what()) + "\n");
    return help ? kExitOk : kExitUsage;
  }

  for (auto& [name, sub] : subs) {
    if (!sub.app->parsed()) continue;
    try {
      // The benchmark id picks the defaults, so find it first.
      std::string bench_id = "A";
      json file = json::object();
      if (!sub.config_path.empty()) {
        std::ifstream in(sub.config_path);
        if (!in) throw UsageError("cannot open config file '" + sub.config_path + "'");
        try {
          file = json::parse(in);
        } catch (const json::exception& e) {
          throw UsageError(std::string("malformed config file: ") + e.what());
        }
        if (!file.is_object()) throw UsageError("config file must be a flat JSON object");
      }
      if (name == "bench") {
        if (sub.options["bench"]->count() > 0) {
          bench_id = sub.raw["bench"];
        } else if (file.contains("bench") && file["bench"].is_string()) {
          bench_id = file["bench"].get<std::string>();
        }
      }
      CliConfig config{name, default_values(name, bench_id)};
      json& values = config.values;
      for (const auto& [key, value] : file.items()) {
        if (!values.contains(key)) throw UsageError("unknown config key '" + key + "'");
        values[key] = coerce_json(values[key], key, value);
      }
      for (const auto& [key, option] : sub.options) {
        if (option->count() == 0) continue;
        values[key] = values[key].is_boolean() ? json(sub.flags[key])
                                               : coerce(values[key], key, sub.raw[key]);
      }
      if (sub.print_config) {
        out << values.dump(2) << '\n';
        return kExitOk;
      }
      if (name == "run") return cmd_run(config, out, err);
      if (name == "bench") return cmd_bench(config, out, err);
      return cmd_verify(config, out, err);
    } catch (const UsageError& e) {
      err << "usage error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const std::invalid_argument& e) {
      err << "usage error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const json::exception& e) {
      err << "usage error: " << e.what() << '\n';
      return kExitUsage;
    }
  }
  err << "no subcommand\n";
  return kExitUsage;
}

}  // namespace cellmech::cli
