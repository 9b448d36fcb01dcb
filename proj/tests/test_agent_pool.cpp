#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "cellmech/agent_pool.hpp"
#include "cellmech/morton.hpp"
#include "cellmech/random.hpp"
#include "cellmech/uniform_grid.hpp"
#include "oracles.hpp"

using namespace cellmech;

namespace {

template <typename T>
std::vector<AgentRecord<T>> records_sorted(const AgentPool<T>& pool) {
  return sorted_records(pool);
}

template <typename T>
void check_lengths(const AgentPool<T>& pool) {
  const std::size_t n = pool.size();
  CHECK(pool.x().size() == n);
  CHECK(pool.y().size() == n);
  CHECK(pool.z().size() == n);
  CHECK(pool.diameter().size() == n);
  CHECK(pool.adherence().size() == n);
  CHECK(pool.uids().size() == n);
  CHECK(pool.displacement_x().size() == n);
  CHECK_NOTHROW(pool.check_invariants());
}

}  // namespace

TEST_CASE("precision names") {
  CHECK(parse_precision("fp32") == Precision::kFp32);
  CHECK(parse_precision("fp64") == Precision::kFp64);
  CHECK(to_string(Precision::kFp32) == "fp32");
  CHECK_THROWS_AS(parse_precision("fp16"), std::invalid_argument);
  CHECK(scalar_bytes(Precision::kFp32) * 2 == scalar_bytes(Precision::kFp64));
}

TEST_CASE_TEMPLATE("lattice spawn", T, float, double) {
  const auto one = spawn_grid<T>(1, 20, 30, 0.4f);
  REQUIRE(one.size() == 1);
  CHECK(one.position(0) == Vec3<T>{0, 0, 0});

  const auto two = spawn_grid<T>(2, 20, 30, 0.4f);
  REQUIRE(two.size() == 8);
  T hi = 0;
  for (std::size_t i = 0; i < two.size(); ++i) {
    hi = std::max({hi, two.x()[i], two.y()[i], two.z()[i]});
  }
  CHECK(hi == T(20));

  CHECK(spawn_grid<T>(64, 20, 30, 0.4f).size() == 262144);
  CHECK_THROWS_AS(spawn_grid<T>(64, 20, 30, 0.4f, 1000), CapacityError);
}

TEST_CASE_TEMPLATE("random spawn is reproducible", T, float, double) {
  const Aabb<T> box{{0, 0, 0}, {100, 100, 100}};
  CHECK(spawn_random<T>(0, box, 5, 0.4f, 1).size() == 0);
  const auto a = spawn_random<T>(1000, box, 5, 0.4f, 42);
  const auto b = spawn_random<T>(1000, box, 5, 0.4f, 42);
  const auto c = spawn_random<T>(1000, box, 5, 0.4f, 43);
  CHECK(state_hash(a) == state_hash(b));
  CHECK(state_hash(a) != state_hash(c));
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.x()[i] >= 0);
    CHECK(a.x()[i] <= 100);
  }
  CHECK_THROWS_AS(spawn_random<T>(10, Aabb<T>::empty(), 5, 0.4f, 1), std::invalid_argument);
}

TEST_CASE("append and remove") {
  AgentPool<double> pool;
  const auto i = pool.append({99, {1, 2, 3}, 10, 0.4});
  CHECK(pool.size() == 1);
  CHECK(pool.uid(i) == 0);
  pool.remove(i);
  CHECK(pool.size() == 0);
  CHECK_THROWS_AS(pool.remove(0), std::out_of_range);

  auto lattice = spawn_grid<double>(3, 20, 30, 0.4);
  const auto before = lattice.uids();
  std::vector<std::uint64_t> original(before.begin(), before.end());
  const auto k = lattice.append({0, {5, 5, 5}, 30, 0.4});
  CHECK(lattice.uid(k) == 27);  // fresh uid, the record uid is ignored
  lattice.remove(k);
  std::vector<std::uint64_t> after(lattice.uids().begin(), lattice.uids().end());
  std::sort(after.begin(), after.end());
  CHECK(after == original);
  check_lengths(lattice);
}

TEST_CASE("arrays stay aligned under random structural edits") {
  auto pool = spawn_random<double>(200, {{0, 0, 0}, {50, 50, 50}}, 4, 0.4, 3);
  SplitMix64 rng(11);
  for (int op = 0; op < 2000; ++op) {
    const auto choice = rng.next() % 3;
    if (choice == 0 || pool.empty()) {
      pool.append({0, {rng.uniform(), rng.uniform(), rng.uniform()}, 4, 0.4});
    } else if (choice == 1) {
      pool.remove(rng.next() % pool.size());
    } else {
      std::vector<std::size_t> perm(pool.size());
      std::iota(perm.begin(), perm.end(), 0);
      for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.next() % i]);
      pool.apply_permutation(perm);
    }
  }
  check_lengths(pool);
}

TEST_CASE("permutation") {
  auto pool = spawn_grid<double>(2, 20, 30, 0.4);
  const auto hash = state_hash(pool);
  std::vector<std::size_t> identity(pool.size());
  std::iota(identity.begin(), identity.end(), 0);
  const auto x_before = std::vector<double>(pool.x().begin(), pool.x().end());
  pool.apply_permutation(identity);
  CHECK(std::vector<double>(pool.x().begin(), pool.x().end()) == x_before);

  AgentPool<double> three;
  for (int i = 0; i < 3; ++i) three.append({0, {double(i), 0, 0}, 1, 0.4});
  const std::vector<std::size_t> reversal{2, 1, 0};
  three.apply_permutation(reversal);
  CHECK(three.x()[0] == 2);
  CHECK(three.x()[2] == 0);
  CHECK(three.uid(0) == 2);

  const std::vector<std::size_t> bad{0, 0, 1};
  CHECK_THROWS_AS(three.apply_permutation(bad), std::invalid_argument);
  const std::vector<std::size_t> short_perm{0, 1};
  CHECK_THROWS_AS(three.apply_permutation(short_perm), std::invalid_argument);
  CHECK(state_hash(pool) == hash);
}

TEST_CASE("z-order permutation preserves every record") {
  auto pool = spawn_random<double>(1000, {{0, 0, 0}, {200, 200, 200}}, 10, 0.4, 5);
  const auto before = oracle::by_uid(pool);
  const auto grid = UniformGrid<double>::build(pool, 10);
  reorder_pool(pool, compute_sort_permutation(pool, grid));
  CHECK(oracle::by_uid(pool) == before);
}

TEST_CASE("duplicate uids are rejected") {
  const std::vector<AgentRecord<double>> records{{1, {0, 0, 0}, 1, 0}, {1, {1, 0, 0}, 1, 0}};
  CHECK_THROWS_AS(AgentPool<double>::from_records(records), std::invalid_argument);
}

TEST_CASE_TEMPLATE("snapshot csv round trip is exact", T, float, double) {
  const auto pool = spawn_random<T>(300, {{-5, -5, -5}, {77, 77, 77}}, 3.3f, 0.4f, 9);
  std::stringstream csv;
  write_snapshot_csv(pool, csv);
  CHECK(csv.str().rfind("uid,x,y,z,diameter,adherence\n", 0) == 0);
  const auto back = read_snapshot_csv<T>(csv);
  CHECK(records_sorted(back) == records_sorted(pool));
  CHECK(state_hash(back) == state_hash(pool));
  CHECK(back.next_uid() >= pool.size());
}
