#include <doctest.h>

#include <numeric>
#include <set>
#include <stdexcept>

#include "cellmech/morton.hpp"
#include "cellmech/random.hpp"
#include "oracles.hpp"

using namespace cellmech;

TEST_CASE("encode examples") {
  CHECK(morton_encode(0, 0, 0) == 0);
  CHECK(morton_encode(1, 1, 1) == 7);
  CHECK(morton_encode(3, 5, 7) == 431);
  CHECK(morton_encode(1, 0, 0) == 1);
  CHECK(morton_encode(0, 1, 0) == 2);
  CHECK(morton_encode(0, 0, 1) == 4);
  CHECK_THROWS_AS(morton_encode(kMortonAxisLimit, 0, 0), std::out_of_range);
  CHECK_NOTHROW(morton_encode(kMortonAxisLimit - 1, kMortonAxisLimit - 1, kMortonAxisLimit - 1));
}

TEST_CASE("encode matches the bitwise interleave and round-trips") {
  SplitMix64 rng(3);
  for (int k = 0; k < 100000; ++k) {
    const auto x = static_cast<std::uint32_t>(rng.next() % kMortonAxisLimit);
    const auto y = static_cast<std::uint32_t>(rng.next() % kMortonAxisLimit);
    const auto z = static_cast<std::uint32_t>(rng.next() % kMortonAxisLimit);
    const auto code = morton_encode(x, y, z);
    REQUIRE(code == oracle::interleave(x, y, z));
    const auto back = morton_decode(code);
    REQUIRE(back == std::array<std::uint32_t, 3>{x, y, z});
  }
}

TEST_CASE("encode is injective on a dense block") {
  std::set<std::uint64_t> seen;
  for (std::uint32_t x = 0; x < 32; ++x)
    for (std::uint32_t y = 0; y < 32; ++y)
      for (std::uint32_t z = 0; z < 32; ++z) seen.insert(morton_encode(x, y, z));
  CHECK(seen.size() == 32 * 32 * 32);
  CHECK(*seen.rbegin() == 32 * 32 * 32 - 1);
}

TEST_CASE("sort permutation") {
  SUBCASE("one box sorts by uid") {
    AgentPool<double> pool;
    for (int i = 0; i < 10; ++i) pool.append({0, {0.1 * i, 0, 0}, 2, 0});
    std::vector<std::size_t> perm{3, 9, 0, 1, 7, 2, 8, 4, 6, 5};
    pool.apply_permutation(perm);
    const auto grid = UniformGrid<double>::build(pool, 2.0);
    const auto index = compute_sort_permutation(pool, grid);
    std::vector<std::uint64_t> uids;
    for (auto i : index.permutation) uids.push_back(pool.uid(i));
    std::vector<std::uint64_t> ascending(10);
    std::iota(ascending.begin(), ascending.end(), 0);
    CHECK(uids == ascending);
  }
  SUBCASE("lower box first") {
    AgentPool<double> pool;
    pool.append({0, {1.5, 0.5, 0.5}, 1, 0});
    pool.append({0, {0.5, 0.5, 0.5}, 1, 0});
    const auto grid = UniformGrid<double>::build(pool, 1.0);
    const auto index = compute_sort_permutation(pool, grid);
    CHECK(index.permutation == std::vector<std::size_t>{1, 0});
    CHECK(index.z_values[1] < index.z_values[0]);
  }
  SUBCASE("codes come from box coordinates") {
    const auto pool = spawn_random<double>(500, {{0, 0, 0}, {40, 40, 40}}, 3, 0.4, 2);
    const auto grid = UniformGrid<double>::build(pool, 3.0);
    const auto index = compute_sort_permutation(pool, grid);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const auto c = grid.box_coords(grid.agent_box()[i]);
      REQUIRE(index.z_values[i] == oracle::interleave(c[0], c[1], c[2]));
    }
  }
  SUBCASE("sorting twice is a no-op the second time") {
    auto pool = spawn_random<double>(1000, {{0, 0, 0}, {100, 100, 100}}, 5, 0.4, 4);
    reorder_pool(pool, compute_sort_permutation(pool, UniformGrid<double>::build(pool, 5.0)));
    const auto again = compute_sort_permutation(pool, UniformGrid<double>::build(pool, 5.0));
    std::vector<std::size_t> identity(pool.size());
    std::iota(identity.begin(), identity.end(), 0);
    CHECK(again.permutation == identity);
  }
}

TEST_CASE("index distance statistics") {
  const auto pool = spawn_grid<double>(4, 20, 30, 0.4);
  const auto grid = UniformGrid<double>::build(pool, 30.0);
  const auto before = neighbor_index_distance(pool, grid, 30.0);
  // Face neighbors at 20 plus face diagonals at 28.28; body diagonals (34.6) are out.
  CHECK(before.pairs == 3 * 4 * 4 * 3 + 6 * 4 * 3 * 3);
  CHECK(before.mean > 0);
  CHECK(before.median > 0);
}
