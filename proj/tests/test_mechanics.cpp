#include <doctest.h>

#include <cmath>

#include "cellmech/errors.hpp"
#include "cellmech/mechanics.hpp"
#include "cellmech/random.hpp"
#include "cellmech/uniform_grid.hpp"
#include "oracles.hpp"

using namespace cellmech;

namespace {

template <typename T>
Vec3<T> force(Vec3<T> p1, T r1, Vec3<T> p2, T r2) {
  return collision_force(p1, r1, p2, r2, ForceParams{});
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE_TEMPLATE("hand-evaluated collision", T, float, double) {
  const auto f = force<T>({0, 0, 0}, 5, {8, 0, 0}, 5);
  const double expected = 4.0 - std::sqrt(5.0);
  const double tol = sizeof(T) == 8 ? 1e-12 : 1e-5;
  CHECK(rel(-f.x, expected) <= tol);
  CHECK(f.y == 0);
  CHECK(f.z == 0);
}

TEST_CASE_TEMPLATE("gated pairs give zero force", T, float, double) {
  CHECK(force<T>({0, 0, 0}, 5, {10, 0, 0}, 5) == Vec3<T>{});
  CHECK(force<T>({0, 0, 0}, 5, {0, 11, 0}, 5) == Vec3<T>{});
  CHECK(force<T>({0, 0, 0}, 1, {100, 100, 100}, 2) == Vec3<T>{});
}

TEST_CASE("collision preconditions") {
  CHECK_THROWS_AS(force<double>({0, 0, 0}, 0, {1, 0, 0}, 1), std::invalid_argument);
  CHECK_THROWS_AS(force<double>({0, 0, 0}, 1, {1, 0, 0}, -1), std::invalid_argument);
  CHECK_THROWS_AS(force<double>({1, 2, 3}, 1, {1, 2, 3}, 1), DegenerateContactError);
}

TEST_CASE("force parameter validation") {
  ForceParams p;
  CHECK_NOTHROW(p.validate());
  p.max_displacement = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.kappa = -1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.timestep = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE_TEMPLATE("random pairs: oracle, antisymmetry, rotation", T, float, double) {
  SplitMix64 rng(21);
  auto u = [&] { return rng.uniform(); };
  const double tol = sizeof(T) == 8 ? 1e-10 : 2e-3;
  for (int k = 0; k < 10000; ++k) {
    const Vec3<T> p1{T(u() * 20), T(u() * 20), T(u() * 20)};
    const Vec3<T> p2{T(p1.x + u() * 12 - 6), T(p1.y + u() * 12 - 6), T(p1.z + u() * 12 - 6)};
    const T r1 = T(1 + u() * 5), r2 = T(1 + u() * 5);
    const auto f12 = force(p1, r1, p2, r2);
    const auto f21 = force(p2, r2, p1, r1);
    REQUIRE(f12 == -f21);
    REQUIRE(is_finite(f12));
    const auto o = oracle::collision(p1.x, p1.y, p1.z, r1, p2.x, p2.y, p2.z, r2, 2, 1);
    const double scale = std::max(1.0, static_cast<double>(o.norm()));
    REQUIRE(std::abs(f12.x - static_cast<double>(o.x)) <= tol * scale);
    REQUIRE(std::abs(f12.y - static_cast<double>(o.y)) <= tol * scale);
    REQUIRE(std::abs(f12.z - static_cast<double>(o.z)) <= tol * scale);
  }
}

TEST_CASE("rotation equivariance") {
  SplitMix64 rng(5);
  for (int k = 0; k < 2000; ++k) {
    const auto axis = unit_vector(rng.next());
    const double angle = rng.uniform() * 6.283185307179586;
    const double c = std::cos(angle), s = std::sin(angle), t = 1 - c;
    const double R[3][3] = {
        {t * axis.x * axis.x + c, t * axis.x * axis.y - s * axis.z, t * axis.x * axis.z + s * axis.y},
        {t * axis.x * axis.y + s * axis.z, t * axis.y * axis.y + c, t * axis.y * axis.z - s * axis.x},
        {t * axis.x * axis.z - s * axis.y, t * axis.y * axis.z + s * axis.x, t * axis.z * axis.z + c}};
    auto rot = [&](Vec3<double> v) {
      return Vec3<double>{R[0][0] * v.x + R[0][1] * v.y + R[0][2] * v.z,
                          R[1][0] * v.x + R[1][1] * v.y + R[1][2] * v.z,
                          R[2][0] * v.x + R[2][1] * v.y + R[2][2] * v.z};
    };
    const Vec3<double> p1{rng.uniform() * 4, rng.uniform() * 4, rng.uniform() * 4};
    const Vec3<double> p2{rng.uniform() * 4, rng.uniform() * 4, rng.uniform() * 4};
    const auto f = force(p1, 3.0, p2, 2.5);
    const auto g = force(rot(p1), 3.0, rot(p2), 2.5);
    const auto rf = rot(f);
    const double m = std::max(norm(f), 1e-300);
    REQUIRE(norm(sub(g, rf)) <= 1e-12 * m + 1e-300);
  }
}

TEST_CASE("force vanishes continuously at contact") {
  double previous = 1e9;
  for (double gap = 1e-1; gap > 1e-12; gap /= 10) {
    const double m = norm(force<double>({0, 0, 0}, 5, {10 - gap, 0, 0}, 5));
    CHECK(m < previous);
    previous = m;
  }
  CHECK(previous < 1e-5);
}

TEST_CASE_TEMPLATE("displacement resolution", T, float, double) {
  const ForceParams p;
  CHECK(resolve_displacement<T>({0, 0, 0}, T(0.4), p) == Vec3<T>{});
  CHECK(resolve_displacement<T>({T(0.3), 0, 0}, T(0.4), p) == Vec3<T>{});
  CHECK(resolve_displacement<T>({T(0.4), 0, 0}, T(0.4), p) == Vec3<T>{});
  const auto capped = resolve_displacement<T>({1000, 0, 0}, T(0.4), p);
  CHECK(capped.x == doctest::Approx(3.0));
  CHECK(capped.y == 0);
  const auto free = resolve_displacement<T>({10, 0, 0}, T(0.4), p);
  CHECK(free.x == doctest::Approx(0.1));

  SplitMix64 rng(9);
  for (int k = 0; k < 20000; ++k) {
    const Vec3<T> f{T(rng.uniform() * 2e4 - 1e4), T(rng.uniform() * 2e4 - 1e4),
                    T(rng.uniform() * 2e4 - 1e4)};
    REQUIRE(norm(resolve_displacement(f, T(0.4), p)) <= T(p.max_displacement));
  }
}

TEST_CASE("degenerate contacts") {
  const auto d = degenerate_direction<double>(3, 8);
  CHECK(d == -degenerate_direction<double>(8, 3));
  CHECK(norm(d) == doctest::Approx(1.0));

  AgentPool<double> pool;
  pool.append({0, {1, 1, 1}, 4, 0.4});
  pool.append({0, {1, 1, 1}, 4, 0.4});
  const auto grid = UniformGrid<double>::build(pool, 4.0);
  CHECK_THROWS_AS(accumulate_forces(pool, grid, 0, ForceParams{}), DegenerateContactError);
  ForceCounters c;
  const auto f0 = accumulate_forces(pool, grid, 0, ForceParams{}, DegeneratePolicy::kDeterministic, &c);
  const auto f1 = accumulate_forces(pool, grid, 1, ForceParams{}, DegeneratePolicy::kDeterministic, &c);
  CHECK(f0 == -f1);
  CHECK(norm(f0) == doctest::Approx(contact_magnitude(4.0, 2.0, 2.0, 2.0, 1.0)));
  CHECK(c.degenerate == 2);
  CHECK(c.force_evaluations == 2);
}

TEST_CASE("accumulated forces") {
  SUBCASE("isolated agent") {
    AgentPool<double> pool;
    pool.append({0, {0, 0, 0}, 10, 0.4});
    const auto grid = UniformGrid<double>::build(pool, 10.0);
    CHECK(accumulate_forces(pool, grid, 0, ForceParams{}) == Vec3<double>{});
  }
  SUBCASE("symmetric pair") {
    AgentPool<double> pool;
    pool.append({0, {0, 0, 0}, 10, 0.4});
    pool.append({0, {7, 2, 1}, 10, 0.4});
    const auto grid = UniformGrid<double>::build(pool, 10.0);
    CHECK(accumulate_forces(pool, grid, 0, ForceParams{}) ==
          -accumulate_forces(pool, grid, 1, ForceParams{}));
  }
  SUBCASE("total force on a pool sums to zero") {
    const auto pool = spawn_random<double>(2000, {{0, 0, 0}, {60, 60, 60}}, 6, 0.4, 31);
    const auto grid = UniformGrid<double>::build(pool, 6.0);
    Vec3<double> total{};
    for (std::size_t i = 0; i < pool.size(); ++i) {
      total = add(total, accumulate_forces(pool, grid, i, ForceParams{}));
    }
    CHECK(norm(total) <= pool.size() * 1e-10);
  }
  SUBCASE("evaluation counter equals overlapping ordered pairs") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto pool = spawn_random<double>(400, {{0, 0, 0}, {40, 40, 40}}, 5, 0.4, seed);
      const auto grid = UniformGrid<double>::build(pool, 5.0);
      ForceCounters c;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        accumulate_forces(pool, grid, i, ForceParams{}, DegeneratePolicy::kRaise, &c);
      }
      CHECK(c.force_evaluations == oracle::colliding_ordered_pairs(pool));
      CHECK(c.candidates >= c.force_evaluations);
    }
  }
}
