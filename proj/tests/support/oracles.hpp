#pragma once

// Reference implementations the tests compare against. Each one is written
// from the model definition alone and shares no code with the library beyond
// the AgentPool accessors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "cellmech/agent_pool.hpp"

namespace oracle {

// Uid of every agent within `radius` of the query (closed ball), for every
// query, keyed by the query uid. Distances use p_j - q like the library so
// that boundary cases are decided by identical arithmetic.
template <typename T>
std::map<std::uint64_t, std::vector<std::uint64_t>> neighbor_uids(
    const cellmech::AgentPool<T>& pool, T radius) {
  std::map<std::uint64_t, std::vector<std::uint64_t>> out;
  const T r2 = radius * radius;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    auto& list = out[pool.uid(i)];
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (i == j) continue;
      const T dx = pool.x()[j] - pool.x()[i];
      const T dy = pool.y()[j] - pool.y()[i];
      const T dz = pool.z()[j] - pool.z()[i];
      if (dx * dx + dy * dy + dz * dz <= r2) list.push_back(pool.uid(j));
    }
    std::sort(list.begin(), list.end());
  }
  return out;
}

// Collision force on sphere 1, evaluated in long double.
struct Force {
  long double x = 0, y = 0, z = 0;
  long double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline Force collision(long double x1, long double y1, long double z1, long double r1,
                       long double x2, long double y2, long double z2, long double r2,
                       long double kappa, long double gamma) {
  const long double dx = x1 - x2, dy = y1 - y2, dz = z1 - z2;
  const long double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
  const long double delta = r1 + r2 - dist;
  if (delta <= 0 || dist == 0) return {};
  const long double r = r1 * r2 / (r1 + r2);
  const long double m = kappa * delta - gamma * std::sqrt(r * delta);
  return {dx / dist * m, dy / dist * m, dz / dist * m};
}

// Bit-by-bit interleave: bit i of x to 3i, y to 3i+1, z to 3i+2.
inline std::uint64_t interleave(std::uint32_t x, std::uint32_t y, std::uint32_t z) {
  std::uint64_t code = 0;
  for (int bit = 0; bit < 21; ++bit) {
    code |= static_cast<std::uint64_t>((x >> bit) & 1u) << (3 * bit);
    code |= static_cast<std::uint64_t>((y >> bit) & 1u) << (3 * bit + 1);
    code |= static_cast<std::uint64_t>((z >> bit) & 1u) << (3 * bit + 2);
  }
  return code;
}

// Ordered pairs (i, j), i != j, whose spheres overlap by a positive amount,
// decided in the pool's precision the way the force routine decides it.
template <typename T>
std::uint64_t colliding_ordered_pairs(const cellmech::AgentPool<T>& pool) {
  std::uint64_t count = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (i == j) continue;
      const T dx = pool.x()[i] - pool.x()[j];
      const T dy = pool.y()[i] - pool.y()[j];
      const T dz = pool.z()[i] - pool.z()[j];
      const T dist = std::sqrt(dx * dx + dy * dy + dz * dz);
      if (pool.radius(i) + pool.radius(j) - dist > 0) ++count;
    }
  }
  return count;
}

// Mean neighbor count within `radius` over all agents.
template <typename T>
double mean_neighbor_count(const cellmech::AgentPool<T>& pool, T radius) {
  if (pool.empty()) return 0;
  std::uint64_t total = 0;
  for (const auto& [uid, list] : neighbor_uids(pool, radius)) total += list.size();
  return static_cast<double>(total) / static_cast<double>(pool.size());
}

// Sphere volumes summed in long double.
template <typename T>
long double total_volume(const cellmech::AgentPool<T>& pool) {
  const long double pi = 3.141592653589793238462643383279502884L;
  long double v = 0;
  for (T d : pool.diameter()) {
    const long double dl = d;
    v += pi / 6 * dl * dl * dl;
  }
  return v;
}

// Full pool state, keyed by uid.
template <typename T>
std::map<std::uint64_t, cellmech::AgentRecord<T>> by_uid(const cellmech::AgentPool<T>& pool) {
  std::map<std::uint64_t, cellmech::AgentRecord<T>> out;
  for (std::size_t i = 0; i < pool.size(); ++i) out[pool.uid(i)] = pool.record(i);
  return out;
}

}  // namespace oracle
