#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cellmech/agent_pool.hpp"

namespace cellmech {

/// Reusable per-thread buffer that backends use to put matches in ascending
/// uid order before handing them to a visitor. The first `count` keys are
/// the matches, each packed as (uid << 32) | index.
struct NeighborScratch {
  std::vector<std::uint64_t> keys;
  std::size_t count = 0;

  /// Grows the buffer so that `n` keys fit; existing keys are kept.
  void ensure(std::size_t n) {
    if (keys.size() < n) keys.resize(std::max(n, 2 * keys.size()));
  }
};

namespace detail {

constexpr std::uint64_t hit_key(std::uint64_t uid, std::uint32_t index) {
  return (uid << 32) | index;
}

inline void sort_hits(NeighborScratch& scratch) {
  std::uint64_t* k = scratch.keys.data();
  const std::size_t n = scratch.count;
  if (n > 32) {
    std::sort(k, k + n);
    return;
  }
  for (std::size_t i = 1; i < n; ++i) {
    const std::uint64_t v = k[i];
    std::size_t j = i;
    for (; j > 0 && k[j - 1] > v; --j) k[j] = k[j - 1];
    k[j] = v;
  }
}

template <typename Visitor>
void visit_hits(const NeighborScratch& scratch, Visitor&& visitor) {
  for (std::size_t i = 0; i < scratch.count; ++i) {
    visitor(static_cast<std::size_t>(scratch.keys[i] & 0xFFFFFFFFu));
  }
}

template <std::floating_point T>
void check_query_index(const AgentPool<T>& pool, std::size_t q) {
  if (q >= pool.size()) {
    throw std::out_of_range("query index " + std::to_string(q) + " out of range for pool of " +
                            std::to_string(pool.size()));
  }
}

}  // namespace detail

/// O(n) scan; the reference every other backend is checked against.
/// Returns indices j != query with |p_j - p_query| <= radius in ascending uid.
template <std::floating_point T>
std::vector<std::size_t> brute_force_neighbors(const AgentPool<T>& pool, std::size_t query,
                                               T radius) {
  detail::check_query_index(pool, query);
  const Vec3<T> q = pool.position(query);
  std::vector<std::pair<std::uint64_t, std::size_t>> hits;
  for (std::size_t j = 0; j < pool.size(); ++j) {
    if (j != query && within_radius(pool.position(j), q, radius)) hits.emplace_back(pool.uid(j), j);
  }
  std::sort(hits.begin(), hits.end());
  std::vector<std::size_t> out;
  out.reserve(hits.size());
  for (const auto& h : hits) out.push_back(h.second);
  return out;
}

}  // namespace cellmech
