#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "cellmech/agent_pool.hpp"
#include "cellmech/uniform_grid.hpp"

namespace cellmech {

inline constexpr std::uint32_t kMortonAxisLimit = 1u << 21;

namespace detail {

// Spreads the low 21 bits of v so that bit i lands at bit 3i.
constexpr std::uint64_t spread_bits(std::uint64_t v) {
  v &= 0x1FFFFFULL;
  v = (v | (v << 32)) & 0x1F00000000FFFFULL;
  v = (v | (v << 16)) & 0x1F0000FF0000FFULL;
  v = (v | (v << 8)) & 0x100F00F00F00F00FULL;
  v = (v | (v << 4)) & 0x10C30C30C30C30C3ULL;
  v = (v | (v << 2)) & 0x1249249249249249ULL;
  return v;
}

constexpr std::uint32_t compact_bits(std::uint64_t v) {
  v &= 0x1249249249249249ULL;
  v = (v ^ (v >> 2)) & 0x10C30C30C30C30C3ULL;
  v = (v ^ (v >> 4)) & 0x100F00F00F00F00FULL;
  v = (v ^ (v >> 8)) & 0x1F0000FF0000FFULL;
  v = (v ^ (v >> 16)) & 0x1F00000000FFFFULL;
  v = (v ^ (v >> 32)) & 0x1FFFFFULL;
  return static_cast<std::uint32_t>(v);
}

}  // namespace detail

/// Z-order code: bit i of ix goes to bit 3i, of iy to 3i+1, of iz to 3i+2.
/// Throws std::out_of_range for a coordinate >= 2^21.
std::uint64_t morton_encode(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz);

constexpr std::array<std::uint32_t, 3> morton_decode(std::uint64_t code) {
  return {detail::compact_bits(code), detail::compact_bits(code >> 1),
          detail::compact_bits(code >> 2)};
}

struct MortonIndex {
  std::vector<std::uint64_t> z_values;    // per agent, in current pool order
  std::vector<std::size_t> permutation;   // agent indices by (z_value, uid)
};

/// Codes from each agent's box coordinates in `grid`, which must have been
/// built from `pool`.
template <std::floating_point T>
MortonIndex compute_sort_permutation(const AgentPool<T>& pool, const UniformGrid<T>& grid);

template <std::floating_point T>
void reorder_pool(AgentPool<T>& pool, const MortonIndex& index) {
  pool.apply_permutation(index.permutation);
}

struct IndexLocality {
  std::size_t pairs = 0;
  double mean = 0;
  double median = 0;
};

/// |i - j| over all unordered pairs of agents within `radius` of each other,
/// where i, j are the agents' positions in the pool's arrays.
template <std::floating_point T>
IndexLocality neighbor_index_distance(const AgentPool<T>& pool, const UniformGrid<T>& grid,
                                      T radius);

}  // namespace cellmech
