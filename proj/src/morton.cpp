#include "cellmech/morton.hpp"

#include <algorithm>
#include <numeric>
#include <utility>
#include <vector>
#include <stdexcept>
#include <string>

namespace cellmech {

std::uint64_t morton_encode(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz) {
  if (ix >= kMortonAxisLimit || iy >= kMortonAxisLimit || iz >= kMortonAxisLimit) {
    throw std::out_of_range("morton coordinate (" + std::to_string(ix) + "," +
                            std::to_string(iy) + "," + std::to_string(iz) +
                            ") exceeds 21 bits");
  }
  return detail::spread_bits(ix) | (detail::spread_bits(iy) << 1) |
         (detail::spread_bits(iz) << 2);
}

template <std::floating_point T>
MortonIndex compute_sort_permutation(const AgentPool<T>& pool, const UniformGrid<T>& grid) {
  if (grid.agent_total() != pool.size()) {
    throw std::invalid_argument("grid was not built from this pool");
  }
  const std::size_t n = pool.size();
  MortonIndex index;
  index.z_values.resize(n);
  const auto boxes = grid.agent_box();
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = grid.box_coords(boxes[i]);
    index.z_values[i] = morton_encode(c[0], c[1], c[2]);
  }
  // Uids are unique and below 2^32, so (code, uid << 32 | index) orders
  // exactly like (code, uid) and sorts without indirection.
  const auto uids = pool.uids();
  std::vector<std::pair<std::uint64_t, std::uint64_t>> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    keys[i] = {index.z_values[i], detail::hit_key(uids[i], static_cast<std::uint32_t>(i))};
  }
  std::sort(keys.begin(), keys.end());
  index.permutation.resize(n);
  for (std::size_t i = 0; i < n; ++i) index.permutation[i] = keys[i].second & 0xFFFFFFFFu;
  return index;
}

template <std::floating_point T>
IndexLocality neighbor_index_distance(const AgentPool<T>& pool, const UniformGrid<T>& grid,
                                      T radius) {
  std::vector<std::size_t> distances;
  NeighborScratch scratch;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    grid.for_each_neighbor(pool, i, radius, [&](std::size_t j) {
      if (j > i) distances.push_back(j - i);
    }, scratch);
  }
  IndexLocality out;
  out.pairs = distances.size();
  if (distances.empty()) return out;
  double sum = 0;
  for (std::size_t d : distances) sum += static_cast<double>(d);
  out.mean = sum / static_cast<double>(distances.size());
  const auto mid = distances.begin() + static_cast<std::ptrdiff_t>(distances.size() / 2);
  std::nth_element(distances.begin(), mid, distances.end());
  out.median = static_cast<double>(*mid);
  return out;
}

template MortonIndex compute_sort_permutation<float>(const AgentPool<float>&,
                                                     const UniformGrid<float>&);
template MortonIndex compute_sort_permutation<double>(const AgentPool<double>&,
                                                      const UniformGrid<double>&);
template IndexLocality neighbor_index_distance<float>(const AgentPool<float>&,
                                                      const UniformGrid<float>&, float);
template IndexLocality neighbor_index_distance<double>(const AgentPool<double>&,
                                                       const UniformGrid<double>&, double);

}  // namespace cellmech
