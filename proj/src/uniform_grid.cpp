#include "cellmech/uniform_grid.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>

namespace cellmech {

template <std::floating_point T>
UniformGrid<T> UniformGrid<T>::build(const AgentPool<T>& pool, T interaction_radius,
                                     const GridOptions& options) {
  if (pool.empty()) throw std::invalid_argument("cannot build a grid over an empty pool");
  if (!(interaction_radius > 0)) throw std::invalid_argument("interaction radius must be positive");

  UniformGrid grid;
  const auto diameters = pool.diameter();
  grid.box_length_ =
      std::max(interaction_radius, *std::max_element(diameters.begin(), diameters.end()));
  const T len = grid.box_length_;

  const Aabb<T> bounds = bounds_of(pool);
  grid.origin_ = {bounds.min.x - len, bounds.min.y - len, bounds.min.z - len};

  // Last occupied box index plus one halo box.
  double product = 1.0;
  const T maxs[3] = {bounds.max.x, bounds.max.y, bounds.max.z};
  const T mins[3] = {grid.origin_.x, grid.origin_.y, grid.origin_.z};
  for (int a = 0; a < 3; ++a) {
    const double last = std::floor(static_cast<double>((maxs[a] - mins[a]) / len));
    const double dim = last + 2.0;
    if (!std::isfinite(dim) || dim > static_cast<double>(0xFFFFFFF0u)) {
      throw CapacityError("grid dimension overflow on axis " + std::to_string(a));
    }
    grid.dims_[a] = static_cast<std::uint32_t>(dim);
    product *= dim;
  }
  const std::size_t cap = std::min<std::size_t>(options.max_boxes, 0xFFFFFFFEu);
  if (product > static_cast<double>(cap)) {
    throw CapacityError("grid of " + std::to_string(grid.dims_[0]) + "x" +
                        std::to_string(grid.dims_[1]) + "x" + std::to_string(grid.dims_[2]) +
                        " boxes exceeds box cap " + std::to_string(cap));
  }
  if (pool.size() >= kSentinel) throw CapacityError("too many agents for 32-bit grid links");

  const std::size_t n = pool.size();
  const std::size_t boxes = static_cast<std::size_t>(product);
  grid.box_count_.assign(boxes, 0);
  grid.box_head_.assign(boxes, kSentinel);
  grid.successors_.assign(n, kSentinel);
  grid.agent_box_.resize(n);

  if (options.build == GridBuild::kSerial) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = grid.coords_of(pool.position(i));
      const std::size_t b = grid.box_index(c[0], c[1], c[2]);
      grid.agent_box_[i] = static_cast<std::uint32_t>(b);
      grid.successors_[i] = grid.box_head_[b];
      grid.box_head_[b] = static_cast<std::uint32_t>(i);
      ++grid.box_count_[b];
    }
  } else {
    const auto agents = static_cast<std::int64_t>(n);
#pragma omp parallel for num_threads(std::max(1, options.threads)) schedule(static)
    for (std::int64_t s = 0; s < agents; ++s) {
      const auto i = static_cast<std::size_t>(s);
      const auto c = grid.coords_of(pool.position(i));
      const std::size_t b = grid.box_index(c[0], c[1], c[2]);
      grid.agent_box_[i] = static_cast<std::uint32_t>(b);
      std::atomic_ref<std::uint32_t> head(grid.box_head_[b]);
      std::uint32_t old = head.load(std::memory_order_relaxed);
      do {
        grid.successors_[i] = old;
      } while (!head.compare_exchange_weak(old, static_cast<std::uint32_t>(i),
                                           std::memory_order_acq_rel,
                                           std::memory_order_relaxed));
      std::atomic_ref<std::uint32_t>(grid.box_count_[b]).fetch_add(1, std::memory_order_relaxed);
    }
  }

  grid.max_occupancy_ = *std::max_element(grid.box_count_.begin(), grid.box_count_.end());
  return grid;
}

template <std::floating_point T>
GridStats UniformGrid<T>::stats() const {
  GridStats s;
  s.dims = dims_;
  s.boxes = box_count_.size();
  s.max_occupancy = max_occupancy_;
  s.occupancy_histogram.assign(max_occupancy_ + 1, 0);
  for (std::uint32_t c : box_count_) {
    ++s.occupancy_histogram[c];
    if (c > 0) ++s.nonempty_boxes;
  }
  return s;
}

template class UniformGrid<float>;
template class UniformGrid<double>;

}  // namespace cellmech
