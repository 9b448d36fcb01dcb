#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cellmech/agent_pool.hpp"
#include "cellmech/errors.hpp"
#include "cellmech/neighbors.hpp"

namespace cellmech {

inline constexpr std::size_t kDefaultBoxCap = std::size_t{1} << 27;

enum class GridBuild { kSerial, kParallel };

struct GridOptions {
  std::size_t max_boxes = kDefaultBoxCap;
  GridBuild build = GridBuild::kSerial;
  int threads = 1;
};

struct GridStats {
  std::array<std::uint32_t, 3> dims{};
  std::size_t boxes = 0;
  std::size_t nonempty_boxes = 0;
  std::size_t max_occupancy = 0;
  /// occupancy_histogram[k] = number of boxes holding exactly k agents.
  std::vector<std::size_t> occupancy_histogram;
};

/// Regular voxel decomposition with per-box counters, a per-box head (the
/// last agent linked in) and a successors array chaining agents of a box.
///
/// Box coordinate along an axis is floor((p - origin) / box_length); a point
/// on a face belongs to the higher box. The grid covers the pool's bounding
/// box plus one box of halo on every side, so the 27-box stencil of any agent
/// stays inside the grid.
template <std::floating_point T>
class UniformGrid {
 public:
  static constexpr std::uint32_t kSentinel = 0xFFFFFFFFu;

  /// box_length = max(interaction_radius, largest diameter). Throws
  /// std::invalid_argument for an empty pool or nonpositive radius, and
  /// CapacityError when the box count would exceed options.max_boxes.
  static UniformGrid build(const AgentPool<T>& pool, T interaction_radius,
                           const GridOptions& options = {});

  T box_length() const { return box_length_; }
  const std::array<std::uint32_t, 3>& dims() const { return dims_; }
  const Vec3<T>& origin() const { return origin_; }
  std::size_t box_total() const { return box_count_.size(); }
  std::size_t agent_total() const { return successors_.size(); }

  std::span<const std::uint32_t> box_count() const { return box_count_; }
  std::span<const std::uint32_t> box_head() const { return box_head_; }
  std::span<const std::uint32_t> successors() const { return successors_; }
  /// Box index of every agent, as assigned during the build.
  std::span<const std::uint32_t> agent_box() const { return agent_box_; }

  std::size_t box_index(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz) const {
    return (static_cast<std::size_t>(iz) * dims_[1] + iy) * dims_[0] + ix;
  }
  std::array<std::uint32_t, 3> box_coords(std::size_t box) const {
    const std::size_t plane = static_cast<std::size_t>(dims_[0]) * dims_[1];
    return {static_cast<std::uint32_t>(box % dims_[0]),
            static_cast<std::uint32_t>((box % plane) / dims_[0]),
            static_cast<std::uint32_t>(box / plane)};
  }
  /// Box coordinates of an arbitrary point, clamped into the grid.
  std::array<std::uint32_t, 3> coords_of(const Vec3<T>& p) const {
    return {axis_coord(p.x, origin_.x, dims_[0]), axis_coord(p.y, origin_.y, dims_[1]),
            axis_coord(p.z, origin_.z, dims_[2])};
  }

  std::size_t max_occupancy() const { return max_occupancy_; }
  GridStats stats() const;

  template <typename F>
  void for_each_in_box(std::size_t box, F&& f) const {
    for (std::uint32_t a = box_head_[box]; a != kSentinel; a = successors_[a]) f(a);
  }

  /// Calls f(box) for each box of the 3x3x3 stencil around `box`, clamped at
  /// the grid edge, in ascending box index.
  template <typename F>
  void for_each_stencil_box(std::size_t box, F&& f) const {
    const auto c = box_coords(box);
    const std::uint32_t x0 = c[0] > 0 ? c[0] - 1 : 0;
    const std::uint32_t x1 = std::min(c[0] + 1, dims_[0] - 1);
    const std::uint32_t y0 = c[1] > 0 ? c[1] - 1 : 0;
    const std::uint32_t y1 = std::min(c[1] + 1, dims_[1] - 1);
    const std::uint32_t z0 = c[2] > 0 ? c[2] - 1 : 0;
    const std::uint32_t z1 = std::min(c[2] + 1, dims_[2] - 1);
    for (std::uint32_t iz = z0; iz <= z1; ++iz) {
      for (std::uint32_t iy = y0; iy <= y1; ++iy) {
        const std::size_t row = box_index(0, iy, iz);
        for (std::uint32_t ix = x0; ix <= x1; ++ix) f(row + ix);
      }
    }
  }

  /// Visits every agent j != query within `radius` of the query exactly once,
  /// in ascending uid. Returns the number of candidates examined.
  /// Throws StencilError if radius > box_length.
  template <typename Visitor>
  std::size_t for_each_neighbor(const AgentPool<T>& pool, std::size_t query, T radius,
                                Visitor&& visitor, NeighborScratch& scratch) const {
    detail::check_query_index(pool, query);
    check_radius(radius);
    const std::size_t candidates = gather(pool, query, radius, scratch);
    detail::sort_hits(scratch);
    detail::visit_hits(scratch, visitor);
    return candidates;
  }

  template <typename Visitor>
  std::size_t for_each_neighbor(const AgentPool<T>& pool, std::size_t query, T radius,
                                Visitor&& visitor) const {
    NeighborScratch scratch;
    return for_each_neighbor(pool, query, radius, visitor, scratch);
  }

  void check_radius(T radius) const {
    if (radius > box_length_) {
      throw StencilError("query radius " + std::to_string(radius) + " exceeds box length " +
                         std::to_string(box_length_));
    }
  }

 private:
  std::uint32_t axis_coord(T p, T o, std::uint32_t dim) const {
    const T q = std::floor((p - o) / box_length_);
    if (!(q > 0)) return 0;
    if (q >= static_cast<T>(dim - 1)) return dim - 1;
    return static_cast<std::uint32_t>(q);
  }

  /// Fills scratch with the keys of matches, unsorted. Every candidate key
  /// is written and the fill count advances only on a match.
  std::size_t gather(const AgentPool<T>& pool, std::size_t query, T radius,
                     NeighborScratch& scratch) const {
    scratch.ensure(27 * max_occupancy_);
    const auto xs = pool.x();
    const auto ys = pool.y();
    const auto zs = pool.z();
    const auto uids = pool.uids();
    const T qx = xs[query], qy = ys[query], qz = zs[query];
    const T r2 = radius * radius;
    std::uint64_t* keys = scratch.keys.data();
    std::size_t n = 0;
    std::size_t candidates = 0;
    for_each_stencil_box(agent_box_[query], [&](std::size_t box) {
      for (std::uint32_t j = box_head_[box]; j != kSentinel; j = successors_[j]) {
        ++candidates;
        const T ddx = xs[j] - qx, ddy = ys[j] - qy, ddz = zs[j] - qz;
        keys[n] = detail::hit_key(uids[j], j);
        n += static_cast<std::size_t>(ddx * ddx + ddy * ddy + ddz * ddz <= r2) &
             static_cast<std::size_t>(j != query);
      }
    });
    scratch.count = n;
    return candidates;
  }

  T box_length_ = 0;
  std::array<std::uint32_t, 3> dims_{};
  Vec3<T> origin_{};
  std::vector<std::uint32_t> box_count_;
  std::vector<std::uint32_t> box_head_;
  std::vector<std::uint32_t> successors_;
  std::vector<std::uint32_t> agent_box_;
  std::size_t max_occupancy_ = 0;
};

}  // namespace cellmech
