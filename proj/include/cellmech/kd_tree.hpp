#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "cellmech/agent_pool.hpp"
#include "cellmech/neighbors.hpp"

namespace cellmech {

/// Balanced 3D kd-tree over agent positions, the baseline neighbor index.
/// Internal nodes split at the median of the widest axis of their points;
/// leaves hold up to leaf_size points. Built single-threaded.
template <std::floating_point T>
class KdTree {
 public:
  static constexpr std::size_t kDefaultLeafSize = 10;

  static KdTree build(const AgentPool<T>& pool, std::size_t leaf_size = kDefaultLeafSize);

  std::size_t size() const { return index_.size(); }
  std::size_t node_count() const { return nodes_.size(); }

  /// Same contract as UniformGrid::for_each_neighbor (without a radius limit).
  /// The pool must be the one the tree was built from.
  template <typename Visitor>
  std::size_t radius_query(const AgentPool<T>& pool, std::size_t query, T radius,
                           Visitor&& visitor, NeighborScratch& scratch) const {
    detail::check_query_index(pool, query);
    scratch.count = 0;
    std::size_t candidates = 0;
    if (!nodes_.empty()) {
      const std::array<T, 3> q = {pool.x()[query], pool.y()[query], pool.z()[query]};
      search(0, q, radius * radius, static_cast<std::uint32_t>(query), pool.uids(), scratch,
             candidates);
    }
    detail::sort_hits(scratch);
    detail::visit_hits(scratch, visitor);
    return candidates;
  }

  template <typename Visitor>
  std::size_t radius_query(const AgentPool<T>& pool, std::size_t query, T radius,
                           Visitor&& visitor) const {
    NeighborScratch scratch;
    return radius_query(pool, query, radius, visitor, scratch);
  }

  /// Every point of a left subtree lies at or below the split value on the
  /// node's axis and every point of the right subtree at or above it.
  bool check_invariants() const;

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::int32_t axis = -1;  // -1 marks a leaf
    T split = 0;
  };

  std::uint32_t build_node(std::uint32_t begin, std::uint32_t end, std::size_t leaf_size);

  void search(std::uint32_t node, const std::array<T, 3>& q, T r2, std::uint32_t self,
              std::span<const std::uint64_t> uids, NeighborScratch& scratch,
              std::size_t& candidates) const {
    const Node& n = nodes_[node];
    if (n.axis < 0) {
      scratch.ensure(scratch.count + (n.end - n.begin));
      std::uint64_t* keys = scratch.keys.data();
      std::size_t count = scratch.count;
      for (std::uint32_t s = n.begin; s < n.end; ++s) {
        const T ddx = coords_[0][s] - q[0], ddy = coords_[1][s] - q[1], ddz = coords_[2][s] - q[2];
        const std::uint32_t j = index_[s];
        keys[count] = detail::hit_key(uids[j], j);
        count += static_cast<std::size_t>(ddx * ddx + ddy * ddy + ddz * ddz <= r2) &
                 static_cast<std::size_t>(j != self);
      }
      candidates += n.end - n.begin;
      scratch.count = count;
      return;
    }
    const T diff = q[n.axis] - n.split;
    const std::uint32_t near = diff <= 0 ? n.left : n.right;
    const std::uint32_t far = diff <= 0 ? n.right : n.left;
    search(near, q, r2, self, uids, scratch, candidates);
    if (diff * diff <= r2) search(far, q, r2, self, uids, scratch, candidates);
  }

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> index_;        // tree slot -> agent index
  std::array<std::vector<T>, 3> coords_;    // positions in tree-slot order
};

template <std::floating_point T>
KdTree<T> build_kdtree(const AgentPool<T>& pool,
                       std::size_t leaf_size = KdTree<T>::kDefaultLeafSize) {
  return KdTree<T>::build(pool, leaf_size);
}

template <std::floating_point T, typename Visitor>
std::size_t kdtree_radius_query(const KdTree<T>& tree, const AgentPool<T>& pool,
                                std::size_t query, T radius, Visitor&& visitor) {
  return tree.radius_query(pool, query, radius, visitor);
}

}  // namespace cellmech
