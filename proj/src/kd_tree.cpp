#include "cellmech/kd_tree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cellmech/errors.hpp"

namespace cellmech {

template <std::floating_point T>
KdTree<T> KdTree<T>::build(const AgentPool<T>& pool, std::size_t leaf_size) {
  if (leaf_size < 1) throw std::invalid_argument("kd-tree leaf size must be >= 1");
  if (pool.size() >= std::numeric_limits<std::uint32_t>::max()) {
    throw CapacityError("too many agents for kd-tree indices");
  }
  KdTree tree;
  const auto n = static_cast<std::uint32_t>(pool.size());
  tree.index_.resize(n);
  std::iota(tree.index_.begin(), tree.index_.end(), 0u);
  for (int a = 0; a < 3; ++a) {
    const auto src = a == 0 ? pool.x() : (a == 1 ? pool.y() : pool.z());
    tree.coords_[a].assign(src.begin(), src.end());
  }
  if (n == 0) return tree;
  tree.nodes_.reserve(2 * (n / leaf_size + 1));
  tree.build_node(0, n, leaf_size);

  // Store points in tree-slot order for the leaf scans.
  std::array<std::vector<T>, 3> ordered;
  for (int a = 0; a < 3; ++a) {
    ordered[a].resize(n);
    for (std::uint32_t s = 0; s < n; ++s) ordered[a][s] = tree.coords_[a][tree.index_[s]];
  }
  tree.coords_ = std::move(ordered);
  return tree;
}

// coords_ is still indexed by agent during construction.
template <std::floating_point T>
std::uint32_t KdTree<T>::build_node(std::uint32_t begin, std::uint32_t end,
                                    std::size_t leaf_size) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({begin, end, 0, 0, -1, T(0)});
  if (end - begin <= leaf_size) return id;

  T lo[3], hi[3];
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::numeric_limits<T>::infinity();
    hi[a] = -std::numeric_limits<T>::infinity();
  }
  for (std::uint32_t s = begin; s < end; ++s) {
    const std::uint32_t i = index_[s];
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], coords_[a][i]);
      hi[a] = std::max(hi[a], coords_[a][i]);
    }
  }
  int axis = 0;
  for (int a = 1; a < 3; ++a) {
    if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
  }
  const std::uint32_t mid = begin + (end - begin) / 2;
  const auto& key = coords_[axis];
  std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                   [&key](std::uint32_t a, std::uint32_t b) { return key[a] < key[b]; });
  const T split = key[index_[mid]];

  const std::uint32_t left = build_node(begin, mid, leaf_size);
  const std::uint32_t right = build_node(mid, end, leaf_size);
  Node& node = nodes_[id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

template <std::floating_point T>
bool KdTree<T>::check_invariants() const {
  for (const Node& n : nodes_) {
    if (n.axis < 0) continue;
    const auto& key = coords_[n.axis];
    const Node& l = nodes_[n.left];
    const Node& r = nodes_[n.right];
    if (l.begin != n.begin || l.end != r.begin || r.end != n.end) return false;
    for (std::uint32_t s = l.begin; s < l.end; ++s) {
      if (key[s] > n.split) return false;
    }
    for (std::uint32_t s = r.begin; s < r.end; ++s) {
      if (key[s] < n.split) return false;
    }
  }
  return true;
}

template class KdTree<float>;
template class KdTree<double>;

}  // namespace cellmech
