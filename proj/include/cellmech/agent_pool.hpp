#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "cellmech/geometry.hpp"

namespace cellmech {

enum class Precision { kFp32, kFp64 };

std::string_view to_string(Precision p);
/// Accepts "fp32"/"float" and "fp64"/"double"; throws std::invalid_argument.
Precision parse_precision(std::string_view text);

template <std::floating_point T>
constexpr Precision precision_of() {
  return sizeof(T) == 4 ? Precision::kFp32 : Precision::kFp64;
}

constexpr std::size_t scalar_bytes(Precision p) {
  return p == Precision::kFp32 ? 4 : 8;
}

inline constexpr std::size_t kDefaultAgentCap = std::size_t{1} << 26;

/// Uids are below 2^32 so a (uid, index) pair packs into one 64-bit key.
inline constexpr std::uint64_t kUidLimit = std::uint64_t{1} << 32;

template <std::floating_point T>
struct AgentRecord {
  std::uint64_t uid = 0;
  Vec3<T> position{};
  T diameter = 1;
  T adherence = 0;

  friend bool operator==(const AgentRecord&, const AgentRecord&) = default;
};

/// Structs-of-arrays agent state. Every attribute lives in its own contiguous
/// array; all arrays always have the same length. Indices are not stable
/// across append/remove/apply_permutation, uids are.
template <std::floating_point T>
class AgentPool {
 public:
  using Scalar = T;

  AgentPool() = default;

  /// Builds a pool from records carrying their own uids. Throws
  /// std::invalid_argument on duplicate uids, uids >= kUidLimit or invalid
  /// attributes.
  static AgentPool from_records(std::span<const AgentRecord<T>> records);

  std::size_t size() const { return uid_.size(); }
  bool empty() const { return uid_.empty(); }

  AgentRecord<T> record(std::size_t i) const;
  Vec3<T> position(std::size_t i) const { return {x_[i], y_[i], z_[i]}; }
  T radius(std::size_t i) const { return diameter_[i] * T(0.5); }
  std::uint64_t uid(std::size_t i) const { return uid_[i]; }

  std::span<const T> x() const { return x_; }
  std::span<const T> y() const { return y_; }
  std::span<const T> z() const { return z_; }
  std::span<const T> diameter() const { return diameter_; }
  std::span<const T> adherence() const { return adherence_; }
  std::span<const std::uint64_t> uids() const { return uid_; }

  // Displacement write buffer. During a force phase each writer owns exactly
  // one slot.
  std::span<T> displacement_x() { return dx_; }
  std::span<T> displacement_y() { return dy_; }
  std::span<T> displacement_z() { return dz_; }
  std::span<const T> displacement_x() const { return dx_; }
  std::span<const T> displacement_y() const { return dy_; }
  std::span<const T> displacement_z() const { return dz_; }
  Vec3<T> displacement(std::size_t i) const { return {dx_[i], dy_[i], dz_[i]}; }
  void set_displacement(std::size_t i, const Vec3<T>& d) {
    dx_[i] = d.x;
    dy_[i] = d.y;
    dz_[i] = d.z;
  }
  void clear_displacements();

  void set_position(std::size_t i, const Vec3<T>& p) {
    x_[i] = p.x;
    y_[i] = p.y;
    z_[i] = p.z;
  }
  void set_diameter(std::size_t i, T d) { diameter_[i] = d; }

  /// Appends an agent with a fresh uid (the record's uid is ignored) and
  /// returns its index. Throws CapacityError once kUidLimit uids are used.
  std::size_t append(const AgentRecord<T>& record);

  /// Swap-with-last removal. Throws std::out_of_range.
  void remove(std::size_t index);

  /// Reorders every attribute so that new slot i holds old slot perm[i].
  /// Throws std::invalid_argument if perm is not a bijection on [0, size).
  void apply_permutation(std::span<const std::size_t> perm);

  void reserve(std::size_t n);

  std::uint64_t next_uid() const { return next_uid_; }

  /// Throws std::logic_error describing the first violated invariant.
  void check_invariants() const;

 private:
  void push(const AgentRecord<T>& r);

  std::vector<T> x_, y_, z_;
  std::vector<T> diameter_;
  std::vector<T> adherence_;
  std::vector<T> dx_, dy_, dz_;
  std::vector<std::uint64_t> uid_;
  std::uint64_t next_uid_ = 0;
};

/// side_count^3 agents at (i, j, k) * spacing, x slowest, z fastest.
template <std::floating_point T>
AgentPool<T> spawn_grid(std::size_t side_count, T spacing, T diameter, T adherence,
                        std::size_t agent_cap = kDefaultAgentCap);

/// n agents uniform in bounds; the stream depends only on seed.
template <std::floating_point T>
AgentPool<T> spawn_random(std::size_t n, const Aabb<T>& bounds, T diameter, T adherence,
                          std::uint64_t seed, std::size_t agent_cap = kDefaultAgentCap);

template <std::floating_point T>
Aabb<T> bounds_of(const AgentPool<T>& pool);

/// Agent records sorted by uid.
template <std::floating_point T>
std::vector<AgentRecord<T>> sorted_records(const AgentPool<T>& pool);

/// FNV-1a over the uid-sorted records (uid, x, y, z, diameter, adherence).
template <std::floating_point T>
std::uint64_t state_hash(const AgentPool<T>& pool);

/// Header `uid,x,y,z,diameter,adherence`, rows in ascending uid, shortest
/// round-trip decimal formatting.
template <std::floating_point T>
void write_snapshot_csv(const AgentPool<T>& pool, std::ostream& out);

template <std::floating_point T>
AgentPool<T> read_snapshot_csv(std::istream& in);

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

inline std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace cellmech
