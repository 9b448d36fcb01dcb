#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>

namespace cellmech {

/// Three-component vector, instantiated at float and double.
template <std::floating_point T>
struct Vec3 {
  T x{};
  T y{};
  T z{};

  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

template <std::floating_point T>
constexpr Vec3<T> add(const Vec3<T>& a, const Vec3<T>& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}

template <std::floating_point T>
constexpr Vec3<T> sub(const Vec3<T>& a, const Vec3<T>& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}

template <std::floating_point T>
constexpr Vec3<T> scale(const Vec3<T>& a, T s) {
  return {a.x * s, a.y * s, a.z * s};
}

template <std::floating_point T>
constexpr T dot(const Vec3<T>& a, const Vec3<T>& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

template <std::floating_point T>
constexpr Vec3<T> operator+(const Vec3<T>& a, const Vec3<T>& b) { return add(a, b); }
template <std::floating_point T>
constexpr Vec3<T> operator-(const Vec3<T>& a, const Vec3<T>& b) { return sub(a, b); }
template <std::floating_point T>
constexpr Vec3<T> operator-(const Vec3<T>& a) { return {-a.x, -a.y, -a.z}; }
template <std::floating_point T>
constexpr Vec3<T> operator*(const Vec3<T>& a, T s) { return scale(a, s); }

template <std::floating_point T>
constexpr T squared_norm(const Vec3<T>& a) {
  return dot(a, a);
}

// The zero vector has norm exactly 0; callers that divide by a norm guard it.
template <std::floating_point T>
T norm(const Vec3<T>& a) {
  return std::sqrt(dot(a, a));
}

template <std::floating_point T>
bool is_finite(const Vec3<T>& a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

template <std::floating_point T>
constexpr T component(const Vec3<T>& a, int axis) {
  return axis == 0 ? a.x : (axis == 1 ? a.y : a.z);
}

/// Closed-ball membership: |a - b| <= radius, evaluated on squared lengths.
/// Every neighbor backend and the brute-force oracle share this predicate so
/// that boundary cases resolve identically.
template <std::floating_point T>
constexpr bool within_radius(const Vec3<T>& a, const Vec3<T>& b, T radius) {
  return squared_norm(sub(a, b)) <= radius * radius;
}

template <std::floating_point T>
struct Aabb {
  Vec3<T> min{};
  Vec3<T> max{};

  constexpr bool valid() const {
    return min.x <= max.x && min.y <= max.y && min.z <= max.z;
  }
  /// True when any axis has zero extent.
  constexpr bool degenerate() const {
    return min.x == max.x || min.y == max.y || min.z == max.z;
  }
  constexpr Vec3<T> extent() const { return sub(max, min); }

  static constexpr Aabb empty() {
    constexpr T inf = std::numeric_limits<T>::infinity();
    return {{inf, inf, inf}, {-inf, -inf, -inf}};
  }

  constexpr void expand(const Vec3<T>& p) {
    min = {std::min(min.x, p.x), std::min(min.y, p.y), std::min(min.z, p.z)};
    max = {std::max(max.x, p.x), std::max(max.y, p.y), std::max(max.z, p.z)};
  }
};

}  // namespace cellmech
