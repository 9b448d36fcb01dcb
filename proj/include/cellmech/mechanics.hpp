#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>

#include "cellmech/agent_pool.hpp"
#include "cellmech/errors.hpp"
#include "cellmech/random.hpp"
#include "cellmech/uniform_grid.hpp"

namespace cellmech {

/// Collision-force and displacement parameters. Stored in double and
/// narrowed to the pool's precision at use.
struct ForceParams {
  double kappa = 2.0;             // repulsion coefficient
  double gamma = 1.0;             // attraction coefficient
  double timestep = 0.01;
  double max_displacement = 3.0;  // per-step displacement cap (length units)
  double adherence_scale = 1.0;   // force threshold = scale * agent adherence

  void validate() const {
    if (!(kappa >= 0) || !(gamma >= 0)) throw std::invalid_argument("kappa and gamma must be >= 0");
    if (!(timestep > 0)) throw std::invalid_argument("timestep must be > 0");
    if (!(max_displacement > 0)) throw std::invalid_argument("max_displacement must be > 0");
    if (!(adherence_scale >= 0)) throw std::invalid_argument("adherence_scale must be >= 0");
  }
};

inline constexpr double kDefaultAdherence = 0.4;

/// Floating-point operations per colliding pair, counted from contact_force
/// plus the accumulation into the running sum:
///   difference 3, norm 6 (3 mul, 2 add, sqrt), overlap 2,
///   reduced radius 3, magnitude 5 (2 mul, sqrt, mul, sub),
///   direction scaling 4 (div, 3 mul), accumulation 3.
inline constexpr double kFlopsPerForceEvaluation = 26.0;

enum class ContactKind { kNone, kForce, kDegenerate };

/// Overlap-gated force on sphere 1 from sphere 2. Writes `out` only for
/// kForce. For kDegenerate (coincident centers, positive overlap) the caller
/// picks a direction; the magnitude is then contact_magnitude(r1 + r2, ...).
template <std::floating_point T>
inline ContactKind contact_force(const Vec3<T>& p1, T r1, const Vec3<T>& p2, T r2, T kappa,
                                 T gamma, Vec3<T>& out) {
  const Vec3<T> diff = sub(p1, p2);
  const T dist = norm(diff);
  const T delta = r1 + r2 - dist;
  if (!(delta > 0)) return ContactKind::kNone;
  if (dist == 0) return ContactKind::kDegenerate;
  const T r = r1 * r2 / (r1 + r2);
  const T magnitude = kappa * delta - gamma * std::sqrt(r * delta);
  out = scale(diff, magnitude / dist);
  return ContactKind::kForce;
}

template <std::floating_point T>
inline T contact_magnitude(T delta, T r1, T r2, T kappa, T gamma) {
  const T r = r1 * r2 / (r1 + r2);
  return kappa * delta - gamma * std::sqrt(r * delta);
}

/// Force on agent 1. Zero when the spheres do not overlap (delta <= 0).
/// Throws DegenerateContactError for coincident overlapping centers.
template <std::floating_point T>
Vec3<T> collision_force(const Vec3<T>& p1, T r1, const Vec3<T>& p2, T r2,
                        const ForceParams& params) {
  if (!(r1 > 0) || !(r2 > 0)) throw std::invalid_argument("radii must be positive");
  Vec3<T> f{};
  const auto kind = contact_force(p1, r1, p2, r2, static_cast<T>(params.kappa),
                                  static_cast<T>(params.gamma), f);
  if (kind == ContactKind::kDegenerate) throw DegenerateContactError(0, 0);
  return f;
}

/// Adherence gate followed by an explicit Euler step and the length cap.
/// The returned vector never exceeds max_displacement in length.
template <std::floating_point T>
Vec3<T> resolve_displacement(const Vec3<T>& total_force, T adherence, const ForceParams& params) {
  const T threshold = static_cast<T>(params.adherence_scale) * adherence;
  if (norm(total_force) <= threshold) return {};
  Vec3<T> d = scale(total_force, static_cast<T>(params.timestep));
  const T cap = static_cast<T>(params.max_displacement);
  const T length = norm(d);
  if (length > cap) {
    d = scale(d, cap / length);
    // Rounding can leave the rescaled vector an ulp long.
    while (norm(d) > cap) d = scale(d, std::nextafter(T(1), T(0)));
  }
  return d;
}

enum class DegeneratePolicy {
  kRaise,          // throw DegenerateContactError naming both uids
  kDeterministic,  // pseudo-random direction keyed on the ordered uid pair
};

struct ForceCounters {
  std::uint64_t force_evaluations = 0;  // ordered pairs with positive overlap
  std::uint64_t candidates = 0;         // distance tests performed
  std::uint64_t degenerate = 0;         // coincident-center fallbacks applied

  ForceCounters& operator+=(const ForceCounters& o) {
    force_evaluations += o.force_evaluations;
    candidates += o.candidates;
    degenerate += o.degenerate;
    return *this;
  }
};

/// Unit direction used for coincident centers. The lower uid is pushed along
/// +u and the higher along -u, so the pair stays antisymmetric.
template <std::floating_point T>
Vec3<T> degenerate_direction(std::uint64_t self_uid, std::uint64_t other_uid) {
  const std::uint64_t lo = std::min(self_uid, other_uid);
  const std::uint64_t hi = std::max(self_uid, other_uid);
  const Vec3<double> u = unit_vector(counter_key(lo, hi, kStreamDegenerate));
  const double sign = self_uid < other_uid ? 1.0 : -1.0;
  return {static_cast<T>(sign * u.x), static_cast<T>(sign * u.y), static_cast<T>(sign * u.z)};
}

/// Adds the contribution of neighbor j to `sum` for agent i. Every execution
/// strategy funnels through this so that per-agent results are bit-identical.
template <std::floating_point T>
inline void add_pair_force(Vec3<T>& sum, const Vec3<T>& pi, T ri, std::uint64_t uid_i,
                           const Vec3<T>& pj, T rj, std::uint64_t uid_j, T kappa, T gamma,
                           DegeneratePolicy policy, ForceCounters& counters) {
  Vec3<T> f{};
  switch (contact_force(pi, ri, pj, rj, kappa, gamma, f)) {
    case ContactKind::kNone:
      return;
    case ContactKind::kForce:
      break;
    case ContactKind::kDegenerate:
      if (policy == DegeneratePolicy::kRaise) throw DegenerateContactError(uid_i, uid_j);
      f = scale(degenerate_direction<T>(uid_i, uid_j), contact_magnitude(ri + rj, ri, rj, kappa, gamma));
      ++counters.degenerate;
      break;
  }
  ++counters.force_evaluations;
  sum = add(sum, f);
}

/// Sum of collision forces on agent `query` from its grid neighbors, visited
/// in ascending uid.
template <std::floating_point T>
Vec3<T> accumulate_forces(const AgentPool<T>& pool, const UniformGrid<T>& grid, std::size_t query,
                          const ForceParams& params,
                          DegeneratePolicy policy = DegeneratePolicy::kRaise,
                          ForceCounters* counters = nullptr, NeighborScratch* scratch = nullptr) {
  ForceCounters local;
  NeighborScratch own;
  NeighborScratch& buf = scratch ? *scratch : own;
  const T kappa = static_cast<T>(params.kappa);
  const T gamma = static_cast<T>(params.gamma);
  const Vec3<T> pi = pool.position(query);
  const T ri = pool.radius(query);
  const std::uint64_t uid_i = pool.uid(query);
  Vec3<T> sum{};
  local.candidates += grid.for_each_neighbor(
      pool, query, grid.box_length(),
      [&](std::size_t j) {
        add_pair_force(sum, pi, ri, uid_i, pool.position(j), pool.radius(j), pool.uid(j), kappa,
                       gamma, policy, local);
      },
      buf);
  if (counters) *counters += local;
  return sum;
}

}  // namespace cellmech
