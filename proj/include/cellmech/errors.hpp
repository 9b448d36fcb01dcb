#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cellmech {

/// A configured size limit (agent cap, grid box cap, tile capacity) would be
/// exceeded.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A query radius larger than the grid's box length; the 27-box stencil would
/// miss neighbors.
class StencilError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Two overlapping agents share the same center, so the force direction is
/// undefined.
class DegenerateContactError : public std::runtime_error {
 public:
  DegenerateContactError(std::uint64_t uid_a, std::uint64_t uid_b)
      : std::runtime_error("coincident centers for overlapping agents " +
                           std::to_string(uid_a) + " and " + std::to_string(uid_b)),
        uid_a_(uid_a),
        uid_b_(uid_b) {}

  std::uint64_t uid_a() const { return uid_a_; }
  std::uint64_t uid_b() const { return uid_b_; }

 private:
  std::uint64_t uid_a_;
  std::uint64_t uid_b_;
};

}  // namespace cellmech
