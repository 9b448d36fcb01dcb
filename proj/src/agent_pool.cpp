#include "cellmech/agent_pool.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cellmech/errors.hpp"
#include "cellmech/random.hpp"

namespace cellmech {

std::string_view to_string(Precision p) {
  return p == Precision::kFp32 ? "fp32" : "fp64";
}

Precision parse_precision(std::string_view text) {
  if (text == "fp32" || text == "float") return Precision::kFp32;
  if (text == "fp64" || text == "double") return Precision::kFp64;
  throw std::invalid_argument("unknown precision '" + std::string(text) + "'");
}

namespace {

template <std::floating_point T>
void validate_record(const AgentRecord<T>& r) {
  if (!is_finite(r.position)) throw std::invalid_argument("agent position must be finite");
  if (!(r.diameter > 0) || !std::isfinite(r.diameter)) {
    throw std::invalid_argument("agent diameter must be positive and finite");
  }
  if (!(r.adherence >= 0) || !std::isfinite(r.adherence)) {
    throw std::invalid_argument("agent adherence must be nonnegative and finite");
  }
}

template <typename V>
void permute(V& values, std::span<const std::size_t> perm) {
  V out(values.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out[i] = values[perm[i]];
  values.swap(out);
}

template <std::floating_point T>
void append_number(std::string& line, T value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  line.append(buf, end);
}

template <typename V>
V parse_field(std::string_view field) {
  V value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw std::invalid_argument("malformed snapshot field '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

template <std::floating_point T>
AgentPool<T> AgentPool<T>::from_records(std::span<const AgentRecord<T>> records) {
  AgentPool pool;
  pool.reserve(records.size());
  for (const auto& r : records) {
    validate_record(r);
    if (r.uid >= kUidLimit) throw std::invalid_argument("agent uid exceeds the uid limit");
    pool.push(r);
  }
  std::vector<std::uint64_t> ids(pool.uid_);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw std::invalid_argument("duplicate agent uid");
  }
  pool.next_uid_ = ids.empty() ? 0 : ids.back() + 1;
  return pool;
}

template <std::floating_point T>
AgentRecord<T> AgentPool<T>::record(std::size_t i) const {
  return {uid_[i], position(i), diameter_[i], adherence_[i]};
}

template <std::floating_point T>
void AgentPool<T>::clear_displacements() {
  std::fill(dx_.begin(), dx_.end(), T(0));
  std::fill(dy_.begin(), dy_.end(), T(0));
  std::fill(dz_.begin(), dz_.end(), T(0));
}

template <std::floating_point T>
void AgentPool<T>::push(const AgentRecord<T>& r) {
  x_.push_back(r.position.x);
  y_.push_back(r.position.y);
  z_.push_back(r.position.z);
  diameter_.push_back(r.diameter);
  adherence_.push_back(r.adherence);
  dx_.push_back(T(0));
  dy_.push_back(T(0));
  dz_.push_back(T(0));
  uid_.push_back(r.uid);
}

template <std::floating_point T>
std::size_t AgentPool<T>::append(const AgentRecord<T>& record) {
  validate_record(record);
  AgentRecord<T> r = record;
  if (next_uid_ >= kUidLimit) throw CapacityError("uid space exhausted");
  r.uid = next_uid_++;
  push(r);
  return size() - 1;
}

template <std::floating_point T>
void AgentPool<T>::remove(std::size_t index) {
  if (index >= size()) {
    throw std::out_of_range("remove: index " + std::to_string(index) + " out of range");
  }
  const std::size_t last = size() - 1;
  auto swap_pop = [&](auto& v) {
    v[index] = v[last];
    v.pop_back();
  };
  swap_pop(x_);
  swap_pop(y_);
  swap_pop(z_);
  swap_pop(diameter_);
  swap_pop(adherence_);
  swap_pop(dx_);
  swap_pop(dy_);
  swap_pop(dz_);
  swap_pop(uid_);
}

template <std::floating_point T>
void AgentPool<T>::apply_permutation(std::span<const std::size_t> perm) {
  if (perm.size() != size()) {
    throw std::invalid_argument("permutation length does not match pool size");
  }
  std::vector<bool> seen(perm.size(), false);
  for (std::size_t p : perm) {
    if (p >= perm.size() || seen[p]) {
      throw std::invalid_argument("index array is not a permutation");
    }
    seen[p] = true;
  }
  permute(x_, perm);
  permute(y_, perm);
  permute(z_, perm);
  permute(diameter_, perm);
  permute(adherence_, perm);
  permute(dx_, perm);
  permute(dy_, perm);
  permute(dz_, perm);
  permute(uid_, perm);
}

template <std::floating_point T>
void AgentPool<T>::reserve(std::size_t n) {
  for (auto* v : {&x_, &y_, &z_, &diameter_, &adherence_, &dx_, &dy_, &dz_}) v->reserve(n);
  uid_.reserve(n);
}

template <std::floating_point T>
void AgentPool<T>::check_invariants() const {
  const std::size_t n = uid_.size();
  for (const auto* v : {&x_, &y_, &z_, &diameter_, &adherence_, &dx_, &dy_, &dz_}) {
    if (v->size() != n) throw std::logic_error("attribute array length mismatch");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(diameter_[i] > 0)) throw std::logic_error("nonpositive diameter");
    if (!(adherence_[i] >= 0)) throw std::logic_error("negative adherence");
    if (!is_finite(position(i))) throw std::logic_error("nonfinite position");
    if (uid_[i] >= next_uid_) throw std::logic_error("uid beyond uid counter");
  }
  std::vector<std::uint64_t> ids(uid_);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw std::logic_error("duplicate uid");
  }
}

template <std::floating_point T>
AgentPool<T> spawn_grid(std::size_t side_count, T spacing, T diameter, T adherence,
                        std::size_t agent_cap) {
  if (side_count < 1) throw std::invalid_argument("side_count must be >= 1");
  if (!(spacing > 0)) throw std::invalid_argument("spacing must be positive");
  if (!(diameter > 0)) throw std::invalid_argument("diameter must be positive");
  const double total = std::pow(static_cast<double>(side_count), 3.0);
  if (total > static_cast<double>(agent_cap)) {
    throw CapacityError("grid of " + std::to_string(side_count) + "^3 agents exceeds agent cap " +
                        std::to_string(agent_cap));
  }
  AgentPool<T> pool;
  pool.reserve(side_count * side_count * side_count);
  for (std::size_t i = 0; i < side_count; ++i) {
    for (std::size_t j = 0; j < side_count; ++j) {
      for (std::size_t k = 0; k < side_count; ++k) {
        pool.append({0,
                     {static_cast<T>(i) * spacing, static_cast<T>(j) * spacing,
                      static_cast<T>(k) * spacing},
                     diameter,
                     adherence});
      }
    }
  }
  return pool;
}

template <std::floating_point T>
AgentPool<T> spawn_random(std::size_t n, const Aabb<T>& bounds, T diameter, T adherence,
                          std::uint64_t seed, std::size_t agent_cap) {
  if (!bounds.valid()) throw std::invalid_argument("invalid bounds (min > max)");
  if (n > 1 && bounds.degenerate()) {
    throw std::invalid_argument("degenerate bounds for more than one agent");
  }
  if (n > agent_cap) {
    throw CapacityError(std::to_string(n) + " agents exceed agent cap " + std::to_string(agent_cap));
  }
  SplitMix64 rng(seed);
  const double lo[3] = {bounds.min.x, bounds.min.y, bounds.min.z};
  const double span[3] = {static_cast<double>(bounds.max.x) - lo[0],
                          static_cast<double>(bounds.max.y) - lo[1],
                          static_cast<double>(bounds.max.z) - lo[2]};
  AgentPool<T> pool;
  pool.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double c[3];
    for (int a = 0; a < 3; ++a) c[a] = lo[a] + rng.uniform() * span[a];
    pool.append({0,
                 {static_cast<T>(c[0]), static_cast<T>(c[1]), static_cast<T>(c[2])},
                 diameter,
                 adherence});
  }
  return pool;
}

template <std::floating_point T>
Aabb<T> bounds_of(const AgentPool<T>& pool) {
  Aabb<T> box = Aabb<T>::empty();
  for (std::size_t i = 0; i < pool.size(); ++i) box.expand(pool.position(i));
  return box;
}

template <std::floating_point T>
std::vector<AgentRecord<T>> sorted_records(const AgentPool<T>& pool) {
  std::vector<AgentRecord<T>> out;
  out.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) out.push_back(pool.record(i));
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.uid < b.uid; });
  return out;
}

template <std::floating_point T>
std::uint64_t state_hash(const AgentPool<T>& pool) {
  std::uint64_t h = kFnvOffset;
  for (const auto& r : sorted_records(pool)) {
    h = fnv1a(h, &r.uid, sizeof r.uid);
    const T values[5] = {r.position.x, r.position.y, r.position.z, r.diameter, r.adherence};
    h = fnv1a(h, values, sizeof values);
  }
  return h;
}

template <std::floating_point T>
void write_snapshot_csv(const AgentPool<T>& pool, std::ostream& out) {
  out << "uid,x,y,z,diameter,adherence\n";
  std::string line;
  for (const auto& r : sorted_records(pool)) {
    line = std::to_string(r.uid);
    for (T v : {r.position.x, r.position.y, r.position.z, r.diameter, r.adherence}) {
      line.push_back(',');
      append_number(line, v);
    }
    line.push_back('\n');
    out << line;
  }
}

template <std::floating_point T>
AgentPool<T> read_snapshot_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "uid,x,y,z,diameter,adherence") {
    throw std::invalid_argument("snapshot CSV is missing the expected header");
  }
  std::vector<AgentRecord<T>> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::string_view rest(line);
    std::string_view fields[6];
    for (int f = 0; f < 6; ++f) {
      const auto comma = rest.find(',');
      if ((comma == std::string_view::npos) != (f == 5)) {
        throw std::invalid_argument("snapshot row must have 6 fields: " + line);
      }
      fields[f] = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    AgentRecord<T> r;
    r.uid = parse_field<std::uint64_t>(fields[0]);
    r.position = {parse_field<T>(fields[1]), parse_field<T>(fields[2]), parse_field<T>(fields[3])};
    r.diameter = parse_field<T>(fields[4]);
    r.adherence = parse_field<T>(fields[5]);
    records.push_back(r);
  }
  return AgentPool<T>::from_records(records);
}

#define CELLMECH_INSTANTIATE(T)                                                           \
  template class AgentPool<T>;                                                            \
  template AgentPool<T> spawn_grid<T>(std::size_t, T, T, T, std::size_t);                 \
  template AgentPool<T> spawn_random<T>(std::size_t, const Aabb<T>&, T, T, std::uint64_t, \
                                        std::size_t);                                     \
  template Aabb<T> bounds_of<T>(const AgentPool<T>&);                                     \
  template std::vector<AgentRecord<T>> sorted_records<T>(const AgentPool<T>&);            \
  template std::uint64_t state_hash<T>(const AgentPool<T>&);                              \
  template void write_snapshot_csv<T>(const AgentPool<T>&, std::ostream&);                \
  template AgentPool<T> read_snapshot_csv<T>(std::istream&);

CELLMECH_INSTANTIATE(float)
CELLMECH_INSTANTIATE(double)

#undef CELLMECH_INSTANTIATE

}  // namespace cellmech
