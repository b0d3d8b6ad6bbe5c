#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace percolab {

using Vertex = std::uint32_t;

/// Canonical identifier of an undirected edge, dense in [0, edge_count).
struct EdgeId {
  std::uint64_t value = 0;
  friend constexpr bool operator==(EdgeId, EdgeId) = default;
  friend constexpr auto operator<=>(EdgeId, EdgeId) = default;
};

// Error taxonomy. The C API and CLI map these onto exit/status codes.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InfeasibleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// SplitMix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t combine(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}

/// Uniform in [0,1) with 53 bits of precision.
constexpr double to_unit(std::uint64_t h) noexcept {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace detail

inline void require(bool cond, const std::string& message) {
  if (!cond) throw UsageError(message);
}

}  // namespace percolab
