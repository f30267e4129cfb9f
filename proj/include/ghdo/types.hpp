#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ghdo {

using cplx = std::complex<double>;

/// Spin value, either -1 (down) or +1 (up).
using Spin = std::int8_t;
using Configuration = std::vector<Spin>;

/// Moduli of matrix elements below this are treated as exact zeros.
inline constexpr double kUnderflowModulus = 1e-150;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Raised when |rho(sigma, eta)| is too small to take a logarithm.
struct DegenerateAmplitude : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateBatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonUniqueSteadyState : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CapacityError : std::length_error {
  using std::length_error::length_error;
};

// Computational basis indexing. Site 0 is the most significant bit and
// spin +1 maps to bit 1, so basis index 0 is the all-down state.

inline std::uint64_t config_to_index(std::span<const Spin> s) {
  std::uint64_t idx = 0;
  for (Spin v : s) idx = (idx << 1) | (v > 0 ? 1u : 0u);
  return idx;
}

inline Configuration index_to_config(std::uint64_t idx, int sites) {
  Configuration s(static_cast<std::size_t>(sites));
  for (int h = sites - 1; h >= 0; --h) {
    s[h] = (idx & 1u) ? Spin{1} : Spin{-1};
    idx >>= 1;
  }
  return s;
}

/// Index of the two-valued spin inside a local block: 0 for -1, 1 for +1.
inline int spin_slot(Spin v) { return v > 0 ? 1 : 0; }
inline Spin slot_spin(int slot) { return slot ? Spin{1} : Spin{-1}; }

inline void check_configuration(std::span<const Spin> s, int sites) {
  if (static_cast<int>(s.size()) != sites)
    throw InputError("configuration has " + std::to_string(s.size()) +
                     " sites, expected " + std::to_string(sites));
  for (Spin v : s)
    if (v != 1 && v != -1) throw InputError("spin values must be -1 or +1");
}

}  // namespace ghdo
