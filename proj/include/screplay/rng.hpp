#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace screplay {

using Rng = std::mt19937_64;

/// Derives an independent stream seed from a master seed and a fixed label,
/// so that adding or reordering consumers never shifts another consumer's draws.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

inline Rng make_rng(std::uint64_t master, std::string_view label) {
  return Rng(derive_seed(master, label));
}

/// Uniform integer in [lo, hi], inclusive. Implemented locally rather than with
/// std::uniform_int_distribution so streams are identical across standard libraries.
std::uint64_t uniform_index(Rng& rng, std::uint64_t lo, std::uint64_t hi);

/// Uniform real in [0, 1).
double uniform_unit(Rng& rng);

/// Standard normal draw (Box-Muller, no cached spare).
double standard_normal(Rng& rng);

} // namespace screplay
