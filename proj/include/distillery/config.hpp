#pragma once

#include <cstddef>
#include <cstdlib>
#include <string>

namespace distillery {

inline constexpr std::size_t kDefaultMaxLocalDim = 64;

// Numerical tolerances shared across modules.
namespace tol {
inline constexpr double hermitian = 1e-10;
inline constexpr double trace = 1e-9;
inline constexpr double eigen = 1e-10;
inline constexpr double completeness = 1e-9;
inline constexpr double rank = 1e-8;
inline constexpr double zero_probability = 1e-12;
inline constexpr double bell_diagonal = 1e-8;
inline constexpr double entropy_clamp = 1e-12;
}  // namespace tol

/// Per-party dimension cap. DISTILLERY_MAX_DIM overrides the default of 64.
inline std::size_t max_local_dim() {
  if (const char* env = std::getenv("DISTILLERY_MAX_DIM"); env != nullptr && *env != '\0') {
    try {
      const long long v = std::stoll(env);
      if (v >= 2) return static_cast<std::size_t>(v);
    } catch (...) {
      // fall through to the default
    }
  }
  return kDefaultMaxLocalDim;
}

}  // namespace distillery
