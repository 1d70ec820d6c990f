#pragma once

namespace mcflow {

// Which pinching polynomial applies: closed hypersurfaces (curves in R^2) or
// codimension >= 2 (curves in R^3).
enum class Variant { Hypersurface, HigherCodim };

inline const char* to_string(Variant v) {
  return v == Variant::Hypersurface ? "hypersurface" : "higher_codim";
}

}  // namespace mcflow
