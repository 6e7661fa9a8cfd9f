#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "eiss/image.hpp"

namespace eiss {

using Color = std::array<float, 3>;

// Describes the single-object test images used in place of a real dataset.
// Palette colors are pairwise at least 0.2 apart (per-channel max metric)
// and distinct from the background so the oracle can tell classes apart.
struct SyntheticSpec {
  int frame_width = 128;
  int frame_height = 128;
  std::vector<Color> palette = {{0.9f, 0.2f, 0.1f}, {0.1f, 0.4f, 0.9f}};
  double area_fraction_lo = 0.15;
  double area_fraction_hi = 0.35;
  Color background = {0.5f, 0.5f, 0.5f};

  int class_count() const { return static_cast<int>(palette.size()); }
};

struct SyntheticSample {
  Image image;
  Region truth;
  int class_id = 0;
};

// Deterministic in (spec, seed): a background-colored frame with one solid
// palette-colored rectangle whose area fraction lies in the configured range,
// fully inside the frame with a >= 2 pixel margin. Throws
// EissError("infeasible spec") when no rectangle can satisfy the constraints.
SyntheticSample generate_synthetic(const SyntheticSpec& spec, uint64_t seed);

}  // namespace eiss
