#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace eiss {

// Axis-aligned rectangle in pixel coordinates. Half-open convention: the
// region covers columns [x, x+w) and rows [y, y+h). A valid region has
// w >= 1 and h >= 1; callers clamp to the image frame where needed.
struct Region {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int right() const { return x + w; }
  int bottom() const { return y + h; }
  int64_t area() const { return static_cast<int64_t>(w) * h; }
  bool valid() const { return w >= 1 && h >= 1; }

  bool contains(const Region& other) const {
    return other.x >= x && other.y >= y && other.right() <= right() &&
           other.bottom() <= bottom();
  }

  bool operator==(const Region& other) const = default;
};

// Intersection of two regions; w/h are zero or negative when disjoint.
Region intersect(const Region& a, const Region& b);

// Clamp a region to the frame [0,w)x[0,h). Result may be empty (w or h <= 0).
Region clamp_to_frame(const Region& r, int frame_w, int frame_h);

// Intersection-over-union of two valid regions, in [0,1]. Exact integer
// area arithmetic; disjoint pairs return 0.
double iou(const Region& a, const Region& b);

// Smallest region containing every input. Throws EissError("no regions to
// union") on an empty list.
Region bounding_union(std::span<const Region> regions);

// Child size after shrinking by alpha per axis, round-half-up.
std::pair<int, int> child_size(const Region& parent, double alpha);

// All placements of the alpha-shrunk child inside parent whose corners lie
// on the stride lattice anchored at the parent corner. Row-major order
// (y ascending, then x ascending). Throws DegenerateRegionError when the
// child size would be zero in either dimension.
std::vector<Region> propose_grid(const Region& parent, double alpha, int stride);

}  // namespace eiss
