#include "eiss/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "eiss/errors.hpp"

namespace eiss {

Region intersect(const Region& a, const Region& b) {
  const int x0 = std::max(a.x, b.x);
  const int y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.right(), b.right());
  const int y1 = std::min(a.bottom(), b.bottom());
  return Region{x0, y0, x1 - x0, y1 - y0};
}

Region clamp_to_frame(const Region& r, int frame_w, int frame_h) {
  return intersect(r, Region{0, 0, frame_w, frame_h});
}

double iou(const Region& a, const Region& b) {
  const Region inter = intersect(a, b);
  if (inter.w <= 0 || inter.h <= 0) return 0.0;
  const int64_t inter_area = inter.area();
  const int64_t union_area = a.area() + b.area() - inter_area;
  return static_cast<double>(inter_area) / static_cast<double>(union_area);
}

Region bounding_union(std::span<const Region> regions) {
  if (regions.empty()) throw EissError("no regions to union");
  int x0 = regions[0].x;
  int y0 = regions[0].y;
  int x1 = regions[0].right();
  int y1 = regions[0].bottom();
  for (const Region& r : regions.subspan(1)) {
    x0 = std::min(x0, r.x);
    y0 = std::min(y0, r.y);
    x1 = std::max(x1, r.right());
    y1 = std::max(y1, r.bottom());
  }
  return Region{x0, y0, x1 - x0, y1 - y0};
}

std::pair<int, int> child_size(const Region& parent, double alpha) {
  // round-half-up keeps per-axis shrinkage closest to the nominal alpha
  const int cw = static_cast<int>(std::floor(alpha * parent.w + 0.5));
  const int ch = static_cast<int>(std::floor(alpha * parent.h + 0.5));
  return {cw, ch};
}

std::vector<Region> propose_grid(const Region& parent, double alpha, int stride) {
  const auto [cw, ch] = child_size(parent, alpha);
  if (cw < 1 || ch < 1) throw DegenerateRegionError();

  std::vector<Region> out;
  const int max_x = parent.w - cw;
  const int max_y = parent.h - ch;
  if (max_x < 0 || max_y < 0) return out;
  out.reserve(static_cast<size_t>(max_x / stride + 1) * (max_y / stride + 1));
  for (int dy = 0; dy <= max_y; dy += stride) {
    for (int dx = 0; dx <= max_x; dx += stride) {
      out.push_back(Region{parent.x + dx, parent.y + dy, cw, ch});
    }
  }
  return out;
}

}  // namespace eiss
