#include "eiss/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "eiss/errors.hpp"
#include "eiss/rng.hpp"

namespace eiss {

namespace {

// Placement keeps at least this margin to every frame edge. Mirrors the
// center bias of single-instance photo collections; never below 2 pixels.
int placement_margin(int frame_w, int frame_h) {
  return std::max(2, (std::min(frame_w, frame_h) * 3) / 20);
}

// Heights compatible with width w: h in [1, max_h] and lo <= w*h/area <= hi.
// Returns {lo_h, hi_h}; empty when lo_h > hi_h.
std::pair<int, int> height_range(int w, int max_h, double lo, double hi, double frame_area) {
  const int h_lo = std::max(1, static_cast<int>(std::ceil(lo * frame_area / w - 1e-9)));
  const int h_hi = std::min(max_h, static_cast<int>(std::floor(hi * frame_area / w + 1e-9)));
  return {h_lo, h_hi};
}

}  // namespace

SyntheticSample generate_synthetic(const SyntheticSpec& spec, uint64_t seed) {
  if (spec.palette.empty() || spec.area_fraction_lo >= spec.area_fraction_hi ||
      spec.area_fraction_lo <= 0.0 || spec.area_fraction_hi >= 1.0) {
    throw EissError("infeasible spec");
  }
  const int margin = placement_margin(spec.frame_width, spec.frame_height);
  const int max_w = spec.frame_width - 2 * margin;
  const int max_h = spec.frame_height - 2 * margin;
  if (max_w < 1 || max_h < 1) throw EissError("infeasible spec");

  const double frame_area =
      static_cast<double>(spec.frame_width) * spec.frame_height;

  Rng rng(seed);
  const int class_id = static_cast<int>(rng.below(spec.palette.size()));

  // Sample a width whose compatible height range is nonempty. A few random
  // draws biased toward square-ish boxes, then a full scan from a random
  // start so tight fraction windows still resolve deterministically.
  int w = 0, h = 0;
  for (int attempt = 0; attempt < 64 && w == 0; ++attempt) {
    const double frac = rng.uniform(spec.area_fraction_lo, spec.area_fraction_hi);
    const double aspect = std::exp(rng.uniform(std::log(0.6), std::log(1.0 / 0.6)));
    const double target_area = frac * frame_area;
    const int cand_w = std::clamp(
        static_cast<int>(std::floor(std::sqrt(target_area * aspect) + 0.5)), 1, max_w);
    const auto [h_lo, h_hi] = height_range(cand_w, max_h, spec.area_fraction_lo,
                                           spec.area_fraction_hi, frame_area);
    if (h_lo <= h_hi) {
      w = cand_w;
      h = static_cast<int>(rng.range(h_lo, h_hi));
    }
  }
  if (w == 0) {
    const int start = static_cast<int>(rng.below(static_cast<uint64_t>(max_w))) + 1;
    for (int step = 0; step < max_w && w == 0; ++step) {
      const int cand_w = (start - 1 + step) % max_w + 1;
      const auto [h_lo, h_hi] = height_range(cand_w, max_h, spec.area_fraction_lo,
                                             spec.area_fraction_hi, frame_area);
      if (h_lo <= h_hi) {
        w = cand_w;
        h = static_cast<int>(rng.range(h_lo, h_hi));
      }
    }
  }
  if (w == 0) throw EissError("infeasible spec");

  const int x = static_cast<int>(rng.range(margin, spec.frame_width - margin - w));
  const int y = static_cast<int>(rng.range(margin, spec.frame_height - margin - h));
  const Region truth{x, y, w, h};

  Image img(spec.frame_width, spec.frame_height, 3);
  for (int py = 0; py < img.height; ++py) {
    for (int px = 0; px < img.width; ++px) {
      const bool inside = px >= truth.x && px < truth.right() && py >= truth.y &&
                          py < truth.bottom();
      const Color& c = inside ? spec.palette[class_id] : spec.background;
      for (int ch = 0; ch < 3; ++ch) img.at(px, py, ch) = c[ch];
    }
  }
  return SyntheticSample{std::move(img), truth, class_id};
}

}  // namespace eiss
