#include "eiss/oracle.hpp"

#include <cmath>

#include "eiss/errors.hpp"

namespace eiss {

ResponseVector oracle_response(const Image& img, const OracleParams& params) {
  const int class_count = static_cast<int>(params.palette.size());
  const float tau = static_cast<float>(params.color_tolerance);
  const int channels = img.channels;

  std::vector<int64_t> match_counts(class_count, 0);
  const int64_t total = static_cast<int64_t>(img.width) * img.height;
  for (int64_t p = 0; p < total; ++p) {
    const float* px = &img.pixels[static_cast<size_t>(p) * channels];
    for (int c = 0; c < class_count; ++c) {
      const Color& col = params.palette[c];
      bool match = true;
      for (int ch = 0; ch < channels && match; ++ch) {
        match = std::fabs(px[ch] - col[ch]) <= tau;
      }
      if (match) {
        match_counts[c]++;
      }
    }
  }

  std::vector<double> raw(class_count, 0.0);
  double raw_sum = 0.0;
  for (int c = 0; c < class_count; ++c) {
    const double x = static_cast<double>(match_counts[c]) / static_cast<double>(total);
    const double u = x / params.peak_fraction;
    const double f = (x == 0.0) ? 0.0 : u * std::exp(1.0 - u);
    raw[c] = f;
    raw_sum += f;
  }

  ResponseVector resp;
  resp.probs.resize(class_count + 1);
  const double denom = params.background_mass + raw_sum;
  for (int c = 0; c < class_count; ++c) resp.probs[c] = raw[c] / denom;
  resp.probs[class_count] = params.background_mass / denom;

  std::vector<std::string> labels(class_count + 1);
  for (int c = 0; c < class_count; ++c) labels[c] = "class_" + std::to_string(c);
  labels[class_count] = "background";
  resp.labels = std::move(labels);
  return resp;
}

}  // namespace eiss
