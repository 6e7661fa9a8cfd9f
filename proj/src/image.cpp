#include "eiss/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "eiss/errors.hpp"

namespace eiss {

Image blacken(const Image& img, const Region& region) {
  Image out = img;
  const Region r = clamp_to_frame(region, img.width, img.height);
  if (r.w <= 0 || r.h <= 0) return out;
  for (int y = r.y; y < r.bottom(); ++y) {
    float* row = &out.pixels[out.index(r.x, y, 0)];
    std::fill(row, row + static_cast<size_t>(r.w) * img.channels, 0.0f);
  }
  return out;
}

namespace {

// Corner-aligned source position for output index i: o=0 maps to the first
// sample, o=T-1 to the last. A single-sample target reads the source center.
double sample_pos(int i, int target, int source) {
  if (target == 1) return 0.5 * (source - 1);
  return static_cast<double>(i) * (source - 1) / (target - 1);
}

}  // namespace

Image crop_rescale(const Image& img, const Region& region, int target_w, int target_h) {
  const Region r = clamp_to_frame(region, img.width, img.height);
  if (r.w <= 0 || r.h <= 0) throw EmptyCropError();

  Image out(target_w, target_h, img.channels);
  for (int oy = 0; oy < target_h; ++oy) {
    const double sy = sample_pos(oy, target_h, r.h);
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, r.h - 1);
    const double dy = sy - y0;
    for (int ox = 0; ox < target_w; ++ox) {
      const double sx = sample_pos(ox, target_w, r.w);
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, r.w - 1);
      const double dx = sx - x0;
      for (int c = 0; c < img.channels; ++c) {
        const double v00 = img.at(r.x + x0, r.y + y0, c);
        const double v10 = img.at(r.x + x1, r.y + y0, c);
        const double v01 = img.at(r.x + x0, r.y + y1, c);
        const double v11 = img.at(r.x + x1, r.y + y1, c);
        const double v = v00 * (1 - dx) * (1 - dy) + v10 * dx * (1 - dy) +
                         v01 * (1 - dx) * dy + v11 * dx * dy;
        out.at(ox, oy, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return out;
}

namespace {

int read_pnm_token(std::istream& in) {
  // skips whitespace and '#' comment lines between header fields
  for (;;) {
    int ch = in.peek();
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(ch)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  in >> value;
  return value;
}

}  // namespace

Image load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EissError("cannot open image: " + path);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  int channels = 0;
  if (magic[0] == 'P' && magic[1] == '6') channels = 3;
  else if (magic[0] == 'P' && magic[1] == '5') channels = 1;
  else throw EissError("unsupported image container (expected binary PPM P6 or PGM P5): " + path);

  const int w = read_pnm_token(in);
  const int h = read_pnm_token(in);
  const int maxval = read_pnm_token(in);
  if (w <= 0 || h <= 0 || maxval != 255) throw EissError("bad PNM header: " + path);
  in.get();  // single whitespace byte before raster

  Image img(w, h, channels);
  std::vector<unsigned char> raw(static_cast<size_t>(w) * h * channels);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<size_t>(in.gcount()) != raw.size()) throw EissError("truncated image data: " + path);
  for (size_t i = 0; i < raw.size(); ++i) img.pixels[i] = raw[i] / 255.0f;
  return img;
}

void save_image(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw EissError("cannot write image: " + path);
  out << (img.channels == 3 ? "P6" : "P5") << "\n"
      << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.pixels.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    const float v = std::clamp(img.pixels[i], 0.0f, 1.0f);
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw EissError("cannot write image: " + path);
}

}  // namespace eiss
