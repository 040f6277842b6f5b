#pragma once

// Canny edges plus a full-circle quantized gradient direction for every pixel.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "msreg/image.hpp"

namespace msreg {

struct CannyConfig {
  double blur_sigma = 1.0;
  double low_ratio = 0.1;
  double high_ratio = 0.2;

  void validate() const {
    if (!(blur_sigma > 0.0)) throw ParameterError("canny.blur_sigma must be positive");
    if (!(low_ratio > 0.0)) throw ParameterError("canny.low_ratio must be positive");
    if (!(high_ratio <= 1.0)) throw ParameterError("canny.high_ratio must be <= 1");
    if (!(low_ratio < high_ratio)) throw ParameterError("canny.low_ratio must be smaller than canny.high_ratio");
  }
};

struct EdgeMap {
  Image<std::uint8_t> e;  // 0 or 1
  Image<std::uint8_t> g;  // direction bin in [0, k1)
  int k1 = 16;
};

/// Signed direction bin: floor(angle / (2 pi / k1)) with angle = atan2(iy, ix)
/// wrapped to [0, 2 pi). A zero gradient maps to bin 0.
[[nodiscard]] inline int quantize_direction(double ix, double iy, int k1) {
  if (k1 < 2) throw ParameterError("direction bin count must be >= 2");
  if (ix == 0.0 && iy == 0.0) return 0;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double angle = std::atan2(iy, ix);
  if (angle < 0.0) angle += kTwoPi;
  // The tiny bias lands angles that are exact bin boundaries (e.g. 5 pi / 4)
  // in the upper bin despite rounding in atan2 and the wrap.
  const int bin = static_cast<int>(std::floor(angle * k1 / kTwoPi + 1e-9));
  return bin >= k1 ? bin - k1 : bin;
}

namespace edges_detail {

// Neighbour offsets for the four NMS sectors (gradient along 0, 45, 90, 135 deg,
// with +y pointing down).
inline void sector_offsets(double gx, double gy, int& dx, int& dy) {
  double a = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
  if (a < 0.0) a += 180.0;
  if (a < 22.5 || a >= 157.5) {
    dx = 1, dy = 0;
  } else if (a < 67.5) {
    dx = 1, dy = 1;
  } else if (a < 112.5) {
    dx = 0, dy = 1;
  } else {
    dx = -1, dy = 1;
  }
}

}  // namespace edges_detail

[[nodiscard]] inline EdgeMap canny(const GrayImage& img, const CannyConfig& cfg, int k1 = 16) {
  cfg.validate();
  if (img.width() < 5 || img.height() < 5) throw ParameterError("canny needs an image of at least 5x5");
  if (k1 < 2 || k1 > 255) throw ParameterError("direction bin count must be in [2, 255]");
  const int w = img.width();
  const int h = img.height();

  const auto grad = gradients(gaussian_blur(convert<float, double>(img), cfg.blur_sigma));
  Image<double> mag(w, h);
  double maxmag = 0.0;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    const double m = std::hypot(grad.ix.pixels()[i], grad.iy.pixels()[i]);
    mag.pixels()[i] = m;
    maxmag = std::max(maxmag, m);
  }

  EdgeMap out{Image<std::uint8_t>(w, h, 0), Image<std::uint8_t>(w, h, 0), k1};
  for (std::size_t i = 0; i < mag.size(); ++i) {
    out.g.pixels()[i] = static_cast<std::uint8_t>(quantize_direction(grad.ix.pixels()[i], grad.iy.pixels()[i], k1));
  }
  if (!(maxmag > 0.0)) return out;

  const double low = cfg.low_ratio * maxmag;
  const double high = cfg.high_ratio * maxmag;

  // 0 = suppressed, 1 = weak, 2 = strong. The one-pixel frame never holds edges.
  Image<std::uint8_t> cls(w, h, 0);
  std::vector<int> stack;
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const double m = mag.at(x, y);
      if (m < low || !(m > 0.0)) continue;
      int dx = 0, dy = 0;
      edges_detail::sector_offsets(grad.ix.at(x, y), grad.iy.at(x, y), dx, dy);
      const double ahead = mag.at(x + dx, y + dy);
      const double behind = mag.at(x - dx, y - dy);
      // Plateaus of two equal pixels keep only the one further along the gradient.
      if (!(m > behind && m >= ahead)) continue;
      if (m >= high) {
        cls.at(x, y) = 2;
        stack.push_back(y * w + x);
      } else {
        cls.at(x, y) = 1;
      }
    }
  }

  // Hysteresis: grow from strong pixels through weak ones, 8-connected.
  for (int idx : stack) out.e.pixels()[static_cast<std::size_t>(idx)] = 1;
  while (!stack.empty()) {
    const int idx = stack.back();
    stack.pop_back();
    const int x = idx % w;
    const int y = idx / w;
    for (int v = y - 1; v <= y + 1; ++v) {
      for (int u = x - 1; u <= x + 1; ++u) {
        if (u < 1 || v < 1 || u >= w - 1 || v >= h - 1) continue;
        if (cls.at(u, v) == 1 && out.e.at(u, v) == 0) {
          out.e.at(u, v) = 1;
          stack.push_back(v * w + u);
        }
      }
    }
  }
  return out;
}

/// Debug rasters: edges as 0/1 intensities, directions as bin / 255.
[[nodiscard]] inline GrayImage edge_raster(const EdgeMap& map) {
  GrayImage out(map.e.width(), map.e.height());
  for (std::size_t i = 0; i < out.size(); ++i) out.pixels()[i] = map.e.pixels()[i] != 0 ? 1.0F : 0.0F;
  return out;
}

[[nodiscard]] inline GrayImage direction_raster(const EdgeMap& map) {
  GrayImage out(map.g.width(), map.g.height());
  for (std::size_t i = 0; i < out.size(); ++i) out.pixels()[i] = static_cast<float>(map.g.pixels()[i]) / 255.0F;
  return out;
}

}  // namespace msreg
