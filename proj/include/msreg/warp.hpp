#pragma once

#include <cmath>

#include "msreg/image.hpp"
#include "msreg/transform.hpp"

namespace msreg {

/// Bilinear sample at real coordinates; returns false when (x, y) lies
/// outside [0, w-1] x [0, h-1].
template <typename T>
[[nodiscard]] bool sample_bilinear(const Image<T>& img, double x, double y, double& out) noexcept {
  constexpr double kSlack = 1e-9;
  const double maxx = img.width() - 1;
  const double maxy = img.height() - 1;
  if (!(x >= -kSlack && y >= -kSlack && x <= maxx + kSlack && y <= maxy + kSlack)) return false;
  x = std::clamp(x, 0.0, maxx);
  y = std::clamp(y, 0.0, maxy);
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  const int x1 = fx > 0.0 ? x0 + 1 : x0;
  const int y1 = fy > 0.0 ? y0 + 1 : y0;
  const double top = (1.0 - fx) * img.at(x0, y0) + fx * img.at(x1, y0);
  const double bottom = (1.0 - fx) * img.at(x0, y1) + fx * img.at(x1, y1);
  out = (1.0 - fy) * top + fy * bottom;
  return true;
}

/// Resamples `img` so that a point p of the source lands at t(p) in the
/// output. Output pixels whose preimage falls outside the source get `fill`.
template <typename T>
[[nodiscard]] Image<T> warp_affine(const Image<T>& img, const AffineTransform& t, int out_w, int out_h, T fill) {
  if (!t.invertible()) {
    throw ParameterError("warp_affine: transform is singular");
  }
  const AffineTransform inv = t.inverse();
  const auto& m = inv.matrix();
  Image<T> out(out_w, out_h, fill);
  for (int y = 0; y < out_h; ++y) {
    auto dst = out.row(y);
    for (int x = 0; x < out_w; ++x) {
      const double sx = m[0] * x + m[1] * y + m[2];
      const double sy = m[3] * x + m[4] * y + m[5];
      double v = 0.0;
      if (sample_bilinear(img, sx, sy, v)) dst[static_cast<std::size_t>(x)] = static_cast<T>(v);
    }
  }
  return out;
}

template <typename T>
[[nodiscard]] Image<T> warp_affine(const Image<T>& img, const AffineTransform& t, T fill = T{}) {
  return warp_affine(img, t, img.width(), img.height(), fill);
}

[[nodiscard]] inline ColorImage warp_affine(const ColorImage& img, const AffineTransform& t, int out_w, int out_h,
                                            float fill = 0.0F) {
  return {warp_affine(img.r(), t, out_w, out_h, fill), warp_affine(img.g(), t, out_w, out_h, fill),
          warp_affine(img.b(), t, out_w, out_h, fill)};
}

}  // namespace msreg
