#pragma once

// Harris corner detection with non-maximal suppression.

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "msreg/image.hpp"

namespace msreg {

struct HarrisConfig {
  double k = 0.04;
  double window_sigma = 1.5;
  int nms_window = 7;
  int max_corners = 400;
  double min_score = 0.01;  // fraction of the maximum score

  void validate() const {
    if (!(k > 0.0 && k < 0.25)) throw ParameterError("harris.k must be in (0, 0.25)");
    if (!(window_sigma > 0.0)) throw ParameterError("harris.window_sigma must be positive");
    if (nms_window < 3 || nms_window % 2 == 0) throw ParameterError("harris.nms_window must be odd and >= 3");
    if (max_corners < 4) throw ParameterError("harris.max_corners must be >= 4");
    if (!(min_score >= 0.0 && min_score <= 1.0)) throw ParameterError("harris.min_score must be in [0, 1]");
  }
};

struct Corner {
  int x = 0;
  int y = 0;
  double score = 0.0;

  friend bool operator==(const Corner&, const Corner&) = default;
};

/// S = det(A) - k trace(A)^2 with A the Gaussian-weighted structure tensor
/// of the Sobel derivatives.
[[nodiscard]] inline Image<double> harris_score_map(const GrayImage& img, const HarrisConfig& cfg) {
  cfg.validate();
  if (img.width() < 3 || img.height() < 3) throw ParameterError("harris_score_map needs an image of at least 3x3");
  const auto g = gradients(convert<float, double>(img));
  const int w = img.width();
  const int h = img.height();
  Image<double> xx(w, h), yy(w, h), xy(w, h);
  auto ix = g.ix.pixels();
  auto iy = g.iy.pixels();
  for (std::size_t i = 0; i < ix.size(); ++i) {
    xx.pixels()[i] = ix[i] * ix[i];
    yy.pixels()[i] = iy[i] * iy[i];
    xy.pixels()[i] = ix[i] * iy[i];
  }
  xx = gaussian_blur(xx, cfg.window_sigma);
  yy = gaussian_blur(yy, cfg.window_sigma);
  xy = gaussian_blur(xy, cfg.window_sigma);

  Image<double> s(w, h);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double a = xx.pixels()[i];
    const double b = xy.pixels()[i];
    const double c = yy.pixels()[i];
    const double tr = a + c;
    s.pixels()[i] = (a * c - b * b) - cfg.k * tr * tr;
  }
  return s;
}

/// Strict maxima of their w1 x w1 neighbourhood (equal scores resolve to the
/// smallest row-major index), at least min_score * max(S) and positive.
/// Sorted by descending score, then row-major index; truncated to max_corners.
[[nodiscard]] inline std::vector<Corner> detect_corners(const Image<double>& score, const HarrisConfig& cfg) {
  cfg.validate();
  const int w = score.width();
  const int h = score.height();
  const int r = cfg.nms_window / 2;
  double smax = 0.0;
  for (double v : score.pixels()) smax = std::max(smax, v);
  std::vector<Corner> out;
  if (!(smax > 0.0)) return out;
  const double threshold = cfg.min_score * smax;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double s = score.at(x, y);
      if (!(s > 0.0) || s < threshold) continue;
      bool keep = true;
      const int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
      const int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
      for (int v = y0; v <= y1 && keep; ++v) {
        for (int u = x0; u <= x1; ++u) {
          if (u == x && v == y) continue;
          const double n = score.at(u, v);
          // A neighbour earlier in row-major order wins ties.
          const bool earlier = v < y || (v == y && u < x);
          if (n > s || (n == s && earlier)) {
            keep = false;
            break;
          }
        }
      }
      if (keep) out.push_back({x, y, s});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Corner& a, const Corner& b) { return a.score > b.score; });
  if (out.size() > static_cast<std::size_t>(cfg.max_corners)) out.resize(static_cast<std::size_t>(cfg.max_corners));
  return out;
}

[[nodiscard]] inline std::vector<Corner> detect_corners(const GrayImage& img, const HarrisConfig& cfg) {
  return detect_corners(harris_score_map(img, cfg), cfg);
}

/// Debug dump: header plus one `x,y,score` row per corner.
[[nodiscard]] inline std::string corners_to_csv(const std::vector<Corner>& corners) {
  std::ostringstream os;
  os.precision(9);
  os << "x,y,score\n";
  for (const Corner& c : corners) os << c.x << ',' << c.y << ',' << c.score << '\n';
  return os.str();
}

}  // namespace msreg
