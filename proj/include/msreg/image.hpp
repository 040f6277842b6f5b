#pragma once

// Raster types and the low-level filters every other module is built on.
//
// Intensities live in [0, 1] as float. Signed intermediates (gradients,
// high-pass bands) reuse the same Image template, unclamped.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "msreg/error.hpp"

namespace msreg {

template <typename T>
class Image {
 public:
  using value_type = T;

  Image() = default;

  Image(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw ParameterError("image dimensions must be >= 1, got " + std::to_string(width) + "x" +
                           std::to_string(height));
    }
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  Image(int width, int height, std::vector<T> data) : width_(width), height_(height), data_(std::move(data)) {
    if (width < 1 || height < 1) {
      throw ParameterError("image dimensions must be >= 1");
    }
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw ParameterError("image data length does not match width*height");
    }
  }

  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  [[nodiscard]] T& at(int x, int y) noexcept { return data_[index(x, y)]; }
  [[nodiscard]] const T& at(int x, int y) const noexcept { return data_[index(x, y)]; }
  [[nodiscard]] T& operator()(int x, int y) noexcept { return at(x, y); }
  [[nodiscard]] const T& operator()(int x, int y) const noexcept { return at(x, y); }

  /// Replicate-border access.
  [[nodiscard]] const T& clamped(int x, int y) const noexcept {
    return at(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
  }

  [[nodiscard]] bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  [[nodiscard]] std::span<T> row(int y) noexcept {
    return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }
  [[nodiscard]] std::span<const T> row(int y) const noexcept {
    return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }

  [[nodiscard]] std::span<T> pixels() noexcept { return data_; }
  [[nodiscard]] std::span<const T> pixels() const noexcept { return data_; }

  [[nodiscard]] bool same_shape(const auto& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  [[nodiscard]] std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using GrayImage = Image<float>;

/// Three planes sharing one shape.
class ColorImage {
 public:
  ColorImage() = default;

  ColorImage(int width, int height) : r_(width, height), g_(width, height), b_(width, height) {}

  ColorImage(GrayImage r, GrayImage g, GrayImage b) : r_(std::move(r)), g_(std::move(g)), b_(std::move(b)) {
    if (!r_.same_shape(g_) || !r_.same_shape(b_)) {
      throw ParameterError("color planes must share dimensions");
    }
  }

  [[nodiscard]] int width() const noexcept { return r_.width(); }
  [[nodiscard]] int height() const noexcept { return r_.height(); }

  [[nodiscard]] GrayImage& r() noexcept { return r_; }
  [[nodiscard]] GrayImage& g() noexcept { return g_; }
  [[nodiscard]] GrayImage& b() noexcept { return b_; }
  [[nodiscard]] const GrayImage& r() const noexcept { return r_; }
  [[nodiscard]] const GrayImage& g() const noexcept { return g_; }
  [[nodiscard]] const GrayImage& b() const noexcept { return b_; }

  [[nodiscard]] GrayImage& plane(int c) noexcept { return c == 0 ? r_ : (c == 1 ? g_ : b_); }
  [[nodiscard]] const GrayImage& plane(int c) const noexcept { return c == 0 ? r_ : (c == 1 ? g_ : b_); }

  friend bool operator==(const ColorImage&, const ColorImage&) = default;

 private:
  GrayImage r_, g_, b_;
};

template <typename T>
struct GradientPair {
  Image<T> ix;
  Image<T> iy;
};

// BT.601 luma weights.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

[[nodiscard]] inline GrayImage to_luminance(const ColorImage& img) {
  GrayImage y(img.width(), img.height());
  auto r = img.r().pixels();
  auto g = img.g().pixels();
  auto b = img.b().pixels();
  auto out = y.pixels();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = kLumaR * r[i] + kLumaG * g[i] + kLumaB * b[i];
    out[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  return y;
}

[[nodiscard]] inline ColorImage replicate3(const GrayImage& g) { return ColorImage(g, g, g); }

template <typename T, typename U = T>
[[nodiscard]] Image<U> convert(const Image<T>& img) {
  Image<U> out(img.width(), img.height());
  std::transform(img.pixels().begin(), img.pixels().end(), out.pixels().begin(),
                 [](T v) { return static_cast<U>(v); });
  return out;
}

[[nodiscard]] inline GrayImage clamp01(const GrayImage& img) {
  GrayImage out = img;
  for (float& v : out.pixels()) v = std::clamp(v, 0.0F, 1.0F);
  return out;
}

/// Sampled Gaussian of std `sigma`, radius ceil(3 sigma), normalized to sum 1.
[[nodiscard]] inline std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("gaussian sigma must be positive, got " + std::to_string(sigma));
  }
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

/// Separable Gaussian low-pass with replicate borders. Accumulates in double.
template <typename T>
[[nodiscard]] Image<T> gaussian_blur(const Image<T>& img, double sigma) {
  const std::vector<double> k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int w = img.width();
  const int h = img.height();

  // Horizontal pass into a double buffer.
  std::vector<double> tmp(static_cast<std::size_t>(w) * h);
  std::vector<double> padded(static_cast<std::size_t>(w + 2 * radius));
  for (int y = 0; y < h; ++y) {
    auto src = img.row(y);
    for (int i = 0; i < w + 2 * radius; ++i) {
      padded[static_cast<std::size_t>(i)] = static_cast<double>(src[static_cast<std::size_t>(std::clamp(i - radius, 0, w - 1))]);
    }
    double* dst = tmp.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      const double* p = padded.data() + x;
      for (std::size_t j = 0; j < k.size(); ++j) acc += k[j] * p[j];
      dst[x] = acc;
    }
  }

  // Vertical pass, row-wise accumulation.
  Image<T> out(w, h);
  std::vector<double> acc(static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int j = -radius; j <= radius; ++j) {
      const int sy = std::clamp(y + j, 0, h - 1);
      const double kj = k[static_cast<std::size_t>(j + radius)];
      const double* src = tmp.data() + static_cast<std::size_t>(sy) * w;
      for (int x = 0; x < w; ++x) acc[static_cast<std::size_t>(x)] += kj * src[x];
    }
    auto dst = out.row(y);
    for (int x = 0; x < w; ++x) dst[static_cast<std::size_t>(x)] = static_cast<T>(acc[static_cast<std::size_t>(x)]);
  }
  return out;
}

/// 3x3 Sobel derivatives scaled by 1/8 (unit response to a unit ramp),
/// replicate borders. +x is right, +y is down.
template <typename T>
[[nodiscard]] GradientPair<T> gradients(const Image<T>& img) {
  const int w = img.width();
  const int h = img.height();
  if (w < 3 || h < 3) {
    throw ParameterError("gradients need an image of at least 3x3");
  }
  GradientPair<T> g{Image<T>(w, h), Image<T>(w, h)};
  for (int y = 0; y < h; ++y) {
    const int ym = std::max(y - 1, 0);
    const int yp = std::min(y + 1, h - 1);
    auto r0 = img.row(ym);
    auto r1 = img.row(y);
    auto r2 = img.row(yp);
    auto gx = g.ix.row(y);
    auto gy = g.iy.row(y);
    for (int x = 0; x < w; ++x) {
      const auto xm = static_cast<std::size_t>(std::max(x - 1, 0));
      const auto xp = static_cast<std::size_t>(std::min(x + 1, w - 1));
      const auto xc = static_cast<std::size_t>(x);
      const T dx = (r0[xp] - r0[xm]) + T(2) * (r1[xp] - r1[xm]) + (r2[xp] - r2[xm]);
      const T dy = (r2[xm] - r0[xm]) + T(2) * (r2[xc] - r0[xc]) + (r2[xp] - r0[xp]);
      gx[xc] = dx / T(8);
      gy[xc] = dy / T(8);
    }
  }
  return g;
}

}  // namespace msreg
