#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "msreg/image.hpp"

namespace testing_support {

inline msreg::GrayImage random_gray(int w, int h, std::uint64_t seed, float lo = 0.0F, float hi = 1.0F) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  msreg::GrayImage img(w, h);
  for (float& v : img.pixels()) v = u(rng);
  return img;
}

inline msreg::ColorImage random_color(int w, int h, std::uint64_t seed, float lo = 0.0F, float hi = 1.0F) {
  return {random_gray(w, h, seed, lo, hi), random_gray(w, h, seed + 101, lo, hi), random_gray(w, h, seed + 202, lo, hi)};
}

/// Filled axis-aligned rectangle [x0, x1) x [y0, y1) of value `fg` on `bg`.
inline msreg::GrayImage rect_image(int w, int h, int x0, int y0, int x1, int y1, float bg, float fg) {
  msreg::GrayImage img(w, h, bg);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) img.at(x, y) = fg;
  }
  return img;
}

/// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("msreg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support
