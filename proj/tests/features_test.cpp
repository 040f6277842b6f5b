#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "msreg/features.hpp"
#include "support.hpp"

using msreg::Corner;
using msreg::GrayImage;
using msreg::HarrisConfig;
using msreg::Image;
using testing_support::random_gray;
using testing_support::rect_image;

namespace {

// Structure tensor from explicit Sobel kernels and an explicit 2D Gaussian
// window (clamped borders), scored through its eigenvalues.
Image<double> eigen_score_oracle(const GrayImage& img, double sigma, double k) {
  const int w = img.width(), h = img.height();
  Image<double> gx(w, h), gy(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto p = [&](int i, int j) { return static_cast<double>(img.clamped(x + i, y + j)); };
      gx.at(x, y) = ((p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1))) / 8.0;
      gy.at(x, y) = ((p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1))) / 8.0;
    }
  }
  const int r = static_cast<int>(std::ceil(3 * sigma));
  double norm = 0.0;
  for (int j = -r; j <= r; ++j) {
    for (int i = -r; i <= r; ++i) norm += std::exp(-(i * i + j * j) / (2 * sigma * sigma));
  }
  Image<double> out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double a = 0, b = 0, c = 0;
      for (int j = -r; j <= r; ++j) {
        for (int i = -r; i <= r; ++i) {
          const double wt = std::exp(-(i * i + j * j) / (2 * sigma * sigma)) / norm;
          const double dx = gx.clamped(x + i, y + j), dy = gy.clamped(x + i, y + j);
          a += wt * dx * dx;
          b += wt * dx * dy;
          c += wt * dy * dy;
        }
      }
      const double mid = 0.5 * (a + c);
      const double rad = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
      const double l1 = mid + rad, l2 = mid - rad;
      out.at(x, y) = l1 * l2 - k * (l1 + l2) * (l1 + l2);
    }
  }
  return out;
}

// O(N w1^2) scan for strict local maxima with the row-major tie rule.
std::vector<Corner> brute_force_nms(const Image<double>& s, const HarrisConfig& cfg) {
  double smax = 0.0;
  for (double v : s.pixels()) smax = std::max(smax, v);
  std::vector<Corner> out;
  const int r = cfg.nms_window / 2;
  for (int y = 0; y < s.height(); ++y) {
    for (int x = 0; x < s.width(); ++x) {
      const double v = s.at(x, y);
      if (v <= 0.0 || v < cfg.min_score * smax) continue;
      bool is_max = true;
      for (int j = -r; j <= r; ++j) {
        for (int i = -r; i <= r; ++i) {
          if ((i == 0 && j == 0) || !s.contains(x + i, y + j)) continue;
          const double n = s.at(x + i, y + j);
          const bool before = j < 0 || (j == 0 && i < 0);
          if (n > v || (n == v && before)) is_max = false;
        }
      }
      if (is_max) out.push_back({x, y, v});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Corner& a, const Corner& b) { return a.score > b.score; });
  if (out.size() > static_cast<std::size_t>(cfg.max_corners)) out.resize(static_cast<std::size_t>(cfg.max_corners));
  return out;
}

GrayImage square16() { return rect_image(16, 16, 5, 5, 11, 11, 0.0F, 1.0F); }

// The square's score peaks sit 3 px apart, so a 7x7 window would merge them.
HarrisConfig square_cfg() {
  HarrisConfig cfg;
  cfg.nms_window = 5;
  return cfg;
}

}  // namespace

TEST(HarrisScore, ConstantIsZero) {
  const auto s = msreg::harris_score_map(GrayImage(9, 9, 0.4F), {});
  for (double v : s.pixels()) EXPECT_EQ(v, 0.0);
}

TEST(HarrisScore, StraightEdgeIsNonPositive) {
  const auto img = rect_image(24, 24, 12, 0, 24, 24, 0.1F, 0.9F);
  const auto s = msreg::harris_score_map(img, {});
  for (int y = 0; y < 24; ++y) {
    for (int x = 9; x <= 14; ++x) EXPECT_LE(s.at(x, y), 0.0) << x << "," << y;
  }
}

TEST(HarrisScore, MatchesEigenvalueOracle) {
  for (const GrayImage& img : {square16(), random_gray(20, 14, 3)}) {
    const HarrisConfig cfg;
    const auto s = msreg::harris_score_map(img, cfg);
    const auto ref = eigen_score_oracle(img, cfg.window_sigma, cfg.k);
    double scale = 0.0;
    for (double v : ref.pixels()) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(s.pixels()[i], ref.pixels()[i], 1e-9 * scale + 1e-15);
  }
}

TEST(HarrisScore, SquareHasFourMaximaNearItsCorners) {
  const auto ref = eigen_score_oracle(square16(), 1.5, 0.04);
  double smax = 0.0;
  for (double v : ref.pixels()) smax = std::max(smax, v);
  std::vector<Corner> maxima;
  for (int y = 1; y < 15; ++y) {
    for (int x = 1; x < 15; ++x) {
      const double v = ref.at(x, y);
      bool strict = v > 0.1 * smax;
      for (int j = -1; j <= 1; ++j) {
        for (int i = -1; i <= 1; ++i) {
          if ((i || j) && ref.at(x + i, y + j) >= v) strict = false;
        }
      }
      if (strict) maxima.push_back({x, y, v});
    }
  }
  ASSERT_EQ(maxima.size(), 4U);
  const auto detected = msreg::detect_corners(square16(), square_cfg());
  ASSERT_EQ(detected.size(), 4U);
  const int cx[4] = {5, 10, 5, 10}, cy[4] = {5, 5, 10, 10};
  for (int c = 0; c < 4; ++c) {
    const auto near = [&](const Corner& k) { return std::abs(k.x - cx[c]) <= 2 && std::abs(k.y - cy[c]) <= 2; };
    EXPECT_EQ(std::count_if(maxima.begin(), maxima.end(), near), 1);
    EXPECT_EQ(std::count_if(detected.begin(), detected.end(), near), 1);
  }
}

TEST(DetectCorners, ZeroMapIsEmpty) { EXPECT_TRUE(msreg::detect_corners(Image<double>(12, 12, 0.0), {}).empty()); }

TEST(DetectCorners, SinglePositivePixel) {
  Image<double> s(15, 11, 0.0);
  s.at(6, 4) = 0.3;
  const auto c = msreg::detect_corners(s, {});
  ASSERT_EQ(c.size(), 1U);
  EXPECT_EQ(c[0], (Corner{6, 4, 0.3}));
}

TEST(DetectCorners, TiesGoToFirstRowMajorPixel) {
  Image<double> s(15, 11, 0.0);
  s.at(6, 4) = 0.5;
  s.at(8, 4) = 0.5;
  s.at(5, 6) = 0.5;
  const auto c = msreg::detect_corners(s, {});
  ASSERT_EQ(c.size(), 1U);
  EXPECT_EQ(c[0].x, 6);
  EXPECT_EQ(c[0].y, 4);
}

TEST(DetectCorners, SquareMatchesBruteForceNms) {
  const HarrisConfig cfg = square_cfg();
  const auto s = msreg::harris_score_map(square16(), cfg);
  const auto got = msreg::detect_corners(s, cfg);
  EXPECT_EQ(got, brute_force_nms(s, cfg));
  ASSERT_EQ(got.size(), 4U);
  for (std::size_t i = 1; i < got.size(); ++i) EXPECT_GE(got[i - 1].score, got[i].score);
}

TEST(DetectCorners, RandomMapsMatchBruteForceNms) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    HarrisConfig cfg;
    cfg.nms_window = 3 + 2 * static_cast<int>(seed % 3);
    cfg.max_corners = 10;
    const auto img = msreg::gaussian_blur(random_gray(60, 45, seed), 1.0);
    const auto s = msreg::harris_score_map(img, cfg);
    EXPECT_EQ(msreg::detect_corners(s, cfg), brute_force_nms(s, cfg));
  }
}

TEST(DetectCorners, NoTwoCornersShareAWindow) {
  HarrisConfig cfg;
  cfg.max_corners = 1000;
  cfg.min_score = 0.0;
  const auto c = msreg::detect_corners(random_gray(80, 80, 12), cfg);
  ASSERT_GT(c.size(), 20U);
  const int half = cfg.nms_window / 2;
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      EXPECT_GT(std::max(std::abs(c[i].x - c[j].x), std::abs(c[i].y - c[j].y)), half);
    }
  }
}

TEST(DetectCorners, PositionsInvariantToAffineIntensity) {
  // Dyadic pixel values so that 2 I + 1/4 is computed exactly.
  std::mt19937 rng(9);
  GrayImage img(64, 48);
  for (float& v : img.pixels()) v = static_cast<float>(rng() % 9) / 32.0F;
  img = msreg::gaussian_blur(img, 1.0);
  for (float& v : img.pixels()) v = std::round(v * 256.0F) / 256.0F;
  GrayImage brighter = img;
  for (float& v : brighter.pixels()) v = 2.0F * v + 0.25F;
  const auto a = msreg::detect_corners(img, HarrisConfig{});
  const auto b = msreg::detect_corners(brighter, HarrisConfig{});
  ASSERT_EQ(a.size(), b.size());
  ASSERT_FALSE(a.empty());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].x, b[i].x);
    EXPECT_EQ(a[i].y, b[i].y);
  }
}

TEST(DetectCorners, CapAndThreshold) {
  HarrisConfig cfg;
  cfg.max_corners = 5;
  const auto c = msreg::detect_corners(random_gray(64, 64, 77), cfg);
  EXPECT_EQ(c.size(), 5U);
  for (const auto& k : c) EXPECT_GT(k.score, 0.0);
}

TEST(HarrisConfig, ValidationNamesKeys) {
  auto expect_key = [](HarrisConfig cfg, const std::string& key) {
    try {
      cfg.validate();
      FAIL() << key;
    } catch (const msreg::ParameterError& e) {
      EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
    }
  };
  HarrisConfig c;
  c.k = 0.3;
  expect_key(c, "harris.k");
  c = {};
  c.nms_window = 4;
  expect_key(c, "harris.nms_window");
  c = {};
  c.max_corners = 3;
  expect_key(c, "harris.max_corners");
  c = {};
  c.window_sigma = 0;
  expect_key(c, "harris.window_sigma");
}

TEST(HarrisScore, RejectsTinyImage) {
  EXPECT_THROW((void)msreg::harris_score_map(GrayImage(2, 8), {}), msreg::ParameterError);
}

TEST(Corners, CsvDump) {
  EXPECT_EQ(msreg::corners_to_csv({{3, 4, 0.5}}), "x,y,score\n3,4,0.5\n");
}
