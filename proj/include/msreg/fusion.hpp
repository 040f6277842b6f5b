#pragma once

// High-pass/low-pass fusion of a registered visible/infrared pair, followed
// by color restoration from the visible image.
//
// Per scale sigma the low band is alpha-blended and the high band takes the
// sample with the larger magnitude (visible wins ties); the recombined
// image emphasizes the high band by `gain`. Three scales are averaged.

#include <algorithm>
#include <array>
#include <cmath>

#include "msreg/image.hpp"

namespace msreg {

struct FusionConfig {
  double alpha = 0.5;
  double gain = 1.5;
  std::array<double, 3> sigmas{1.0, 2.0, 4.0};
  double color_eps = 1.0 / 255.0;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("fusion.alpha must be in [0, 1]");
    if (!(gain >= 0.0)) throw ParameterError("fusion.gain must be >= 0");
    if (!(sigmas[0] > 0.0 && sigmas[0] < sigmas[1] && sigmas[1] < sigmas[2])) {
      throw ParameterError("fusion.sigmas must be positive and strictly increasing");
    }
    if (!(color_eps > 0.0)) throw ParameterError("fusion.color_eps must be positive");
  }
};

/// The high band is kept in double: for float inputs, float(lp + hp)
/// reproduces the input exactly.
struct FrequencySplit {
  GrayImage lp;
  Image<double> hp;
};

[[nodiscard]] inline FrequencySplit split_frequencies(const GrayImage& img, double sigma) {
  FrequencySplit s{gaussian_blur(img, sigma), Image<double>(img.width(), img.height())};
  auto in = img.pixels();
  auto lp = s.lp.pixels();
  auto hp = s.hp.pixels();
  for (std::size_t i = 0; i < in.size(); ++i) hp[i] = static_cast<double>(in[i]) - static_cast<double>(lp[i]);
  return s;
}

[[nodiscard]] inline GrayImage reconstruct(const FrequencySplit& s) {
  GrayImage out(s.lp.width(), s.lp.height());
  auto lp = s.lp.pixels();
  auto hp = s.hp.pixels();
  auto o = out.pixels();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = static_cast<float>(static_cast<double>(lp[i]) + hp[i]);
  return out;
}

/// F_sigma, unclamped.
[[nodiscard]] inline Image<double> fuse_single_scale(const GrayImage& yv, const GrayImage& ir, double sigma,
                                                     double alpha, double gain) {
  if (!yv.same_shape(ir)) throw ParameterError("fusion inputs must have equal dimensions");
  const FrequencySplit a = split_frequencies(yv, sigma);
  const FrequencySplit b = split_frequencies(ir, sigma);
  Image<double> f(yv.width(), yv.height());
  auto out = f.pixels();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double low = alpha * a.lp.pixels()[i] + (1.0 - alpha) * b.lp.pixels()[i];
    const double hv = a.hp.pixels()[i];
    const double hi = b.hp.pixels()[i];
    const double high = std::abs(hv) >= std::abs(hi) ? hv : hi;
    out[i] = low + gain * high;
  }
  return f;
}

[[nodiscard]] inline GrayImage fuse_hplp(const GrayImage& yv, const GrayImage& ir, const FusionConfig& cfg) {
  cfg.validate();
  if (!yv.same_shape(ir)) throw ParameterError("fusion inputs must have equal dimensions");
  Image<double> sum(yv.width(), yv.height(), 0.0);
  for (double sigma : cfg.sigmas) {
    const Image<double> f = fuse_single_scale(yv, ir, sigma, cfg.alpha, cfg.gain);
    for (std::size_t i = 0; i < sum.size(); ++i) sum.pixels()[i] += f.pixels()[i];
  }
  GrayImage out(yv.width(), yv.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.pixels()[i] = static_cast<float>(std::clamp(sum.pixels()[i] / 3.0, 0.0, 1.0));
  }
  return out;
}

/// Scales each channel of `v` by f / max(Y(v), eps), clamped to [0, 1].
[[nodiscard]] inline ColorImage restore_color(const GrayImage& f, const ColorImage& v, double color_eps) {
  if (f.width() != v.width() || f.height() != v.height()) {
    throw ParameterError("restore_color inputs must have equal dimensions");
  }
  if (!(color_eps > 0.0)) throw ParameterError("color_eps must be positive");
  ColorImage out(v.width(), v.height());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double r = v.r().pixels()[i];
    const double g = v.g().pixels()[i];
    const double b = v.b().pixels()[i];
    const double y = kLumaR * r + kLumaG * g + kLumaB * b;
    const double ratio = f.pixels()[i] / std::max(y, color_eps);
    out.r().pixels()[i] = static_cast<float>(std::clamp(ratio * r, 0.0, 1.0));
    out.g().pixels()[i] = static_cast<float>(std::clamp(ratio * g, 0.0, 1.0));
    out.b().pixels()[i] = static_cast<float>(std::clamp(ratio * b, 0.0, 1.0));
  }
  return out;
}

struct FusionResult {
  GrayImage gray;
  ColorImage color;
};

[[nodiscard]] inline FusionResult fuse_pair(const ColorImage& v, const GrayImage& ir, const FusionConfig& cfg) {
  if (v.width() != ir.width() || v.height() != ir.height()) {
    throw ParameterError("fusion inputs must have equal dimensions (" + std::to_string(v.width()) + "x" +
                         std::to_string(v.height()) + " vs " + std::to_string(ir.width()) + "x" +
                         std::to_string(ir.height()) + ")");
  }
  GrayImage f = fuse_hplp(to_luminance(v), ir, cfg);
  ColorImage fc = restore_color(f, v, cfg.color_eps);
  return {std::move(f), std::move(fc)};
}

}  // namespace msreg
