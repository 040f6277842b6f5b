#pragma once

// Accuracy evaluation against simulated ground truth: warp a base image by a
// known transform, distort its photometry to mimic another band, register,
// and measure how far the recovered translation lands from the planted one.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "msreg/edges.hpp"
#include "msreg/io.hpp"
#include "msreg/registration.hpp"
#include "msreg/warp.hpp"

namespace msreg {

enum class Modality { Identity, Invert, Gamma, InvertGamma };

[[nodiscard]] inline std::string_view to_string(Modality m) noexcept {
  switch (m) {
    case Modality::Identity:
      return "identity";
    case Modality::Invert:
      return "invert";
    case Modality::Gamma:
      return "gamma";
    case Modality::InvertGamma:
      return "invert+gamma";
  }
  return "identity";
}

[[nodiscard]] inline Modality parse_modality(std::string_view s) {
  if (s == "identity") return Modality::Identity;
  if (s == "invert") return Modality::Invert;
  if (s == "gamma") return Modality::Gamma;
  if (s == "invert+gamma") return Modality::InvertGamma;
  throw ParameterError("unknown modality '" + std::string(s) + "' (expected identity|invert|gamma|invert+gamma)");
}

struct SimulationSpec {
  double translation_range = 20.0;     // planted tx, ty uniform in [-range, range]
  std::vector<double> scales{1.0};     // one report row per trial and scale
  Modality modality = Modality::InvertGamma;
  double gamma = 2.2;
  double noise_sigma = 0.02;
  int trials = 20;
  std::uint64_t rng_seed = 2017;

  void validate() const {
    if (trials < 1) throw ParameterError("sim.trials must be >= 1");
    if (!(gamma > 0.0)) throw ParameterError("sim.gamma must be positive");
    if (!(translation_range >= 0.0)) throw ParameterError("sim.translation_range must be >= 0");
    if (!(noise_sigma >= 0.0)) throw ParameterError("sim.noise_sigma must be >= 0");
    if (scales.empty()) throw ParameterError("sim.scales must list at least one scale");
    for (double s : scales) {
      if (!(s > 0.0)) throw ParameterError("sim.scales entries must be positive");
    }
  }
};

// ---------------------------------------------------------------- synthesis

/// Deterministic cluttered scene: smooth multi-octave background with
/// overlapping rectangles, ellipses and triangles, lightly blurred.
[[nodiscard]] inline GrayImage synthesize_texture(int width, int height, std::uint64_t seed, int shapes = 90) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Image<double> img(width, height, 0.5);

  for (int cell : {64, 24, 9}) {
    const int gw = width / cell + 2;
    const int gh = height / cell + 2;
    std::vector<double> grid(static_cast<std::size_t>(gw) * gh);
    for (double& v : grid) v = unit(rng) - 0.5;
    const double amp = 0.12 * cell / 64.0 + 0.03;
    for (int y = 0; y < height; ++y) {
      const double gy = static_cast<double>(y) / cell;
      const int y0 = static_cast<int>(gy);
      const double fy = gy - y0;
      for (int x = 0; x < width; ++x) {
        const double gx = static_cast<double>(x) / cell;
        const int x0 = static_cast<int>(gx);
        const double fx = gx - x0;
        auto at = [&](int u, int v) { return grid[static_cast<std::size_t>(v) * gw + u]; };
        const double top = (1 - fx) * at(x0, y0) + fx * at(x0 + 1, y0);
        const double bot = (1 - fx) * at(x0, y0 + 1) + fx * at(x0 + 1, y0 + 1);
        img.at(x, y) += amp * ((1 - fy) * top + fy * bot);
      }
    }
  }

  const double extent = std::min(width, height);
  for (int s = 0; s < shapes; ++s) {
    const int kind = static_cast<int>(unit(rng) * 3.0);
    const double cx = unit(rng) * width;
    const double cy = unit(rng) * height;
    const double rx = (0.02 + 0.08 * unit(rng)) * extent;
    const double ry = (0.02 + 0.08 * unit(rng)) * extent;
    const double angle = unit(rng) * std::numbers::pi;
    const double value = 0.1 + 0.8 * unit(rng);
    const double ca = std::cos(angle), sa = std::sin(angle);
    // Triangle vertices in the shape frame.
    const double t0 = unit(rng) * 2.0 * std::numbers::pi;
    const double t1 = t0 + 2.0 + unit(rng);
    const double t2 = t1 + 2.0 + unit(rng) * 0.5;
    const Point2 tri[3] = {{rx * std::cos(t0), ry * std::sin(t0)},
                           {rx * std::cos(t1), ry * std::sin(t1)},
                           {rx * std::cos(t2), ry * std::sin(t2)}};
    const double reach = std::max(rx, ry) * 1.5;
    const int x0 = std::max(0, static_cast<int>(cx - reach)), x1 = std::min(width - 1, static_cast<int>(cx + reach));
    const int y0 = std::max(0, static_cast<int>(cy - reach)), y1 = std::min(height - 1, static_cast<int>(cy + reach));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - cx, dy = y - cy;
        const double u = ca * dx + sa * dy;
        const double v = -sa * dx + ca * dy;
        bool inside = false;
        if (kind == 0) {
          inside = std::abs(u) <= rx && std::abs(v) <= ry;
        } else if (kind == 1) {
          inside = (u * u) / (rx * rx) + (v * v) / (ry * ry) <= 1.0;
        } else {
          auto side = [&](Point2 a, Point2 b) { return (b.x - a.x) * (v - a.y) - (b.y - a.y) * (u - a.x); };
          const double d0 = side(tri[0], tri[1]), d1 = side(tri[1], tri[2]), d2 = side(tri[2], tri[0]);
          inside = (d0 >= 0 && d1 >= 0 && d2 >= 0) || (d0 <= 0 && d1 <= 0 && d2 <= 0);
        }
        if (inside) img.at(x, y) = value;
      }
    }
  }

  img = gaussian_blur(img, 0.8);
  GrayImage out(width, height);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.pixels()[i] = static_cast<float>(std::clamp(img.pixels()[i], 0.0, 1.0));
  }
  return out;
}

// ---------------------------------------------------------------- simulation

[[nodiscard]] inline float apply_modality(float v, Modality m, double gamma) {
  switch (m) {
    case Modality::Identity:
      return v;
    case Modality::Invert:
      return 1.0F - v;
    case Modality::Gamma:
      return static_cast<float>(std::pow(std::clamp(static_cast<double>(v), 0.0, 1.0), gamma));
    case Modality::InvertGamma:
      return static_cast<float>(std::pow(std::clamp(1.0 - v, 0.0, 1.0), gamma));
  }
  return v;
}

struct PixelRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

/// Axis-aligned rectangle, found by shrinking the full frame, whose pixels
/// all map back inside the base domain under t^-1. Exact for maps without
/// rotation or shear; otherwise conservative.
[[nodiscard]] inline PixelRect common_valid_region(int width, int height, const AffineTransform& t) {
  const AffineTransform inv = t.inverse();
  const bool axis_aligned = inv[1] == 0.0 && inv[3] == 0.0;
  // Bit 0: the source x falls outside, bit 1: the source y does.
  auto outside = [&](int x, int y) {
    const Point2 p = inv.apply({static_cast<double>(x), static_cast<double>(y)});
    const bool ox = p.x < -1e-9 || p.x > width - 1 + 1e-9;
    const bool oy = p.y < -1e-9 || p.y > height - 1 + 1e-9;
    if (!axis_aligned && (ox || oy)) return 3;
    return (ox ? 1 : 0) | (oy ? 2 : 0);
  };
  int x0 = 0, y0 = 0, x1 = width - 1, y1 = height - 1;
  while (x0 <= x1 && y0 <= y1) {
    const int tl = outside(x0, y0), tr = outside(x1, y0), bl = outside(x0, y1), br = outside(x1, y1);
    if ((tl | tr | bl | br) == 0) break;
    if ((tl | bl) & 1) ++x0;
    if ((tr | br) & 1) --x1;
    if ((tl | tr) & 2) ++y0;
    if ((bl | br) & 2) --y1;
  }
  if (x0 > x1 || y0 > y1) return {};
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

template <typename T>
[[nodiscard]] Image<T> crop(const Image<T>& img, const PixelRect& r) {
  Image<T> out(r.width, r.height);
  for (int y = 0; y < r.height; ++y) {
    auto src = img.row(r.y + y).subspan(static_cast<std::size_t>(r.x), static_cast<std::size_t>(r.width));
    std::copy(src.begin(), src.end(), out.row(y).begin());
  }
  return out;
}

struct SimulatedPair {
  GrayImage img_v;
  GrayImage img_ir;
  PixelRect region;     // same rectangle cut from both bands
  AffineTransform truth;  // t_true expressed in cropped pixel coordinates
};

/// img_v = base + noise; img_ir = modality(warp(base, t_true)) + independent
/// noise; both cropped to the rectangle where the warp has no fill pixels.
/// Cropping shifts the origin, so `truth` is the planted map re-expressed in
/// the cropped frame (equal to t_true for pure translations).
[[nodiscard]] inline SimulatedPair simulate_pair(const GrayImage& base, const AffineTransform& t_true,
                                                 const SimulationSpec& spec, std::uint64_t noise_seed) {
  spec.validate();
  const PixelRect region = common_valid_region(base.width(), base.height(), t_true);
  if (region.width < 64 || region.height < 64) {
    throw ParameterError("simulated pair leaves less than 64x64 valid pixels");
  }
  GrayImage warped = warp_affine(base, t_true, 0.0F);
  for (float& v : warped.pixels()) v = apply_modality(v, spec.modality, spec.gamma);
  GrayImage v_img = base;

  if (spec.noise_sigma > 0.0) {
    std::mt19937_64 rng_v(noise_seed * 2 + 1);
    std::mt19937_64 rng_ir(noise_seed * 2 + 2);
    std::normal_distribution<double> n(0.0, spec.noise_sigma);
    for (float& v : v_img.pixels()) v = static_cast<float>(std::clamp(v + n(rng_v), 0.0, 1.0));
    n.reset();
    for (float& v : warped.pixels()) v = static_cast<float>(std::clamp(v + n(rng_ir), 0.0, 1.0));
  }
  const AffineTransform to_crop = AffineTransform::translation(-region.x, -region.y);
  const AffineTransform from_crop = AffineTransform::translation(region.x, region.y);
  return {crop(v_img, region), crop(warped, region), region, to_crop.compose(t_true).compose(from_crop)};
}

[[nodiscard]] inline double translation_error(const AffineTransform& est, const AffineTransform& truth) noexcept {
  return std::hypot(est.tx() - truth.tx(), est.ty() - truth.ty());
}

/// Exhaustive integer shift d in [-range, range]^2 maximizing the number of
/// pixels x with e_v(x) and e_ir(x + d). Ties go to the smallest |d|, then to
/// the first shift in (dy, dx) scan order.
[[nodiscard]] inline AffineTransform brute_force_translation(const EdgeMap& edge_v, const EdgeMap& edge_ir, int range) {
  if (range < 0) throw ParameterError("brute_force_translation: range must be >= 0");
  const int w = std::min(edge_v.e.width(), edge_ir.e.width());
  const int h = std::min(edge_v.e.height(), edge_ir.e.height());
  long best_count = -1;
  int best_dx = 0, best_dy = 0;
  for (int dy = -range; dy <= range; ++dy) {
    for (int dx = -range; dx <= range; ++dx) {
      long count = 0;
      const int ys = std::max(0, -dy), ye = std::min(h, h - dy);
      const int xs = std::max(0, -dx), xe = std::min(w, w - dx);
      for (int y = ys; y < ye; ++y) {
        const std::uint8_t* a = edge_v.e.row(y).data();
        const std::uint8_t* b = edge_ir.e.row(y + dy).data() + dx;
        for (int x = xs; x < xe; ++x) count += a[x] & b[x];
      }
      const bool better = count > best_count ||
                          (count == best_count && dx * dx + dy * dy < best_dx * best_dx + best_dy * best_dy);
      if (better) best_count = count, best_dx = dx, best_dy = dy;
    }
  }
  return AffineTransform::translation(best_dx, best_dy);
}

// ---------------------------------------------------------------- benchmark

struct TrialRow {
  int trial = 0;
  double scale = 1.0;
  double tx_true = 0.0;
  double ty_true = 0.0;
  double tx_est = 0.0;
  double ty_est = 0.0;
  double error_px = 0.0;
  double scale_est = 0.0;
  int support = 0;
  bool ok = false;
};

struct ScaleSummary {
  double scale = 1.0;
  int count = 0;
  int failures = 0;
  double mean_error = 0.0;
  double median_error = 0.0;
  double max_error = 0.0;
  double max_scale_error = 0.0;
};

struct AccuracyReport {
  std::vector<TrialRow> rows;
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
  int failures = 0;
  std::vector<ScaleSummary> per_scale;
};

struct RegistrarOutput {
  AffineTransform transform;
  int support = 0;
};

/// Registers one simulated pair. The ground truth is passed so test
/// harnesses can plug in an oracle; the real registrar ignores it.
using Registrar = std::function<RegistrarOutput(const GrayImage&, const GrayImage&, const AffineTransform&)>;

[[nodiscard]] inline Registrar pipeline_registrar(const RegistrationParams& params) {
  return [params](const GrayImage& v, const GrayImage& ir, const AffineTransform&) {
    const RegistrationResult r = register_images(v, ir, params);
    return RegistrarOutput{r.t3, r.support};
  };
}

namespace eval_detail {

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline void summarize(const std::vector<const TrialRow*>& rows, double& mean, double& median, double& max,
                      int& failures) {
  std::vector<double> errs;
  failures = 0;
  for (const TrialRow* r : rows) {
    if (r->ok) {
      errs.push_back(r->error_px);
    } else {
      ++failures;
    }
  }
  mean = 0.0;
  for (double e : errs) mean += e;
  mean = errs.empty() ? 0.0 : mean / static_cast<double>(errs.size());
  median = median_of(errs);
  max = errs.empty() ? 0.0 : *std::max_element(errs.begin(), errs.end());
}

}  // namespace eval_detail

/// Planted transform for one row: scale about the base image center, then a
/// uniform translation.
[[nodiscard]] inline AffineTransform planted_transform(int width, int height, double scale, double tx, double ty,
                                                       ModelKind kind) {
  const double cx = 0.5 * (width - 1), cy = 0.5 * (height - 1);
  const double ox = cx - scale * cx + tx;
  const double oy = cy - scale * cy + ty;
  if (kind == ModelKind::Translation && scale == 1.0) return AffineTransform::translation(ox, oy);
  return AffineTransform::similarity(scale, 0.0, ox, oy);
}

/// Trial i draws its planted motions from a generator seeded with seed + i;
/// base images are used round-robin.
[[nodiscard]] inline AccuracyReport run_benchmark(const std::vector<GrayImage>& bases, const SimulationSpec& spec,
                                                  const Registrar& registrar) {
  spec.validate();
  if (bases.empty()) throw ParameterError("run_benchmark needs at least one base image");
  AccuracyReport report;
  for (int trial = 0; trial < spec.trials; ++trial) {
    const GrayImage& base = bases[static_cast<std::size_t>(trial) % bases.size()];
    const std::uint64_t trial_seed = spec.rng_seed + static_cast<std::uint64_t>(trial);
    std::mt19937_64 rng(trial_seed);
    std::uniform_real_distribution<double> shift(-spec.translation_range, spec.translation_range);
    for (std::size_t si = 0; si < spec.scales.size(); ++si) {
      const double scale = spec.scales[si];
      const double tx = shift(rng);
      const double ty = shift(rng);
      TrialRow row;
      row.trial = trial;
      row.scale = scale;
      const AffineTransform planted =
          planted_transform(base.width(), base.height(), scale, tx, ty,
                            scale == 1.0 ? ModelKind::Translation : ModelKind::Similarity);
      row.tx_true = planted.tx();
      row.ty_true = planted.ty();
      try {
        const SimulatedPair pair = simulate_pair(base, planted, spec, trial_seed * 16 + si);
        const AffineTransform& truth = pair.truth;
        row.tx_true = truth.tx();
        row.ty_true = truth.ty();
        const RegistrarOutput est = registrar(pair.img_v, pair.img_ir, truth);
        row.tx_est = est.transform.tx();
        row.ty_est = est.transform.ty();
        row.scale_est = est.transform.scale();
        row.support = est.support;
        row.error_px = translation_error(est.transform, truth);
        row.ok = std::isfinite(row.error_px);
      } catch (const RegistrationError&) {
        row.ok = false;
      } catch (const DegenerateFitError&) {
        row.ok = false;
      }
      report.rows.push_back(row);
    }
  }

  std::vector<const TrialRow*> all;
  for (const TrialRow& r : report.rows) all.push_back(&r);
  eval_detail::summarize(all, report.mean, report.median, report.max, report.failures);

  for (double scale : spec.scales) {
    if (std::any_of(report.per_scale.begin(), report.per_scale.end(),
                    [&](const ScaleSummary& s) { return s.scale == scale; })) {
      continue;
    }
    std::vector<const TrialRow*> rows;
    for (const TrialRow& r : report.rows) {
      if (r.scale == scale) rows.push_back(&r);
    }
    ScaleSummary s;
    s.scale = scale;
    s.count = static_cast<int>(rows.size());
    eval_detail::summarize(rows, s.mean_error, s.median_error, s.max_error, s.failures);
    for (const TrialRow* r : rows) {
      if (r->ok) s.max_scale_error = std::max(s.max_scale_error, std::abs(r->scale_est - r->scale));
    }
    report.per_scale.push_back(s);
  }
  return report;
}

[[nodiscard]] inline AccuracyReport run_benchmark(const std::vector<GrayImage>& bases, const SimulationSpec& spec,
                                                  const RegistrationParams& params) {
  return run_benchmark(bases, spec, pipeline_registrar(params));
}

/// `trial,scale,tx_true,ty_true,tx_est,ty_est,error_px,support,status`, LF endings.
[[nodiscard]] inline std::string report_to_csv(const AccuracyReport& report) {
  std::string out = "trial,scale,tx_true,ty_true,tx_est,ty_est,error_px,support,status\n";
  char buf[320];
  for (const TrialRow& r : report.rows) {
    if (r.ok) {
      std::snprintf(buf, sizeof buf, "%d,%.4f,%.6f,%.6f,%.6f,%.6f,%.6f,%d,ok\n", r.trial, r.scale, r.tx_true,
                    r.ty_true, r.tx_est, r.ty_est, r.error_px, r.support);
    } else {
      std::snprintf(buf, sizeof buf, "%d,%.4f,%.6f,%.6f,nan,nan,nan,0,failed\n", r.trial, r.scale, r.tx_true,
                    r.ty_true);
    }
    out += buf;
  }
  return out;
}

/// All PNG/PGM/PPM files in `dir`, sorted by file name, as gray images.
[[nodiscard]] inline std::vector<GrayImage> load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError(dir, "not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = io_detail::lower_extension(entry.path().string());
    if (ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<GrayImage> out;
  for (const auto& f : files) out.push_back(read_gray(f.string()));
  if (out.empty()) throw IoError(dir, "dataset directory contains no images");
  return out;
}

}  // namespace msreg
