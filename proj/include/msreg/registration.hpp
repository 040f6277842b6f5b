#pragma once

// Cross-spectral registration: descriptor matching, least-squares model
// fitting, and three rounds of RANSAC with progressively tighter gating.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "msreg/descriptor.hpp"
#include "msreg/edges.hpp"
#include "msreg/error.hpp"
#include "msreg/features.hpp"
#include "msreg/transform.hpp"

namespace msreg {

struct Match {
  std::size_t p = 0;  // index into the visible-band descriptors
  std::size_t q = 0;  // index into the infrared-band descriptors
  double score = 0.0;

  friend bool operator==(const Match&, const Match&) = default;
};

/// Keypoint positions that Match indices refer to.
struct CornerSets {
  std::vector<Point2> v;
  std::vector<Point2> ir;
};

struct RansacConfig {
  ModelKind model_kind = ModelKind::Translation;
  int samples_per_iter = 1000;
  double rd1 = 5.0;
  double rd2 = 2.0;
  double md1 = 15.0;
  double md2 = 5.0;
  std::uint64_t rng_seed = 0x5eed;

  void validate() const {
    if (samples_per_iter < 1) throw ParameterError("ransac.samples_per_iter must be >= 1");
    if (!(rd1 > 0.0)) throw ParameterError("ransac.rd1 must be positive");
    if (!(rd2 > 0.0)) throw ParameterError("ransac.rd2 must be positive");
    if (!(md1 > 0.0)) throw ParameterError("ransac.md1 must be positive");
    if (!(md2 > 0.0)) throw ParameterError("ransac.md2 must be positive");
    if (!(rd2 < rd1)) throw ParameterError("ransac.rd2 must be smaller than ransac.rd1");
    if (!(md2 < md1)) throw ParameterError("ransac.md2 must be smaller than ransac.md1");
  }
};

struct DescriptorConfig {
  int w2 = 31;
  int k1 = 16;
  MatchOptions matching{};

  void validate() const {
    if (w2 < 5 || w2 % 2 == 0) throw ParameterError("descriptor.w2 must be odd and >= 5");
    if (k1 < 4 || k1 > 255) throw ParameterError("descriptor.k1 must be in [4, 255]");
  }
};

// ---------------------------------------------------------------- matching

/// One best match per visible descriptor (when any), sorted by descending
/// score; equal scores keep ascending p order.
[[nodiscard]] inline std::vector<Match> match_all(std::span<const EdgeDescriptor> desc_v,
                                                  std::span<const EdgeDescriptor> desc_ir,
                                                  const std::optional<MatchGate>& gate = std::nullopt,
                                                  const MatchOptions& opts = {}) {
  if (desc_v.empty() || desc_ir.empty()) throw ParameterError("match_all needs non-empty descriptor lists");
  std::vector<Match> out;
  for (std::size_t p = 0; p < desc_v.size(); ++p) {
    if (auto best = best_match(desc_v[p], desc_ir, gate, opts)) out.push_back({p, best->index, best->score});
  }
  std::stable_sort(out.begin(), out.end(), [](const Match& a, const Match& b) { return a.score > b.score; });
  return out;
}

[[nodiscard]] inline double residual(const AffineTransform& t, const Match& m, const CornerSets& corners) {
  return distance(t.apply(corners.v.at(m.p)), corners.ir.at(m.q));
}

// ---------------------------------------------------------------- fitting

namespace registration_detail {

template <int N>
struct NormalSystem {
  std::array<double, N * N> a{};
  std::array<double, N> b{};

  void add_row(const std::array<double, N>& row, double rhs) {
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) a[i * N + j] += row[i] * row[j];
      b[i] += row[i] * rhs;
    }
  }

  // Gaussian elimination with partial pivoting. Rejects systems whose pivot
  // magnitudes span more than 1e12 (a cheap condition estimate).
  std::array<double, N> solve() const {
    auto m = a;
    auto r = b;
    double max_pivot = 0.0;
    double min_pivot = std::numeric_limits<double>::infinity();
    for (int c = 0; c < N; ++c) {
      int piv = c;
      for (int i = c + 1; i < N; ++i) {
        if (std::abs(m[i * N + c]) > std::abs(m[piv * N + c])) piv = i;
      }
      if (piv != c) {
        for (int j = 0; j < N; ++j) std::swap(m[c * N + j], m[piv * N + j]);
        std::swap(r[c], r[piv]);
      }
      const double p = m[c * N + c];
      max_pivot = std::max(max_pivot, std::abs(p));
      min_pivot = std::min(min_pivot, std::abs(p));
      if (p == 0.0) throw DegenerateFitError("singular normal matrix");
      for (int i = c + 1; i < N; ++i) {
        const double f = m[i * N + c] / p;
        if (f == 0.0) continue;
        for (int j = c; j < N; ++j) m[i * N + j] -= f * m[c * N + j];
        r[i] -= f * r[c];
      }
    }
    if (!(max_pivot / min_pivot <= 1e12)) throw DegenerateFitError("normal matrix is ill-conditioned");
    std::array<double, N> x{};
    for (int i = N - 1; i >= 0; --i) {
      double s = r[i];
      for (int j = i + 1; j < N; ++j) s -= m[i * N + j] * x[j];
      x[i] = s / m[i * N + i];
    }
    return x;
  }
};

}  // namespace registration_detail

/// Least-squares fit of `kind` to point pairs src -> dst. Coordinates are
/// centered on their centroids before solving.
[[nodiscard]] inline AffineTransform fit_least_squares(std::span<const Point2> src, std::span<const Point2> dst,
                                                       ModelKind kind) {
  if (src.size() != dst.size()) throw ParameterError("fit_least_squares: point lists differ in length");
  const auto need = static_cast<std::size_t>(minimal_sample_size(kind));
  if (src.size() < need) {
    throw DegenerateFitError("need at least " + std::to_string(need) + " correspondences, got " +
                             std::to_string(src.size()));
  }
  const double n = static_cast<double>(src.size());
  Point2 cs, cd;
  for (std::size_t i = 0; i < src.size(); ++i) {
    cs.x += src[i].x, cs.y += src[i].y;
    cd.x += dst[i].x, cd.y += dst[i].y;
  }
  cs = {cs.x / n, cs.y / n};
  cd = {cd.x / n, cd.y / n};

  // Linear part A and translation t' in centered coordinates.
  double a11 = 1, a12 = 0, a21 = 0, a22 = 1, t1 = 0, t2 = 0;
  switch (kind) {
    case ModelKind::Translation:
      break;  // centroid difference is the least-squares translation
    case ModelKind::Similarity: {
      registration_detail::NormalSystem<4> sys;  // (a, b, tx, ty)
      for (std::size_t i = 0; i < src.size(); ++i) {
        const double x = src[i].x - cs.x, y = src[i].y - cs.y;
        sys.add_row({x, -y, 1, 0}, dst[i].x - cd.x);
        sys.add_row({y, x, 0, 1}, dst[i].y - cd.y);
      }
      const auto s = sys.solve();
      a11 = s[0], a12 = -s[1], a21 = s[1], a22 = s[0], t1 = s[2], t2 = s[3];
      break;
    }
    case ModelKind::Affine: {
      registration_detail::NormalSystem<6> sys;  // (a11, a12, tx, a21, a22, ty)
      for (std::size_t i = 0; i < src.size(); ++i) {
        const double x = src[i].x - cs.x, y = src[i].y - cs.y;
        sys.add_row({x, y, 1, 0, 0, 0}, dst[i].x - cd.x);
        sys.add_row({0, 0, 0, x, y, 1}, dst[i].y - cd.y);
      }
      const auto s = sys.solve();
      a11 = s[0], a12 = s[1], t1 = s[2], a21 = s[3], a22 = s[4], t2 = s[5];
      break;
    }
  }
  const double tx = t1 + cd.x - (a11 * cs.x + a12 * cs.y);
  const double ty = t2 + cd.y - (a21 * cs.x + a22 * cs.y);
  if (kind == ModelKind::Translation) return AffineTransform::translation(tx, ty);
  if (kind == ModelKind::Similarity) return AffineTransform::similarity(a11, a21, tx, ty);
  return AffineTransform::affine(a11, a12, tx, a21, a22, ty);
}

[[nodiscard]] inline AffineTransform fit_least_squares(std::span<const Match> matches, const CornerSets& corners,
                                                       ModelKind kind) {
  std::vector<Point2> src, dst;
  src.reserve(matches.size());
  dst.reserve(matches.size());
  for (const Match& m : matches) {
    src.push_back(corners.v.at(m.p));
    dst.push_back(corners.ir.at(m.q));
  }
  return fit_least_squares(src, dst, kind);
}

// ---------------------------------------------------------------- RANSAC

struct RansacResult {
  AffineTransform transform;
  int support = 0;
  std::vector<std::size_t> inliers;  // indices into the match list
  int best_hypothesis_support = 0;   // support of the winning sampled hypothesis
  int best_hypothesis_index = -1;
  int valid_hypotheses = 0;
};

namespace registration_detail {

inline std::vector<std::size_t> inliers_of(const AffineTransform& t, std::span<const Match> matches,
                                           const CornerSets& corners, double ransac_distance) {
  std::vector<std::size_t> in;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    if (residual(t, matches[i], corners) <= ransac_distance) in.push_back(i);
  }
  return in;
}

inline std::vector<Match> select(std::span<const Match> matches, const std::vector<std::size_t>& idx) {
  std::vector<Match> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(matches[i]);
  return out;
}

}  // namespace registration_detail

/// Samples minimal subsets, keeps the hypothesis with the largest support
/// (first one on ties), then refits it on its inliers. The refit is kept only
/// if it does not lose support.
[[nodiscard]] inline RansacResult ransac_once(std::span<const Match> matches, const CornerSets& corners,
                                              const RansacConfig& cfg, double ransac_distance,
                                              std::uint64_t seed) {
  using registration_detail::inliers_of;
  const auto sample_size = static_cast<std::size_t>(minimal_sample_size(cfg.model_kind));
  if (matches.size() < sample_size) {
    throw RegistrationError("ransac", "need at least " + std::to_string(sample_size) + " matches, got " +
                                          std::to_string(matches.size()));
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, matches.size() - 1);

  RansacResult best;
  std::vector<std::size_t> subset;
  std::vector<Match> sample;
  for (int s = 0; s < cfg.samples_per_iter; ++s) {
    subset.clear();
    while (subset.size() < sample_size) {
      const std::size_t i = pick(rng);
      if (std::find(subset.begin(), subset.end(), i) == subset.end()) subset.push_back(i);
    }
    sample = registration_detail::select(matches, subset);
    AffineTransform t;
    try {
      t = fit_least_squares(sample, corners, cfg.model_kind);
    } catch (const DegenerateFitError&) {
      continue;
    }
    ++best.valid_hypotheses;
    int support = 0;
    for (const Match& m : matches) support += residual(t, m, corners) <= ransac_distance ? 1 : 0;
    if (best.best_hypothesis_index < 0 || support > best.best_hypothesis_support) {
      best.best_hypothesis_support = support;
      best.best_hypothesis_index = s;
      best.transform = t;
    }
  }
  if (best.valid_hypotheses == 0) throw RegistrationError("ransac", "every sampled subset was degenerate");

  best.inliers = inliers_of(best.transform, matches, corners, ransac_distance);
  best.support = static_cast<int>(best.inliers.size());

  // Refit on the inlier set until it stops changing.
  AffineTransform refit = best.transform;
  std::vector<std::size_t> refit_inliers = best.inliers;
  for (int round = 0; round < 5 && refit_inliers.size() >= sample_size; ++round) {
    try {
      refit = fit_least_squares(registration_detail::select(matches, refit_inliers), corners, cfg.model_kind);
    } catch (const DegenerateFitError&) {
      break;
    }
    auto next = inliers_of(refit, matches, corners, ransac_distance);
    const bool stable = next == refit_inliers;
    refit_inliers = std::move(next);
    if (refit_inliers.size() >= best.inliers.size()) {
      best.transform = refit;
      best.inliers = refit_inliers;
      best.support = static_cast<int>(refit_inliers.size());
    }
    if (stable) break;
  }
  return best;
}

// ---------------------------------------------------------------- pipeline

struct IterationRecord {
  AffineTransform transform;
  int support = 0;
  std::size_t match_count = 0;
};

struct RegistrationResult {
  AffineTransform t3;
  std::vector<Match> inliers;
  int support = 0;
  std::array<IterationRecord, 3> per_iteration{};
  std::vector<Match> final_matches;
  CornerSets corners;
  // The ungated first round or the final round agreed with fewer than 10% of
  // the ungated matches. Later rounds only see matches near the previous
  // estimate, so their support alone overstates agreement on unrelated images.
  bool low_confidence = false;
};

struct RegistrationParams {
  HarrisConfig harris{};
  CannyConfig canny{};
  DescriptorConfig descriptor{};
  RansacConfig ransac{};

  void validate() const {
    harris.validate();
    canny.validate();
    descriptor.validate();
    ransac.validate();
  }
};

/// Corners, edges and descriptors of one band.
struct BandFeatures {
  std::vector<Corner> corners;
  EdgeMap edges;
  std::vector<EdgeDescriptor> descriptors;
};

[[nodiscard]] inline BandFeatures extract_features(const GrayImage& img, const RegistrationParams& params) {
  BandFeatures f;
  f.corners = detect_corners(img, params.harris);
  f.edges = canny(img, params.canny, params.descriptor.k1);
  f.descriptors = build_descriptors(f.corners, f.edges, params.descriptor.w2);
  return f;
}

/// Finds T mapping visible-band pixel coordinates onto infrared-band ones.
/// Round 1 matches ungated and accepts at rd1; round 2 gates matches by
/// (T1, md1) and accepts at rd1; round 3 gates by (T2, md2) and accepts at rd2.
[[nodiscard]] inline RegistrationResult register_images(const GrayImage& img_v, const GrayImage& img_ir,
                                                        const RegistrationParams& params = {}) {
  params.validate();
  constexpr int kMinSide = 64;
  if (img_v.width() < kMinSide || img_v.height() < kMinSide || img_ir.width() < kMinSide ||
      img_ir.height() < kMinSide) {
    throw ParameterError("register needs images of at least 64x64");
  }
  const BandFeatures fv = extract_features(img_v, params);
  const BandFeatures fir = extract_features(img_ir, params);
  if (fv.descriptors.size() < 4) throw RegistrationError("descriptors", "fewer than 4 usable corners in visible band");
  if (fir.descriptors.size() < 4) throw RegistrationError("descriptors", "fewer than 4 usable corners in infrared band");

  RegistrationResult result;
  for (const auto& d : fv.descriptors) result.corners.v.push_back(d.position());
  for (const auto& d : fir.descriptors) result.corners.ir.push_back(d.position());

  const auto& rc = params.ransac;
  const auto min_matches = static_cast<std::size_t>(minimal_sample_size(rc.model_kind));
  const MatchOptions& opts = params.descriptor.matching;

  std::optional<MatchGate> gate;
  const std::array<double, 3> ransac_distance{rc.rd1, rc.rd1, rc.rd2};
  const std::array<double, 3> match_distance{0.0, rc.md1, rc.md2};
  std::size_t ungated_matches = 0;
  RansacResult round;
  std::vector<Match> matches;
  for (int it = 0; it < 3; ++it) {
    const std::string stage = "iteration " + std::to_string(it + 1);
    if (it > 0) gate = MatchGate{result.per_iteration[it - 1].transform, match_distance[it]};
    matches = match_all(fv.descriptors, fir.descriptors, gate, opts);
    if (it == 0) ungated_matches = matches.size();
    if (matches.size() < min_matches) {
      throw RegistrationError(stage, "only " + std::to_string(matches.size()) + " matches");
    }
    try {
      round = ransac_once(matches, result.corners, rc, ransac_distance[it], rc.rng_seed + static_cast<std::uint64_t>(it));
    } catch (const RegistrationError& e) {
      throw RegistrationError(stage, e.what());
    }
    result.per_iteration[it] = {round.transform, round.support, matches.size()};
  }

  result.t3 = round.transform;
  result.support = round.support;
  result.inliers = registration_detail::select(matches, round.inliers);
  result.final_matches = std::move(matches);
  const double floor = 0.1 * static_cast<double>(ungated_matches);
  result.low_confidence = result.per_iteration[0].support < floor || result.support < floor;
  return result;
}

}  // namespace msreg
