#pragma once

// Edge descriptors: a w2 x w2 window of the Canny raster and of the quantized
// gradient directions around a corner, compared by direction-gated edge
// overlap normalized by the candidate's edge count.

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "msreg/edges.hpp"
#include "msreg/features.hpp"
#include "msreg/transform.hpp"

namespace msreg {

/// How two direction bins are compared.
enum class SameGradRule {
  Circular,  // min(d, k1 - d) <= 1, so bins 0 and k1-1 are neighbours
  Literal,   // |gp - gq| <= 1 without wrap-around
};

/// Which contrast polarity the matcher accepts.
enum class Polarity {
  Signed,  // directions compared as-is
  Either,  // also try the candidate with every direction rotated by half a turn
};

[[nodiscard]] constexpr bool same_grad(int gp, int gq, int k1, SameGradRule rule = SameGradRule::Circular) noexcept {
  const int d = gp > gq ? gp - gq : gq - gp;
  if (rule == SameGradRule::Literal) return d <= 1;
  return std::min(d, k1 - d) <= 1;
}

class EdgeDescriptor {
 public:
  EdgeDescriptor() = default;

  /// Windows are row-major, `w2 * w2` long, centered on (x, y).
  EdgeDescriptor(int x, int y, int w2, int k1, std::vector<std::uint8_t> e, std::vector<std::uint8_t> g)
      : x_(x), y_(y), w2_(w2), k1_(k1), e_(std::move(e)), g_(std::move(g)) {
    const auto n = static_cast<std::size_t>(w2) * static_cast<std::size_t>(w2);
    if (w2 < 1 || w2 % 2 == 0) throw ParameterError("descriptor window must be odd");
    if (k1 < 2 || k1 > 255) throw ParameterError("direction bin count must be in [2, 255]");
    if (e_.size() != n || g_.size() != n) throw ParameterError("descriptor windows must be w2*w2");
    words_ = (n + 63) / 64;
    planes_.assign(static_cast<std::size_t>(k1) * words_, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (g_[i] >= k1) throw ParameterError("direction bin out of range");
      if (e_[i] > 1) throw ParameterError("edge window must be binary");
      if (e_[i] != 0) {
        ++edge_count_;
        planes_[g_[i] * words_ + i / 64] |= std::uint64_t{1} << (i % 64);
      }
    }
  }

  [[nodiscard]] int x() const noexcept { return x_; }
  [[nodiscard]] int y() const noexcept { return y_; }
  [[nodiscard]] Point2 position() const noexcept { return {static_cast<double>(x_), static_cast<double>(y_)}; }
  [[nodiscard]] int window() const noexcept { return w2_; }
  [[nodiscard]] int bins() const noexcept { return k1_; }
  [[nodiscard]] int edge_count() const noexcept { return edge_count_; }
  [[nodiscard]] std::span<const std::uint8_t> edges() const noexcept { return e_; }
  [[nodiscard]] std::span<const std::uint8_t> directions() const noexcept { return g_; }

  /// Edge pixels whose direction is `bin`, packed 64 per word.
  [[nodiscard]] std::span<const std::uint64_t> plane(int bin) const noexcept {
    return {planes_.data() + static_cast<std::size_t>(bin) * words_, words_};
  }
  [[nodiscard]] std::size_t words() const noexcept { return words_; }

 private:
  int x_ = 0;
  int y_ = 0;
  int w2_ = 0;
  int k1_ = 16;
  int edge_count_ = 0;
  std::vector<std::uint8_t> e_;
  std::vector<std::uint8_t> g_;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> planes_;
};

/// Copies the windows out of a whole-image edge map. Corners closer than
/// w2/2 to the border are rejected.
[[nodiscard]] inline std::optional<EdgeDescriptor> build_descriptor(const Corner& corner, const EdgeMap& map, int w2) {
  if (w2 < 5 || w2 % 2 == 0) throw ParameterError("descriptor window w2 must be odd and >= 5");
  const int r = w2 / 2;
  const int w = map.e.width();
  const int h = map.e.height();
  if (corner.x - r < 0 || corner.y - r < 0 || corner.x + r >= w || corner.y + r >= h) return std::nullopt;
  const auto n = static_cast<std::size_t>(w2) * static_cast<std::size_t>(w2);
  std::vector<std::uint8_t> e(n), g(n);
  std::size_t i = 0;
  for (int v = corner.y - r; v <= corner.y + r; ++v) {
    for (int u = corner.x - r; u <= corner.x + r; ++u, ++i) {
      e[i] = map.e.at(u, v);
      g[i] = map.g.at(u, v);
    }
  }
  return EdgeDescriptor(corner.x, corner.y, w2, map.k1, std::move(e), std::move(g));
}

[[nodiscard]] inline std::vector<EdgeDescriptor> build_descriptors(const std::vector<Corner>& corners,
                                                                   const EdgeMap& map, int w2) {
  std::vector<EdgeDescriptor> out;
  out.reserve(corners.size());
  for (const Corner& c : corners) {
    if (auto d = build_descriptor(c, map, w2)) out.push_back(std::move(*d));
  }
  return out;
}

namespace descriptor_detail {

inline void check_compatible(const EdgeDescriptor& dp, const EdgeDescriptor& dq) {
  if (dp.window() != dq.window()) throw ParameterError("descriptors have different window sizes");
  if (dp.bins() != dq.bins()) throw ParameterError("descriptors have different direction bin counts");
}

// Count of pixels that are edges in both windows with directions within one
// bin, after rotating q's directions by `shift` bins. Needs k1 >= 4 so the
// three neighbouring bins are distinct.
inline int gated_overlap(const EdgeDescriptor& dp, const EdgeDescriptor& dq, SameGradRule rule, int shift) {
  const int k1 = dp.bins();
  const std::size_t words = dp.words();
  int total = 0;
  for (int b = 0; b < k1; ++b) {
    auto p = dp.plane(b);
    // q pixels whose shifted bin is b-1, b, or b+1; shifted bin s comes from q's (s - shift) mod k1.
    for (int delta = -1; delta <= 1; ++delta) {
      const int s = b + delta;
      if (rule == SameGradRule::Literal && (s < 0 || s >= k1)) continue;
      const int src = ((s - shift) % k1 + 2 * k1) % k1;
      auto q = dq.plane(src);
      for (std::size_t i = 0; i < words; ++i) total += std::popcount(p[i] & q[i]);
    }
  }
  return total;
}

}  // namespace descriptor_detail

namespace descriptor_detail {

// num / sqrt(den) written as sqrt(num^2 / den): both integers are small
// enough for the square and quotient to be exact when num == den, so a
// descriptor scored against itself gives exactly sqrt(edge_count).
inline double normalized(int num, int den) {
  return std::sqrt(static_cast<double>(num) * num / static_cast<double>(den));
}

}  // namespace descriptor_detail

/// Edge pixels common to both windows whose directions agree within one bin,
/// divided by sqrt of q's edge count. Zero when q has no edges.
[[nodiscard]] inline double similarity(const EdgeDescriptor& dp, const EdgeDescriptor& dq,
                                       SameGradRule rule = SameGradRule::Circular) {
  descriptor_detail::check_compatible(dp, dq);
  if (dq.edge_count() == 0) return 0.0;
  int num = 0;
  if (dp.bins() <= 3) {
    auto ep = dp.edges(), eq = dq.edges(), gp = dp.directions(), gq = dq.directions();
    for (std::size_t i = 0; i < ep.size(); ++i) {
      num += (ep[i] != 0 && eq[i] != 0 && same_grad(gp[i], gq[i], dp.bins(), rule)) ? 1 : 0;
    }
  } else {
    num = descriptor_detail::gated_overlap(dp, dq, rule, 0);
  }
  return descriptor_detail::normalized(num, dq.edge_count());
}

/// Similarity under the given polarity policy. With `Either`, q is also
/// scored with its directions rotated by k1/2 and the larger value is kept.
[[nodiscard]] inline double match_score(const EdgeDescriptor& dp, const EdgeDescriptor& dq, SameGradRule rule,
                                        Polarity polarity) {
  const double direct = similarity(dp, dq, rule);
  if (polarity == Polarity::Signed || dq.edge_count() == 0 || dp.bins() % 2 != 0 || dp.bins() <= 3) return direct;
  const int flipped = descriptor_detail::gated_overlap(dp, dq, rule, dp.bins() / 2);
  return std::max(direct, descriptor_detail::normalized(flipped, dq.edge_count()));
}

struct MatchGate {
  AffineTransform transform;
  double max_distance = 0.0;
};

struct MatchOptions {
  SameGradRule rule = SameGradRule::Circular;
  Polarity polarity = Polarity::Either;
};

struct BestMatch {
  std::size_t index = 0;
  double score = 0.0;
};

/// Highest-scoring candidate among those within the optional geometric gate.
/// Ties go to the smaller index; zero scores are not matches.
[[nodiscard]] inline std::optional<BestMatch> best_match(const EdgeDescriptor& dp,
                                                         std::span<const EdgeDescriptor> candidates,
                                                         const std::optional<MatchGate>& gate = std::nullopt,
                                                         const MatchOptions& opts = {}) {
  if (candidates.empty()) throw ParameterError("best_match needs at least one candidate");
  std::optional<Point2> predicted;
  if (gate) predicted = gate->transform.apply(dp.position());
  std::optional<BestMatch> best;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    const EdgeDescriptor& dq = candidates[j];
    if (predicted && !(distance(*predicted, dq.position()) <= gate->max_distance)) continue;
    const double s = match_score(dp, dq, opts.rule, opts.polarity);
    if (s > 0.0 && (!best || s > best->score)) best = BestMatch{j, s};
  }
  return best;
}

}  // namespace msreg
