#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "msreg/descriptor.hpp"
#include "msreg/eval.hpp"
#include "support.hpp"

using msreg::EdgeDescriptor;
using msreg::SameGradRule;

namespace {

using Bytes = std::vector<std::uint8_t>;

// Direction-gated edge overlap over sqrt(q edge count), evaluated pixel by pixel.
double similarity_oracle(const EdgeDescriptor& p, const EdgeDescriptor& q, bool circular) {
  int num = 0, den = 0;
  const int k1 = p.bins();
  for (std::size_t i = 0; i < p.edges().size(); ++i) {
    den += q.edges()[i];
    const int d = std::abs(int(p.directions()[i]) - int(q.directions()[i]));
    const bool same = circular ? std::min(d, k1 - d) <= 1 : d % 16 <= 1;
    num += p.edges()[i] && q.edges()[i] && same;
  }
  return den == 0 ? 0.0 : num / std::sqrt(double(den));
}

EdgeDescriptor random_descriptor(std::mt19937_64& rng, int w2, int k1, double density, int x = 0, int y = 0) {
  const auto n = static_cast<std::size_t>(w2 * w2);
  Bytes e(n), g(n);
  std::bernoulli_distribution edge(density);
  std::uniform_int_distribution<int> bin(0, k1 - 1);
  for (std::size_t i = 0; i < n; ++i) {
    e[i] = edge(rng);
    g[i] = static_cast<std::uint8_t>(bin(rng));
  }
  return {x, y, w2, k1, e, g};
}

// 5x5 window whose middle row holds five edge pixels with direction `bin`.
EdgeDescriptor row_descriptor(int bin, int row = 2, int x = 0, int y = 0) {
  Bytes e(25, 0), g(25, 0);
  for (int i = 0; i < 5; ++i) {
    e[static_cast<std::size_t>(row * 5 + i)] = 1;
    g[static_cast<std::size_t>(row * 5 + i)] = static_cast<std::uint8_t>(bin);
  }
  return {x, y, 5, 16, e, g};
}

EdgeDescriptor with_directions(const EdgeDescriptor& d, int shift) {
  Bytes e(d.edges().begin(), d.edges().end()), g(d.directions().begin(), d.directions().end());
  for (auto& v : g) v = static_cast<std::uint8_t>((v + shift) % d.bins());
  return {d.x(), d.y(), d.window(), d.bins(), e, g};
}

}  // namespace

TEST(SameGrad, Examples) {
  EXPECT_TRUE(msreg::same_grad(3, 3, 16, SameGradRule::Circular));
  EXPECT_TRUE(msreg::same_grad(0, 15, 16, SameGradRule::Circular));
  EXPECT_FALSE(msreg::same_grad(0, 15, 16, SameGradRule::Literal));
  EXPECT_FALSE(msreg::same_grad(2, 7, 16, SameGradRule::Circular));
  EXPECT_TRUE(msreg::same_grad(4, 5, 16, SameGradRule::Literal));
  EXPECT_TRUE(msreg::same_grad(15, 14, 16, SameGradRule::Literal));
}

TEST(BuildDescriptor, AllEdgeRasterCenter) {
  msreg::EdgeMap map{msreg::Image<std::uint8_t>(11, 11, 1), msreg::Image<std::uint8_t>(11, 11, 3), 16};
  const auto d = msreg::build_descriptor({5, 5, 1.0}, map, 5);
  ASSERT_TRUE(d.has_value());
  EXPECT_EQ(d->edge_count(), 25);
  EXPECT_EQ(d->window(), 5);
  for (auto v : d->directions()) EXPECT_EQ(v, 3);
}

TEST(BuildDescriptor, BorderCornerRejected) {
  msreg::EdgeMap map{msreg::Image<std::uint8_t>(100, 100, 1), msreg::Image<std::uint8_t>(100, 100, 0), 16};
  EXPECT_FALSE(msreg::build_descriptor({1, 1, 1.0}, map, 31).has_value());
  EXPECT_FALSE(msreg::build_descriptor({85, 50, 1.0}, map, 31).has_value());
  EXPECT_TRUE(msreg::build_descriptor({15, 15, 1.0}, map, 31).has_value());
  EXPECT_TRUE(msreg::build_descriptor({84, 84, 1.0}, map, 31).has_value());
  const auto all = msreg::build_descriptors({{1, 1, 2.0}, {50, 50, 1.0}}, map, 31);
  ASSERT_EQ(all.size(), 1U);
  EXPECT_EQ(all[0].x(), 50);
}

TEST(BuildDescriptor, WindowMatchesLocalCanny) {
  // Every straight edge has the same contrast, so the local run sees the same
  // maximum gradient as the global one and thresholds agree.
  const auto img = testing_support::rect_image(96, 96, 40, 40, 70, 70, 0.2F, 0.8F);
  const auto map = msreg::canny(img, {});
  const int w2 = 31, pad = 8, r = w2 / 2, margin = 4;
  const msreg::Corner c{40, 40, 1.0};
  const auto d = msreg::build_descriptor(c, map, w2);
  ASSERT_TRUE(d.has_value());
  EXPECT_GT(d->edge_count(), 20);
  const msreg::PixelRect rect{c.x - r - pad, c.y - r - pad, w2 + 2 * pad, w2 + 2 * pad};
  msreg::GrayImage sub(rect.width, rect.height);
  for (int y = 0; y < rect.height; ++y) {
    for (int x = 0; x < rect.width; ++x) sub.at(x, y) = img.at(rect.x + x, rect.y + y);
  }
  const auto local = msreg::canny(sub, {});
  for (int y = margin; y < w2 - margin; ++y) {
    for (int x = margin; x < w2 - margin; ++x) {
      const auto i = static_cast<std::size_t>(y * w2 + x);
      EXPECT_EQ(d->edges()[i], local.e.at(x + pad, y + pad)) << x << "," << y;
      EXPECT_EQ(d->directions()[i], local.g.at(x + pad, y + pad));
    }
  }
}

TEST(BuildDescriptor, Validation) {
  EXPECT_THROW(EdgeDescriptor(0, 0, 4, 16, Bytes(16), Bytes(16)), msreg::ParameterError);
  EXPECT_THROW(EdgeDescriptor(0, 0, 5, 16, Bytes(24), Bytes(25)), msreg::ParameterError);
  Bytes g(25, 0);
  g[3] = 16;
  EXPECT_THROW(EdgeDescriptor(0, 0, 5, 16, Bytes(25), g), msreg::ParameterError);
}

TEST(Similarity, SelfIsSqrtEdgeCount) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto d = random_descriptor(rng, 31, 16, 0.05 + 0.004 * i);
    EXPECT_EQ(msreg::similarity(d, d), std::sqrt(static_cast<double>(d.edge_count())));
  }
}

TEST(Similarity, DisjointIsZero) {
  EXPECT_EQ(msreg::similarity(row_descriptor(4, 1), row_descriptor(4, 3)), 0.0);
}

TEST(Similarity, WithinToleranceRow) {
  EXPECT_DOUBLE_EQ(msreg::similarity(row_descriptor(4), row_descriptor(5)), std::sqrt(5.0));
  EXPECT_EQ(msreg::similarity(row_descriptor(4), row_descriptor(6)), 0.0);
  EXPECT_DOUBLE_EQ(msreg::similarity(row_descriptor(0), row_descriptor(15)), std::sqrt(5.0));
  EXPECT_EQ(msreg::similarity(row_descriptor(0), row_descriptor(15), SameGradRule::Literal), 0.0);
}

TEST(Similarity, EmptyDenominatorIsZero) {
  const EdgeDescriptor empty(0, 0, 5, 16, Bytes(25, 0), Bytes(25, 0));
  EXPECT_EQ(msreg::similarity(row_descriptor(4), empty), 0.0);
  EXPECT_EQ(msreg::similarity(empty, row_descriptor(4)), 0.0);
}

TEST(Similarity, DenominatorUsesOnlyQ) {
  // p: 5 edge pixels; q: the same 5 plus 15 more elsewhere.
  Bytes e(25, 0), g(25, 4);
  for (std::size_t i = 0; i < 20; ++i) e[i] = 1;
  const EdgeDescriptor q(0, 0, 5, 16, e, g);
  const auto p = row_descriptor(4, 0);
  EXPECT_DOUBLE_EQ(msreg::similarity(p, q), 5.0 / std::sqrt(20.0));
  EXPECT_DOUBLE_EQ(msreg::similarity(q, p), 5.0 / std::sqrt(5.0));
  EXPECT_NE(msreg::similarity(p, q), msreg::similarity(q, p));
}

TEST(Similarity, MatchesDirectEvaluation) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const int w2 = 5 + 2 * (i % 14);
    const int k1 = (i % 3 == 0) ? 12 : 16;
    const auto p = random_descriptor(rng, w2, k1, 0.3);
    const auto q = random_descriptor(rng, w2, k1, 0.3);
    EXPECT_DOUBLE_EQ(msreg::similarity(p, q), similarity_oracle(p, q, true));
    if (k1 == 16) {
      EXPECT_DOUBLE_EQ(msreg::similarity(p, q, SameGradRule::Literal), similarity_oracle(p, q, false));
    }
  }
}

TEST(Similarity, BoundedByNumeratorLimits) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto p = random_descriptor(rng, 15, 16, 0.5);
    const auto q = random_descriptor(rng, 15, 16, 0.2);
    const double s = msreg::similarity(p, q);
    EXPECT_LE(s * std::sqrt(double(q.edge_count())), std::min(p.edge_count(), q.edge_count()) + 1e-9);
  }
}

TEST(Similarity, OppositeDirectionsDoNotMatch) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const auto p = random_descriptor(rng, 21, 16, 0.3);
    EXPECT_EQ(msreg::similarity(p, with_directions(p, 8)), 0.0);
  }
}

TEST(Similarity, MismatchedWindowsThrow) {
  std::mt19937_64 rng(5);
  EXPECT_THROW((void)msreg::similarity(random_descriptor(rng, 5, 16, 0.5), random_descriptor(rng, 7, 16, 0.5)),
               msreg::ParameterError);
}

TEST(MatchScore, EitherPolarityTakesBetterOfBothOrientations) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 40; ++i) {
    const auto p = random_descriptor(rng, 17, 16, 0.4);
    const auto q = random_descriptor(rng, 17, 16, 0.4);
    const double direct = similarity_oracle(p, q, true);
    const double flipped = similarity_oracle(p, with_directions(q, 8), true);
    EXPECT_DOUBLE_EQ(msreg::match_score(p, q, SameGradRule::Circular, msreg::Polarity::Either),
                     std::max(direct, flipped));
    EXPECT_DOUBLE_EQ(msreg::match_score(p, q, SameGradRule::Circular, msreg::Polarity::Signed), direct);
  }
  const auto p = random_descriptor(rng, 17, 16, 0.4);
  EXPECT_DOUBLE_EQ(msreg::match_score(p, with_directions(p, 8), SameGradRule::Circular, msreg::Polarity::Either),
                   std::sqrt(double(p.edge_count())));
}

TEST(BestMatch, PicksSelfOverDisjoint) {
  const std::vector<EdgeDescriptor> c{row_descriptor(4, 2), row_descriptor(4, 0)};
  const auto m = msreg::best_match(row_descriptor(4, 2), c);
  ASSERT_TRUE(m.has_value());
  EXPECT_EQ(m->index, 0U);
  EXPECT_DOUBLE_EQ(m->score, std::sqrt(5.0));
}

TEST(BestMatch, GateExcludesDistantCandidates) {
  const std::vector<EdgeDescriptor> c{row_descriptor(4, 2, 10, 10)};
  const msreg::MatchGate gate{msreg::AffineTransform::identity(), 0.0};
  EXPECT_FALSE(msreg::best_match(row_descriptor(4, 2, 0, 0), c, gate).has_value());
  EXPECT_TRUE(msreg::best_match(row_descriptor(4, 2, 10, 10), c, gate).has_value());
  const msreg::MatchGate shifted{msreg::AffineTransform::translation(10, 10), 0.0};
  EXPECT_TRUE(msreg::best_match(row_descriptor(4, 2, 0, 0), c, shifted).has_value());
}

TEST(BestMatch, FirstOfOrderedScores) {
  // Scores sqrt(5), sqrt(3), 0 against p.
  Bytes e3(25, 0), g(25, 4);
  for (std::size_t i = 0; i < 3; ++i) e3[10 + i] = 1;
  const std::vector<EdgeDescriptor> c{row_descriptor(4), EdgeDescriptor(0, 0, 5, 16, e3, g), row_descriptor(4, 0)};
  const auto p = row_descriptor(4);
  EXPECT_DOUBLE_EQ(similarity_oracle(p, c[1], true), std::sqrt(3.0));
  const auto m = msreg::best_match(p, c);
  ASSERT_TRUE(m.has_value());
  EXPECT_EQ(m->index, 0U);
}

TEST(BestMatch, TiesGoToSmallestIndex) {
  const std::vector<EdgeDescriptor> c{row_descriptor(4, 0), row_descriptor(5), row_descriptor(4)};
  EXPECT_EQ(msreg::best_match(row_descriptor(4), c)->index, 1U);
}

TEST(BestMatch, ZeroScoresAreNoMatch) {
  const std::vector<EdgeDescriptor> c{row_descriptor(4, 0), row_descriptor(4, 1)};
  EXPECT_FALSE(msreg::best_match(row_descriptor(4, 3), c).has_value());
  EXPECT_THROW((void)msreg::best_match(row_descriptor(4), std::span<const EdgeDescriptor>{}), msreg::ParameterError);
}

TEST(BestMatch, NoGateEqualsInfiniteGate) {
  std::mt19937_64 rng(7);
  std::vector<EdgeDescriptor> c;
  for (int i = 0; i < 30; ++i) c.push_back(random_descriptor(rng, 11, 16, 0.3, i * 7, i * 3));
  const msreg::MatchGate inf{msreg::AffineTransform::identity(), std::numeric_limits<double>::infinity()};
  for (int i = 0; i < 10; ++i) {
    const auto p = random_descriptor(rng, 11, 16, 0.3, 50, 50);
    const auto a = msreg::best_match(p, c);
    const auto b = msreg::best_match(p, c, inf);
    ASSERT_EQ(a.has_value(), b.has_value());
    if (a) {
      EXPECT_EQ(a->index, b->index);
      EXPECT_EQ(a->score, b->score);
    }
  }
}
