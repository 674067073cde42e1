#include <gtest/gtest.h>

#include "segcal/audit.hpp"
#include "segcal/error.hpp"
#include "segcal/rng.hpp"

using namespace segcal;

TEST(ConfidentErrorMask, Examples) {
  const std::vector<ClassId> l{0, 1, 2};
  EXPECT_EQ(confident_error_mask(l, l, std::vector<double>{0, 0, 0}, 0.1), (std::vector<std::uint8_t>{0, 0, 0}));
  const std::vector<ClassId> p{0, 2, 2};
  EXPECT_EQ(confident_error_mask(p, l, std::vector<double>{0.0, 0.05, 0.0}, 0.1),
            (std::vector<std::uint8_t>{0, 1, 0}));
  EXPECT_EQ(confident_error_mask(p, l, std::vector<double>{0.0, 0.5, 0.0}, 0.1),
            (std::vector<std::uint8_t>{0, 0, 0}));
  EXPECT_EQ(confident_error_mask(p, std::vector<ClassId>{0, 255, 2}, std::vector<double>{0, 0, 0}, 0.1, {255}),
            (std::vector<std::uint8_t>{0, 0, 0}));
  EXPECT_THROW(confident_error_mask(p, l, std::vector<double>{0, 0, 0}, 1.5), InvalidInput);
}

TEST(ConfidentErrorMask, MonotoneInTau) {
  rng::SplitMix64 gen(4);
  std::vector<ClassId> p, l;
  std::vector<double> u;
  for (int i = 0; i < 1000; ++i) {
    l.push_back(static_cast<ClassId>(gen.below(3)));
    p.push_back(static_cast<ClassId>(gen.below(3)));
    u.push_back(gen.uniform());
  }
  std::size_t prev = 0;
  for (double tau = 0.0; tau <= 1.0; tau += 0.05) {
    const auto m = confident_error_mask(p, l, u, tau);
    const auto count = static_cast<std::size_t>(std::count(m.begin(), m.end(), 1));
    EXPECT_GE(count, prev);
    prev = count;
  }
}

TEST(Cluster, EmptyMask) {
  const std::vector<std::uint8_t> mask(9, 0);
  const std::vector<ClassId> z(9, 0);
  EXPECT_TRUE(cluster_findings(mask, ImageShape{3, 3}, z, z, std::vector<double>(9, 0.0), 1).empty());
}

TEST(Cluster, ThreeByThreeBlock) {
  const std::size_t H = 5, W = 5;
  std::vector<std::uint8_t> mask(H * W, 0);
  std::vector<ClassId> pred(H * W, 0), label(H * W, 0);
  for (std::size_t r = 1; r < 4; ++r)
    for (std::size_t c = 1; c < 4; ++c) {
      mask[r * W + c] = 1;
      pred[r * W + c] = 2;
      label[r * W + c] = 1;
    }
  std::vector<double> u(H * W, 0.02);
  const auto f = cluster_findings(mask, ImageShape{H, W}, pred, label, u, 4, "fr");
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].size, 9u);
  EXPECT_EQ(f[0].frame_id, "fr");
  EXPECT_EQ(f[0].label_class, 1);
  EXPECT_EQ(f[0].predicted_class, 2);
  EXPECT_EQ(f[0].first_pixel(), (Pixel{1, 1}));
  EXPECT_NEAR(f[0].mean_uncertainty, 0.02, 1e-15);
  EXPECT_TRUE(cluster_findings(mask, ImageShape{H, W}, pred, label, u, 10).empty());
}

TEST(Cluster, DiagonalNeighboursConnect) {
  const std::vector<std::uint8_t> mask{1, 0, 0, 1};
  const std::vector<ClassId> p{1, 0, 0, 1}, l{0, 0, 0, 0};
  const auto f = cluster_findings(mask, ImageShape{2, 2}, p, l, std::vector<double>(4, 0.0), 1);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].size, 2u);
}

TEST(Cluster, OrderedByFirstPixelAndFlatRuns) {
  // Two components: one starting at (0, 3), one at (1, 0).
  const std::vector<std::uint8_t> mask{0, 0, 0, 1, 1, 0, 0, 0, 1, 1, 0, 0};
  const std::vector<ClassId> p(12, 1), l(12, 0);
  const auto f = cluster_findings(mask, ImageShape{3, 4}, p, l, std::vector<double>(12, 0.0), 1);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0].first_pixel(), (Pixel{0, 3}));
  EXPECT_EQ(f[1].first_pixel(), (Pixel{1, 0}));
  const auto flat = cluster_findings(mask, std::nullopt, p, l, std::vector<double>(12, 0.0), 1);
  ASSERT_EQ(flat.size(), 2u);
  EXPECT_EQ(flat[0].first_pixel(), (Pixel{0, 3}));
  EXPECT_EQ(flat[0].size, 2u);
}

TEST(Rank, ScoresAndOrder) {
  AuditFinding big{"a", {{0, 0}}, 10, 0, 1, 0.2, 0.2, 0};
  AuditFinding small{"a", {{5, 5}}, 5, 0, 1, 0.2, 0.2, 0};
  auto r = rank_findings({small, big});
  EXPECT_EQ(r[0].size, 10u);
  AuditFinding sure{"b", {{0, 0}}, 8, 0, 1, 0.0, 0.0, 0};
  AuditFinding unsure{"a", {{0, 0}}, 8, 0, 1, 0.4, 0.4, 0};
  r = rank_findings({unsure, sure});
  EXPECT_EQ(r[0].mean_uncertainty, 0.0);
  AuditFinding eight{"a", {{0, 0}}, 8, 0, 1, 0.25, 0.3, 0};
  EXPECT_DOUBLE_EQ(rank_findings({eight})[0].score, 6.0);
}

TEST(Audit, FramesRankedGlobally) {
  FrameRecord a;
  a.frame_id = "a";
  a.shape = ImageShape{2, 3};
  a.label = {0, 0, 0, 0, 0, 0};
  a.pred = {1, 1, 0, 1, 1, 0};
  a.uncertainty = std::vector<double>{0, 0, 0, 0, 0, 0};
  FrameRecord b = a;
  b.frame_id = "b";
  b.pred = {1, 1, 1, 1, 1, 1};
  AuditOptions o;
  o.kind = UncertaintyKind::precomputed;
  o.min_size = 2;
  const auto f = audit_frames(std::vector<FrameRecord>{a, b}, ClassConfig::numbered(2), o);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0].frame_id, "b");
  EXPECT_EQ(f[0].size, 6u);
  EXPECT_EQ(f[1].size, 4u);
}
