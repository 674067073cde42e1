#include <gtest/gtest.h>

#include <cmath>

#include "reference.hpp"
#include "segcal/error.hpp"
#include "segcal/sparsification.hpp"

using namespace segcal;

namespace {

// Four points: one class-1 false positive, two class-1 true positives.
const std::vector<ClassId> kLabel{0, 0, 1, 1};
const std::vector<ClassId> kPred{0, 1, 1, 1};
const std::vector<double> kU{0.1, 0.05, 0.2, 0.3};

FrameRecord frame(std::string id, std::vector<ClassId> pred, std::vector<ClassId> label, std::vector<double> u) {
  FrameRecord f;
  f.frame_id = std::move(id);
  f.pred = std::move(pred);
  f.label = std::move(label);
  f.uncertainty = std::move(u);
  return f;
}

EvaluationOptions precomputed(std::size_t K) {
  EvaluationOptions o;
  o.kind = UncertaintyKind::precomputed;
  o.grid = FractionGrid(K);
  return o;
}

}  // namespace

TEST(Grid, Fractions) {
  const FractionGrid g(4);
  EXPECT_EQ(g.fractions(), (std::vector<double>{0, 0.25, 0.5, 0.75}));
  EXPECT_EQ(g.removal_count(3, 3), 2u);
  EXPECT_EQ(g.removal_count(1, 3), 0u);
  EXPECT_THROW(FractionGrid(1), InvalidInput);
  EXPECT_EQ(FractionGrid().steps(), 100u);
}

TEST(Ranking, DescendingWithIndexTies) {
  EXPECT_EQ(uncertainty_ranking(std::vector<double>{0.1, 0.9, 0.2}), (std::vector<std::size_t>{1, 2, 0}));
  EXPECT_EQ(uncertainty_ranking(std::vector<double>{0.4, 0.4, 0.4}), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(uncertainty_ranking(std::vector<double>{0.0, -0.0, 0.0}), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Ranking, ReversingEqualPointsOnlySwapsThem) {
  const std::vector<double> u{0.5, 0.2, 0.5, 0.9};
  const std::vector<char> tags{'A', 'B', 'C', 'D'};
  const std::vector<char> swapped{'C', 'B', 'A', 'D'};
  const auto r = uncertainty_ranking(u);
  std::string a, b;
  for (std::size_t i : r) {
    a += tags[i];
    b += swapped[i];
  }
  EXPECT_EQ(a, "DACB");
  EXPECT_EQ(b, "DCAB");
}

TEST(Ranking, RejectsNaNWithIndex) {
  try {
    uncertainty_ranking(std::vector<double>{0.1, NAN});
    FAIL();
  } catch (const InvalidInput& e) {
    EXPECT_NE(std::string(e.what()).find("index 1"), std::string::npos);
  }
}

TEST(Ranking, SameResultForAnyThreadCount) {
  std::vector<double> u(50000);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = static_cast<double>((i * 7919) % 1000) / 1000.0;
  const auto one = uncertainty_ranking(u, 1);
  EXPECT_EQ(one, uncertainty_ranking(u, 3));
  EXPECT_EQ(one, uncertainty_ranking(u, 16));
}

TEST(OracleRanking, GroupOrder) {
  EXPECT_EQ(oracle_ranking(kPred, kLabel, 1), (std::vector<std::size_t>{1, 0, 2, 3}));
  const std::vector<ClassId> perfect{0, 1, 0, 1};
  EXPECT_EQ(oracle_ranking(perfect, perfect, 1), (std::vector<std::size_t>{0, 2, 1, 3}));
  // A class-1 false negative precedes every correct point.
  const std::vector<ClassId> p{0, 0, 2, 1}, l{0, 1, 2, 1};
  const auto order = oracle_ranking(p, l, 1);
  EXPECT_EQ(order.front(), 1u);
}

TEST(Curve, FourPointExample) {
  const auto rank = uncertainty_ranking(kU);
  EXPECT_EQ(rank, ref::ranking(kU));
  const FractionGrid g(4);
  const auto s = sparsification_curve(kPred, kLabel, rank, 1, g);
  const auto expected_s = ref::curve(kPred, kLabel, ref::ranking(kU), 1, 4);
  EXPECT_EQ(s, expected_s);
  EXPECT_EQ(s, (std::vector<double>{2.0 / 3, 2.0 / 3, 0.5, 0.0}));

  const auto o = sparsification_curve(kPred, kLabel, oracle_ranking(kPred, kLabel, 1), 1, g);
  EXPECT_EQ(o, ref::oracle(kPred, kLabel, 1, 4));
  EXPECT_EQ(o, (std::vector<double>{2.0 / 3, 2.0 / 3, 1.0, 1.0}));
  EXPECT_EQ(o, oracle_curve(2, 1, g));

  const Ause a = ause(o, s, g);
  EXPECT_NEAR(a.normalized, ref::ause_normalized(o, s), 1e-15);
  EXPECT_NEAR(a.normalized, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(a.paper_scale, ref::ause_sum(o, s), 1e-15);
  EXPECT_NEAR(a.paper_scale, 1.5, 1e-15);
}

TEST(Curve, PerfectPredictionsAreFlatOne) {
  const std::vector<ClassId> l{0, 1, 2, 1, 0};
  const std::vector<std::size_t> rank{4, 2, 0, 1, 3};
  for (ClassId c = 0; c < 3; ++c) {
    EXPECT_EQ(sparsification_curve(l, l, rank, c, FractionGrid(5)), std::vector<double>(5, 1.0));
  }
}

TEST(Curve, AbsentClassIsFlatOne) {
  EXPECT_EQ(sparsification_curve(kPred, kLabel, std::vector<std::size_t>{0, 1, 2, 3}, 4, FractionGrid(3)),
            std::vector<double>(3, 1.0));
  EXPECT_TRUE(removal_profile(kPred, kLabel, std::vector<std::size_t>{0, 1, 2, 3}, 4).empty());
}

TEST(Curve, RejectsBadRanking) {
  EXPECT_THROW(sparsification_curve(kPred, kLabel, std::vector<std::size_t>{0, 1, 1, 3}, 1, FractionGrid(4)),
               InvalidInput);
  EXPECT_THROW(sparsification_curve(kPred, kLabel, std::vector<std::size_t>{0, 1, 2}, 1, FractionGrid(4)),
               InvalidInput);
}

TEST(Ause, Examples) {
  const FractionGrid g(10);
  const std::vector<double> c(10, 0.4);
  EXPECT_EQ(ause(c, c, g), (Ause{0.0, 0.0}));
  const std::vector<double> one(10, 1.0), zero(10, 0.0);
  EXPECT_NEAR(ause(one, zero, g).normalized, 1.0, 1e-15);
  EXPECT_NEAR(ause(one, zero, g).paper_scale, 10.0, 1e-15);
  EXPECT_THROW(ause(one, std::vector<double>(9, 0.0), g), InvalidInput);
}

TEST(Dataset, SingleFrameMatchesDirectCurves) {
  const std::vector<FrameRecord> frames{frame("a", kPred, kLabel, kU)};
  const SparsificationReport r = evaluate_dataset(frames, ClassConfig::numbered(2), precomputed(4));
  const auto rank = ref::ranking(kU);
  for (ClassId c = 0; c < 2; ++c) {
    EXPECT_EQ(r.classes[c].sparsification, ref::curve(kPred, kLabel, rank, c, 4));
    EXPECT_EQ(r.classes[c].oracle, ref::oracle(kPred, kLabel, c, 4));
  }
  EXPECT_NEAR(r.classes[1].ause.normalized, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(r.num_points, 4u);
  EXPECT_EQ(r.num_frames, 1u);
  EXPECT_EQ(r.fractions, FractionGrid(4).fractions());
  EXPECT_EQ(r.classes[1].iou, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.miou, (0.5 + 2.0 / 3.0) / 2.0);
}

TEST(Dataset, ErrorIndicatorGivesZeroAuse) {
  std::vector<ClassId> pred, label;
  std::vector<double> u;
  for (int i = 0; i < 500; ++i) {
    label.push_back(i % 5);
    pred.push_back(i % 7 == 0 ? (i + 1) % 5 : i % 5);
    u.push_back(pred.back() != label.back() ? 1.0 : 0.0);
  }
  const std::vector<FrameRecord> frames{frame("a", pred, label, u)};
  const SparsificationReport r = evaluate_dataset(frames, ClassConfig::numbered(5), precomputed(100));
  for (const auto& c : r.classes) {
    EXPECT_LE(std::abs(c.ause.normalized), 1e-9);
    EXPECT_LE(std::abs(c.ause.paper_scale), 1e-9);
  }
}

TEST(Dataset, ZeroTruePositiveClassIsDegenerate) {
  const std::vector<ClassId> label{0, 0, 1, 1, 2, 2};
  const std::vector<ClassId> pred{0, 2, 0, 0, 2, 1};
  const std::vector<FrameRecord> frames{frame("a", pred, label, {0.3, 0.9, 0.1, 0.7, 0.2, 0.5})};
  const SparsificationReport r = evaluate_dataset(frames, ClassConfig::numbered(3), precomputed(10));
  const ClassReport& c = r.classes[1];
  EXPECT_TRUE(c.present);
  EXPECT_TRUE(c.degenerate);
  EXPECT_EQ(c.iou, 0.0);
  EXPECT_EQ(c.ause.normalized, 0.0);
  EXPECT_EQ(c.ause.paper_scale, 0.0);
  EXPECT_EQ(c.oracle, std::vector<double>(10, 0.0));
  EXPECT_EQ(c.sparsification, std::vector<double>(10, 0.0));
}

TEST(Dataset, AbsentAndIgnoredClasses) {
  ClassConfig config = ClassConfig::numbered(4);
  config.ignore_ids = {3, 255};
  const std::vector<FrameRecord> frames{frame("a", {0, 1, 0, 1}, {0, 1, 255, 3}, {0.1, 0.2, 0.3, 0.4})};
  const SparsificationReport r = evaluate_dataset(frames, config, precomputed(5));
  EXPECT_EQ(r.num_points, 2u);
  EXPECT_EQ(r.num_ignored, 2u);
  EXPECT_FALSE(r.classes[2].present);
  EXPECT_EQ(r.classes[2].iou, 1.0);
  EXPECT_EQ(r.classes[2].sparsification, std::vector<double>(5, 1.0));
  EXPECT_FALSE(r.classes[3].scored);
  EXPECT_FALSE(r.classes[3].present);
  EXPECT_EQ(r.miou, 1.0);
}

TEST(Dataset, RejectsDuplicateFrameIdsAndBadInputs) {
  const std::vector<FrameRecord> dup{frame("a", {0}, {0}, {0.1}), frame("a", {1}, {1}, {0.2})};
  EXPECT_THROW(evaluate_dataset(dup, ClassConfig::numbered(2), precomputed(4)), InvalidInput);
  const std::vector<FrameRecord> nan{frame("a", {0}, {0}, {NAN})};
  EXPECT_THROW(evaluate_dataset(nan, ClassConfig::numbered(2), precomputed(4)), InvalidInput);
  const std::vector<FrameRecord> neg{frame("a", {0}, {0}, {-0.5})};
  EXPECT_THROW(evaluate_dataset(neg, ClassConfig::numbered(2), precomputed(4)), InvalidInput);
  const std::vector<FrameRecord> none{frame("a", {0}, {0}, {})};
  FrameRecord no_u = none[0];
  no_u.uncertainty.reset();
  EXPECT_THROW(evaluate_dataset(std::vector<FrameRecord>{no_u}, ClassConfig::numbered(2), precomputed(4)),
               InvalidInput);
}

TEST(Binned, SingleBinIsFlat) {
  const std::vector<FrameRecord> frames{frame("a", kPred, kLabel, kU)};
  const SparsificationReport r = binned_evaluate(frames, ClassConfig::numbered(2), precomputed(4), 1);
  EXPECT_EQ(r.mode, "binned");
  EXPECT_EQ(r.bins, 1u);
  for (double v : r.classes[1].sparsification) EXPECT_NEAR(v, 2.0 / 3.0, 1e-12);
}

TEST(Binned, RejectsOutOfRangeUncertainty) {
  const std::vector<FrameRecord> frames{frame("a", {0}, {0}, {1.5})};
  EXPECT_THROW(binned_evaluate(frames, ClassConfig::numbered(2), precomputed(4), 256), InvalidInput);
  EXPECT_THROW(binned_evaluate(frames, ClassConfig::numbered(2), precomputed(4), 0), InvalidInput);
}
