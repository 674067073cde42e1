#include <gtest/gtest.h>

#include <cmath>

#include "reference.hpp"
#include "segcal/error.hpp"
#include "segcal/frame.hpp"
#include "segcal/rng.hpp"
#include "segcal/uncertainty.hpp"

using namespace segcal;

namespace {

MCSampleSet one_point(const std::vector<std::vector<double>>& rows) {
  std::vector<double> flat;
  for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  return MCSampleSet(rows.size(), 1, rows.front().size(), flat);
}

constexpr double kTight = 1e-12;

}  // namespace

TEST(MeanSoftmax, IdenticalOneHot) {
  const MeanSoftmax m = mean_softmax(one_point({{0, 1, 0}, {0, 1, 0}}));
  EXPECT_EQ(m.probs, (std::vector<double>{0, 1, 0}));
  EXPECT_EQ(m.pred[0], 1);
}

TEST(MeanSoftmax, TieGoesToLowestId) {
  const MeanSoftmax m = mean_softmax(one_point({{1, 0}, {0, 1}}));
  EXPECT_EQ(m.probs, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(m.pred[0], 0);
}

TEST(MeanSoftmax, ThreeSampleMean) {
  const MeanSoftmax m = mean_softmax(one_point({{0.2, 0.8}, {0.4, 0.6}, {0.9, 0.1}}));
  EXPECT_NEAR(m.probs[0], 0.5, kTight);
  EXPECT_NEAR(m.probs[1], 0.5, kTight);
}

TEST(SampleSet, RejectsBadRows) {
  EXPECT_THROW(MCSampleSet(1, 1, 2, {0.5, 0.6}), InvalidInput);
  EXPECT_THROW(MCSampleSet(1, 1, 2, {-0.1, 1.1}), InvalidInput);
  EXPECT_THROW(MCSampleSet(2, 1, 2, {0.5, 0.5}), InvalidInput);
  EXPECT_THROW(MCSampleSet(1, 1, 2, {NAN, 1.0}), InvalidInput);
}

TEST(Entropy, Examples) {
  const std::vector<double> probs{0, 1, 0, 0, 0.25, 0.25, 0.25, 0.25, 0.5, 0.5, 0, 0};
  const auto h = predictive_entropy(probs, 4);
  EXPECT_EQ(h[0], 0.0);
  EXPECT_NEAR(h[1], std::log(4.0), kTight);
  EXPECT_NEAR(h[2], std::log(2.0), kTight);
}

TEST(MutualInformation, Examples) {
  EXPECT_NEAR(mutual_information(one_point({{0.3, 0.7}, {0.3, 0.7}, {0.3, 0.7}}))[0], 0.0, kTight);
  EXPECT_NEAR(mutual_information(one_point({{1, 0}, {0, 1}}))[0], std::log(2.0), kTight);
  EXPECT_NEAR(mutual_information(one_point({{0.5, 0.5}, {0.5, 0.5}}))[0], 0.0, kTight);
  EXPECT_THROW(mutual_information(one_point({{0.5, 0.5}})), InvalidInput);
}

TEST(MutualInformation, MatchesReferenceOnRandomPoints) {
  rng::SplitMix64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t T = 2 + gen.below(6), C = 2 + gen.below(8);
    std::vector<std::vector<double>> rows(T, std::vector<double>(C));
    for (auto& r : rows) {
      double z = 0;
      for (double& x : r) z += x = gen.uniform() < 0.2 ? 0.0 : gen.uniform();
      if (z == 0) r[0] = z = 1;
      for (double& x : r) x /= z;
    }
    const MCSampleSet s = one_point(rows);
    EXPECT_NEAR(mutual_information(s)[0], std::max(0.0, ref::mutual_information(rows)), 1e-12);
  }
}

TEST(Normalize, Examples) {
  const std::vector<double> u{std::log(4.0), 0.0, std::log(2.0)};
  const auto n = normalize_uncertainty(u, 4);
  EXPECT_NEAR(n[0], 1.0, kTight);
  EXPECT_EQ(n[1], 0.0);
  EXPECT_NEAR(n[2], 0.5, kTight);
  EXPECT_THROW(normalize_uncertainty(u, 1), InvalidInput);
}

TEST(SampleLogits, ZeroSigmaGivesSoftmaxOfMean) {
  LogitGaussianField f{2, 3, {0.1, 2.0, -1.0, 0.0, 0.0, 3.0}, std::vector<double>(6, 0.0), 5};
  const MCSampleSet s = sample_logits(f, 99);
  ASSERT_EQ(s.num_samples(), 5u);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto expect = ref::softmax({f.mu[i * 3], f.mu[i * 3 + 1], f.mu[i * 3 + 2]});
    for (std::size_t t = 0; t < 5; ++t) {
      for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(s.row(t, i)[c], expect[c], 1e-15);
    }
  }
}

TEST(SampleLogits, DeterministicPerSeed) {
  LogitGaussianField f{3, 2, {0, 1, 2, 3, 4, 5}, {1, 1, 0.5, 0.5, 2, 2}, 8};
  EXPECT_EQ(sample_logits(f, 5), sample_logits(f, 5));
  EXPECT_NE(sample_logits(f, 5).data(), sample_logits(f, 6).data());
}

TEST(SampleLogits, SymmetricMeanConverges) {
  LogitGaussianField f{1, 2, {0, 0}, {1, 1}, 10000};
  const MeanSoftmax m = mean_softmax(sample_logits(f, 3));
  EXPECT_NEAR(m.probs[0], 0.5, 0.02);
  EXPECT_NEAR(m.probs[1], 0.5, 0.02);
}

TEST(SampleLogits, NoiseIsStandardNormal) {
  const LogitNoise noise = draw_logit_noise(50, 200, 10, 17);
  double m = 0, s = 0;
  for (double e : noise.eps) m += e;
  m /= static_cast<double>(noise.eps.size());
  for (double e : noise.eps) s += (e - m) * (e - m);
  s = std::sqrt(s / static_cast<double>(noise.eps.size()));
  EXPECT_NEAR(m, 0.0, 0.02);
  EXPECT_NEAR(s, 1.0, 0.02);
}

TEST(LogitLoss, TwoClassUniform) {
  LogitGaussianField f{1, 2, {0, 0}, {0, 0}, 3};
  EXPECT_NEAR(logit_loss(f, std::vector<ClassId>{0}, 1), std::log(2.0), kTight);
}

TEST(LogitLoss, CollapsesToCrossEntropy) {
  LogitGaussianField f{2, 3, {4, 0, 0, -1, 0, 5}, std::vector<double>(6, 0.0), 4};
  const std::vector<ClassId> labels{0, 2};
  const double ce = -std::log(ref::softmax({4, 0, 0})[0]) - std::log(ref::softmax({-1, 0, 5})[2]);
  EXPECT_NEAR(logit_loss(f, labels, 7), ce, 1e-10);
}

TEST(LogitLoss, DuplicatingPointsDoublesLoss) {
  LogitGaussianField f{2, 2, {0.3, -0.2, 1.0, 0.5}, {0.7, 0.2, 0.1, 1.3}, 6};
  LogitGaussianField twice{4, 2, {}, {}, 6};
  twice.mu = f.mu;
  twice.mu.insert(twice.mu.end(), f.mu.begin(), f.mu.end());
  twice.sigma = f.sigma;
  twice.sigma.insert(twice.sigma.end(), f.sigma.begin(), f.sigma.end());
  const std::vector<ClassId> l{1, 0}, l2{1, 0, 1, 0};
  // Same draws for the duplicated points.
  LogitNoise n = draw_logit_noise(6, 2, 2, 9);
  LogitNoise n2{6, 4, 2, std::vector<double>(6 * 4 * 2)};
  for (std::size_t s = 0; s < 6; ++s)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t c = 0; c < 2; ++c) n2.eps[(s * 4 + i) * 2 + c] = n.at(s, i % 2, c);
  EXPECT_NEAR(logit_loss(twice, l2, n2), 2 * logit_loss(f, l, n), 1e-12);
}

TEST(LogitLoss, IgnoredLabelsSkipped) {
  LogitGaussianField f{2, 2, {0, 0, 3, 1}, {0, 0, 0, 0}, 2};
  const std::vector<ClassId> labels{0, 255};
  EXPECT_NEAR(logit_loss(f, labels, 1, {255}), std::log(2.0), kTight);
  EXPECT_THROW(logit_loss(f, labels, 1), InvalidInput);
}

TEST(LogitLossGrad, ZeroSigmaIsSoftmaxMinusOneHot) {
  LogitGaussianField f{2, 3, {1, 0, -1, 0.5, 0.5, 0}, std::vector<double>(6, 0.0), 4};
  const std::vector<ClassId> labels{2, 0};
  const LogitLossGradient g = logit_loss_grad(f, labels, 3);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto p = ref::softmax({f.mu[i * 3], f.mu[i * 3 + 1], f.mu[i * 3 + 2]});
    for (std::size_t c = 0; c < 3; ++c) {
      const double expect = p[c] - (static_cast<ClassId>(c) == labels[i] ? 1.0 : 0.0);
      EXPECT_NEAR(g.d_mu[i * 3 + c], expect, 1e-12);
    }
  }
}

TEST(LogitLossGrad, SymmetricDrawsGiveZeroSigmaGradient) {
  LogitGaussianField f{1, 2, {0.4, -0.3}, {0.0, 0.0}, 2};
  const LogitNoise noise{2, 1, 2, {0.8, -1.1, -0.8, 1.1}};
  const LogitLossGradient g = logit_loss_grad(f, std::vector<ClassId>{1}, noise);
  EXPECT_NEAR(g.d_sigma[0], 0.0, 1e-15);
  EXPECT_NEAR(g.d_sigma[1], 0.0, 1e-15);
}

TEST(LogitLossGrad, MatchesFiniteDifferences) {
  rng::SplitMix64 gen(5);
  LogitGaussianField f{3, 4, {}, {}, 5};
  for (int i = 0; i < 12; ++i) {
    f.mu.push_back(gen.uniform(-2, 2));
    f.sigma.push_back(gen.uniform(0.1, 1.5));
  }
  const std::vector<ClassId> labels{0, 3, 1};
  const LogitNoise noise = draw_logit_noise(5, 3, 4, 21);
  const LogitLossGradient g = logit_loss_grad(f, labels, noise);
  EXPECT_NEAR(g.loss, logit_loss(f, labels, noise), 1e-12);
  const double h = 1e-6;
  for (std::size_t j = 0; j < 12; ++j) {
    LogitGaussianField a = f, b = f;
    a.mu[j] += h;
    b.mu[j] -= h;
    EXPECT_NEAR(g.d_mu[j], (logit_loss(a, labels, noise) - logit_loss(b, labels, noise)) / (2 * h), 1e-6);
    a = f;
    b = f;
    a.sigma[j] += h;
    b.sigma[j] -= h;
    EXPECT_NEAR(g.d_sigma[j], (logit_loss(a, labels, noise) - logit_loss(b, labels, noise)) / (2 * h), 1e-6);
  }
}

TEST(ClassWeights, Examples) {
  const auto w = class_weights(std::vector<double>{0.0, 1.0});
  EXPECT_NEAR(w[0], 1.0 / std::log(1.02), 1e-12);
  EXPECT_NEAR(w[0], 50.50, 1e-2);
  EXPECT_NEAR(w[1], 1.422, 1e-3);
  EXPECT_THROW(class_weights(std::vector<double>{-0.1}), InvalidInput);
  EXPECT_THROW(class_weights(std::vector<double>{1.5}), InvalidInput);
}

TEST(FrameUncertainty, KindsAndErrors) {
  FrameRecord f;
  f.frame_id = "x";
  f.pred = {0, 1};
  f.label = {0, 0};
  f.samples = MCSampleSet(2, 2, 2, {1, 0, 0.5, 0.5, 0, 1, 0.5, 0.5});
  const auto h = frame_uncertainty(f, UncertaintyKind::entropy, 2);
  EXPECT_NEAR(h[0], 1.0, kTight);
  EXPECT_NEAR(h[1], 1.0, kTight);
  const auto mi = frame_uncertainty(f, UncertaintyKind::mutual_information, 2);
  EXPECT_NEAR(mi[0], 1.0, kTight);
  EXPECT_NEAR(mi[1], 0.0, kTight);
  EXPECT_THROW(frame_uncertainty(f, UncertaintyKind::precomputed, 2), InvalidInput);
  EXPECT_THROW(frame_uncertainty(f, UncertaintyKind::aleatoric, 2), InvalidInput);
  EXPECT_THROW(parse_uncertainty_kind("variance"), InvalidInput);
  EXPECT_EQ(parse_uncertainty_kind("mutual_information"), UncertaintyKind::mutual_information);
}

TEST(FrameUncertainty, AleatoricIsSeededPerFrame) {
  FrameRecord f;
  f.frame_id = "a";
  f.pred = {0, 1};
  f.label = {0, 1};
  f.logit_field = LogitGaussianField{2, 3, {2, 0, 0, 0, 1, 0}, {1, 1, 1, 0.5, 0.5, 0.5}, 6};
  const auto u1 = frame_uncertainty(f, UncertaintyKind::aleatoric, 3, 4);
  EXPECT_EQ(u1, frame_uncertainty(f, UncertaintyKind::aleatoric, 3, 4));
  for (double v : u1) EXPECT_TRUE(v >= 0.0 && v <= 1.0);
  FrameRecord g = f;
  g.frame_id = "b";
  EXPECT_NE(u1, frame_uncertainty(g, UncertaintyKind::aleatoric, 3, 4));
}
