#include <gtest/gtest.h>

#include <algorithm>

#include "segcal/error.hpp"
#include "segcal/sparsification.hpp"
#include "segcal/synth.hpp"

using namespace segcal;

namespace {

std::vector<FrameRecord> records(std::vector<SynthFrame> s) {
  std::vector<FrameRecord> out;
  for (auto& f : s) out.push_back(std::move(f.frame));
  return out;
}

SparsificationReport evaluate(const std::vector<FrameRecord>& frames, std::size_t C, UncertaintyKind kind) {
  EvaluationOptions o;
  o.kind = kind;
  return evaluate_dataset(frames, ClassConfig::numbered(C), o);
}

ScenarioSpec small(CalibrationMode mode, double acc, std::uint64_t seed) {
  ScenarioSpec s;
  s.num_classes = 6;
  s.shape = {24, 40};
  s.num_frames = 2;
  s.accuracy = {acc};
  s.mode = mode;
  s.mc_samples = 3;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(Synth, Deterministic) {
  ScenarioSpec s = small(CalibrationMode::calibrated, 0.8, 5);
  s.layout = Layout::blobs;
  s.emit_logits = true;
  const auto a = generate_scenario(s, 1), b = generate_scenario(s, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t f = 0; f < a.size(); ++f) {
    EXPECT_EQ(a[f].frame.label, b[f].frame.label);
    EXPECT_EQ(a[f].frame.pred, b[f].frame.pred);
    EXPECT_EQ(a[f].frame.uncertainty, b[f].frame.uncertainty);
    EXPECT_EQ(a[f].frame.samples, b[f].frame.samples);
    EXPECT_EQ(a[f].frame.logit_field, b[f].frame.logit_field);
    EXPECT_EQ(a[f].is_error, b[f].is_error);
  }
  s.seed = 6;
  EXPECT_NE(generate_scenario(s)[0].frame.label, a[0].frame.label);
}

TEST(Synth, ErrorIndicatorAndFrameValidity) {
  const auto frames = generate_scenario(small(CalibrationMode::calibrated, 0.7, 1));
  for (const auto& f : frames) {
    EXPECT_NO_THROW(f.frame.validate(ClassConfig::numbered(6)));
    EXPECT_EQ(f.frame.shape, (ImageShape{24, 40}));
    for (std::size_t i = 0; i < f.frame.size(); ++i) {
      EXPECT_EQ(f.is_error[i] != 0, f.frame.pred[i] != f.frame.label[i]);
    }
  }
  EXPECT_EQ(frames[0].frame.frame_id, "frame_000000");
}

TEST(Synth, PerfectAccuracyHasNoErrors) {
  const auto frames = records(generate_scenario(small(CalibrationMode::calibrated, 1.0, 2)));
  for (const auto& f : frames) EXPECT_EQ(f.pred, f.label);
  const auto r = evaluate(frames, 6, UncertaintyKind::entropy);
  for (const auto& c : r.classes) EXPECT_EQ(c.ause.normalized, 0.0);
}

TEST(Synth, CalibratedGivesZeroAuseForEveryKind) {
  const auto frames = records(generate_scenario(small(CalibrationMode::calibrated, 0.6, 3)));
  for (UncertaintyKind k : {UncertaintyKind::entropy, UncertaintyKind::precomputed}) {
    const auto r = evaluate(frames, 6, k);
    for (const auto& c : r.classes) {
      EXPECT_LE(c.ause.normalized, 1e-9) << c.name;
      EXPECT_LE(c.ause.paper_scale, 1e-9) << c.name;
    }
  }
}

TEST(Synth, AnticalibratedIsBad) {
  ScenarioSpec s = small(CalibrationMode::anticalibrated, 0.7, 4);
  s.num_classes = 20;
  s.shape = {64, 256};
  const auto r = evaluate(records(generate_scenario(s)), 20, UncertaintyKind::precomputed);
  for (const auto& c : r.classes) {
    if (c.present) {
      EXPECT_GE(c.ause.normalized, 0.5) << c.name;
    }
  }
}

TEST(Synth, ConstantModeSharesOneValue) {
  const auto frames = generate_scenario(small(CalibrationMode::constant, 0.7, 5));
  const double u0 = (*frames[0].frame.uncertainty)[0];
  for (const auto& f : frames)
    for (double u : *f.frame.uncertainty) EXPECT_EQ(u, u0);
}

TEST(Synth, ClassFractionsAreExactPerFrame) {
  for (Layout layout : {Layout::striped, Layout::blobs}) {
    ScenarioSpec s = small(CalibrationMode::calibrated, 0.9, 6);
    s.layout = layout;
    s.shape = {50, 100};
    s.class_fractions = {0.001, 0.2, 0.2, 0.2, 0.2, 0.199};
    const auto frames = generate_scenario(s);
    for (const auto& f : frames) {
      EXPECT_EQ(std::count(f.frame.label.begin(), f.frame.label.end(), 0), 5);
      EXPECT_EQ(std::count(f.frame.label.begin(), f.frame.label.end(), 1), 1000);
    }
  }
}

TEST(Synth, SpecValidation) {
  ScenarioSpec s;
  s.num_classes = 1;
  EXPECT_THROW(s.validate(), InvalidInput);
  s = ScenarioSpec{};
  s.accuracy = {0.5, 0.5};
  EXPECT_THROW(s.validate(), InvalidInput);
  s = ScenarioSpec{};
  s.mc_samples = 1;
  EXPECT_THROW(s.validate(), InvalidInput);
  s = ScenarioSpec{};
  s.class_fractions = std::vector<double>(20, 0.0);
  EXPECT_THROW(s.validate(), InvalidInput);
  EXPECT_THROW(parse_layout("rings"), InvalidInput);
  EXPECT_EQ(parse_calibration_mode("anticalibrated"), CalibrationMode::anticalibrated);
}

TEST(Corruption, ZeroRateLeavesFramesUnchanged) {
  const auto frames = records(generate_scenario(small(CalibrationMode::calibrated, 0.9, 7)));
  const CorruptedScenario c = corrupt_labels(frames, 6, 1e-9, 1);
  EXPECT_TRUE(c.ledger.empty());
  for (std::size_t f = 0; f < frames.size(); ++f) EXPECT_EQ(c.frames[f].label, frames[f].label);
}

TEST(Corruption, LedgerPixelsChangedOthersUntouched) {
  ScenarioSpec s = small(CalibrationMode::calibrated, 0.9, 8);
  s.shape = {64, 128};
  const auto frames = records(generate_scenario(s));
  const CorruptedScenario c = corrupt_labels(frames, 6, 0.05, 3);
  ASSERT_FALSE(c.ledger.empty());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const std::size_t W = frames[f].shape->width;
    std::size_t covered = 0;
    for (std::size_t i = 0; i < frames[f].size(); ++i) {
      bool inside = false;
      for (const auto& r : c.ledger)
        if (r.frame_id == frames[f].frame_id && r.contains(i / W, i % W)) inside = true;
      if (inside) {
        ++covered;
        EXPECT_NE(c.frames[f].label[i], frames[f].label[i]);
      } else {
        EXPECT_EQ(c.frames[f].label[i], frames[f].label[i]);
      }
      EXPECT_EQ(c.frames[f].pred[i], frames[f].pred[i]);
    }
    EXPECT_GE(covered, static_cast<std::size_t>(0.05 * static_cast<double>(frames[f].size())));
  }
  EXPECT_EQ(c.ledger, corrupt_labels(frames, 6, 0.05, 3).ledger);
}

TEST(Corruption, ImpossibleRateFails) {
  const auto frames = records(generate_scenario(small(CalibrationMode::calibrated, 0.9, 9)));
  EXPECT_THROW(corrupt_labels(frames, 6, 0.95, 1), InvalidInput);
  EXPECT_THROW(corrupt_labels(frames, 6, 1.0, 1), InvalidInput);
}
