#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "segcal/frame.hpp"

namespace segcal {

enum class Layout { striped, blobs };

/// How the simulated uncertainty relates to correctness:
///  calibrated     every error is more uncertain than every correct point;
///  anticalibrated every correct point is more uncertain than every error;
///  constant       all points share one uncertainty value.
enum class CalibrationMode { calibrated, anticalibrated, constant };

std::string_view to_string(Layout layout);
std::string_view to_string(CalibrationMode mode);
Layout parse_layout(std::string_view name);
CalibrationMode parse_calibration_mode(std::string_view name);

struct ScenarioSpec {
  std::size_t num_classes = 20;
  ImageShape shape{64, 512};
  std::size_t num_frames = 1;
  Layout layout = Layout::striped;
  /// Share of pixels per class; empty means uniform.
  std::vector<double> class_fractions;
  /// Probability that a point of class c is predicted correctly; either one
  /// value for all classes or one per class.
  std::vector<double> accuracy{0.9};
  CalibrationMode mode = CalibrationMode::calibrated;
  std::size_t mc_samples = 2;
  bool emit_samples = true;
  bool emit_logits = false;
  std::size_t logit_samples = kDefaultLogitSamples;
  std::uint64_t seed = 0;

  void validate() const;
  double accuracy_of(std::size_t c) const { return accuracy.size() == 1 ? accuracy[0] : accuracy[c]; }
};

struct SynthFrame {
  FrameRecord frame;
  /// 1 where the simulated prediction is wrong.
  std::vector<std::uint8_t> is_error;
};

/// Frames "frame_000000", ... with layout labels, predictions, normalized
/// entropy as precomputed uncertainty, and optionally MC samples and logit
/// fields consistent with it. Bit-identical for the same spec.
std::vector<SynthFrame> generate_scenario(const ScenarioSpec& spec, std::size_t threads = 1);

struct CorruptionRegion {
  std::string frame_id;
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  /// New label = (old label + shift) mod C.
  ClassId shift = 1;

  bool contains(std::size_t r, std::size_t c) const {
    return r >= row && r < row + height && c >= col && c < col + width;
  }
  bool operator==(const CorruptionRegion&) const = default;
};

struct CorruptedScenario {
  std::vector<FrameRecord> frames;
  std::vector<CorruptionRegion> ledger;
};

/// Relabels disjoint rectangles covering about `rate` of each frame's
/// pixels, leaving predictions and uncertainty untouched. Regions keep a
/// one-pixel gap to each other. Throws InvalidInput when the regions cannot
/// be placed.
CorruptedScenario corrupt_labels(std::span<const FrameRecord> frames, std::size_t num_classes,
                                 double rate, std::uint64_t seed);

}  // namespace segcal
