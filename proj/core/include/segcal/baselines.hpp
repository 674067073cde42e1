#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "segcal/frame.hpp"
#include "segcal/metrics.hpp"

namespace segcal {

inline constexpr std::size_t kDefaultEceBins = 10;

/// Expected calibration error over `bins` equal-width confidence bins on
/// [0, 1]: sum_b (n_b / N) |acc_b - conf_b|. Confidence 1.0 lands in the
/// top bin; empty bins contribute nothing.
double ece(std::span<const double> confidence, std::span<const std::uint8_t> correct,
           std::size_t bins = kDefaultEceBins);

/// Streaming form of ece(); per-bin sums merge by addition.
class EceAccumulator {
 public:
  explicit EceAccumulator(std::size_t bins = kDefaultEceBins);

  void add(double confidence, bool correct);
  EceAccumulator& operator+=(const EceAccumulator& other);
  std::uint64_t count() const noexcept { return total_; }
  double value() const;

 private:
  std::vector<std::uint64_t> n_;
  std::vector<std::uint64_t> hits_;
  std::vector<double> confidence_sum_;
  std::uint64_t total_ = 0;
};

struct PatchSpec {
  std::size_t height = 4;
  std::size_t width = 4;
  /// A patch is accurate when its pixel accuracy exceeds this.
  double accuracy_threshold = 0.5;
  /// A patch is certain when its mean uncertainty is at most this. Empty
  /// means the mean uncertainty of the evaluated pixels.
  std::optional<double> uncertainty_threshold;

  void validate() const;
};

struct PavpuResult {
  /// Absent when the ratio's denominator is zero.
  std::optional<double> p_accurate_given_certain;
  std::optional<double> p_uncertain_given_inaccurate;
  std::optional<double> pavpu;
};

/// Four-way patch table; merges by addition across frames.
struct PatchCounts {
  std::uint64_t accurate_certain = 0;
  std::uint64_t accurate_uncertain = 0;
  std::uint64_t inaccurate_certain = 0;
  std::uint64_t inaccurate_uncertain = 0;

  std::uint64_t total() const noexcept {
    return accurate_certain + accurate_uncertain + inaccurate_certain + inaccurate_uncertain;
  }
  PatchCounts& operator+=(const PatchCounts& o) noexcept;
  PavpuResult result() const;
  bool operator==(const PatchCounts&) const = default;
};

/// Tiles a frame into non-overlapping patches (partial edge patches kept)
/// and classifies each. Pixels with ignored labels are skipped; patches
/// without evaluated pixels are not counted. `uncertainty_threshold` is the
/// resolved numeric threshold.
PatchCounts patch_counts(std::span<const ClassId> pred, std::span<const ClassId> label,
                         std::span<const double> uncertainty, ImageShape shape,
                         const PatchSpec& spec, double uncertainty_threshold,
                         const std::set<ClassId>& ignore = {});

/// PAvPU of one frame. A "mean" threshold resolves to this frame's mean
/// uncertainty. Throws InvalidInput for flat frames.
PavpuResult pavpu(std::span<const ClassId> pred, std::span<const ClassId> label,
                  std::span<const double> uncertainty, std::optional<ImageShape> shape,
                  const PatchSpec& spec, const std::set<ClassId>& ignore = {});

struct BaselineReport {
  double ece = 0.0;
  std::size_t ece_bins = kDefaultEceBins;
  PatchSpec patch;
  double resolved_uncertainty_threshold = 0.0;
  PatchCounts counts;
  PavpuResult pavpu;
  std::uint64_t num_points = 0;
};

/// ECE with confidence = 1 - normalized uncertainty, plus dataset-level
/// PAvPU (a "mean" threshold resolves over all frames).
BaselineReport evaluate_baselines(std::span<const FrameRecord> frames, const ClassConfig& config,
                                  UncertaintyKind kind, std::size_t ece_bins,
                                  const PatchSpec& spec, std::uint64_t seed = 0,
                                  std::size_t threads = 1);

}  // namespace segcal
