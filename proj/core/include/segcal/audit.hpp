#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "segcal/frame.hpp"
#include "segcal/metrics.hpp"

namespace segcal {

inline constexpr double kDefaultAuditTau = 0.1;
inline constexpr std::size_t kDefaultAuditMinSize = 5;

struct Pixel {
  std::size_t row = 0;
  std::size_t col = 0;

  auto operator<=>(const Pixel&) const = default;
};

/// A connected cluster of confidently misclassified points.
struct AuditFinding {
  std::string frame_id;
  std::vector<Pixel> pixels;  // raster order
  std::size_t size = 0;
  /// Most frequent (label, prediction) pair in the cluster; ties go to the
  /// lowest label, then the lowest prediction. The two always differ.
  ClassId label_class = 0;
  ClassId predicted_class = 0;
  double mean_uncertainty = 0.0;
  double max_uncertainty = 0.0;
  /// size * (1 - mean_uncertainty); filled by rank_findings.
  double score = 0.0;

  Pixel first_pixel() const { return pixels.front(); }
};

/// mask[i] = pred != label, label not ignored, uncertainty <= tau.
std::vector<std::uint8_t> confident_error_mask(std::span<const ClassId> pred,
                                               std::span<const ClassId> label,
                                               std::span<const double> uncertainty, double tau,
                                               const std::set<ClassId>& ignore = {});

/// 8-connected components of the mask on the range image, dropping those
/// smaller than min_size, ordered by their first pixel in raster order.
/// Flat frames (no shape) fall back to runs of consecutive indices, reported
/// as row 0.
std::vector<AuditFinding> cluster_findings(std::span<const std::uint8_t> mask,
                                           std::optional<ImageShape> shape,
                                           std::span<const ClassId> pred,
                                           std::span<const ClassId> label,
                                           std::span<const double> uncertainty,
                                           std::size_t min_size, const std::string& frame_id = {});

/// Scores every finding and sorts by score descending, then frame id, then
/// first pixel.
std::vector<AuditFinding> rank_findings(std::vector<AuditFinding> findings);

struct AuditOptions {
  double tau = kDefaultAuditTau;
  std::size_t min_size = kDefaultAuditMinSize;
  UncertaintyKind kind = UncertaintyKind::entropy;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// Runs mask + clustering per frame and ranks all findings globally.
/// The uncertainty must be normalized to [0, 1].
std::vector<AuditFinding> audit_frames(std::span<const FrameRecord> frames,
                                       const ClassConfig& config, const AuditOptions& options);

}  // namespace segcal
