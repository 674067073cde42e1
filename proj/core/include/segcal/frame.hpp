#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "segcal/metrics.hpp"
#include "segcal/uncertainty.hpp"

namespace segcal {

struct ImageShape {
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const noexcept { return height * width; }
  bool operator==(const ImageShape&) const = default;
};

/// One evaluation frame. Pixel i of a range image is row i / width,
/// column i % width. Flat frames have no shape.
struct FrameRecord {
  std::string frame_id;
  std::optional<ImageShape> shape;
  std::vector<ClassId> pred;
  std::vector<ClassId> label;
  std::optional<std::vector<double>> uncertainty;
  std::optional<MCSampleSet> samples;
  std::optional<LogitGaussianField> logit_field;

  std::size_t size() const noexcept { return label.size(); }

  /// Checks lengths, ids against `config`, and finiteness/non-negativity
  /// of the uncertainty. Messages carry the frame id.
  void validate(const ClassConfig& config) const;
};

enum class UncertaintyKind { entropy, mutual_information, aleatoric, precomputed };

std::string_view to_string(UncertaintyKind kind);
/// Throws InvalidInput for unknown names.
UncertaintyKind parse_uncertainty_kind(std::string_view name);

/// Per-point uncertainty of the requested kind:
///  - entropy / mutual_information: from the MC samples, normalized by ln C;
///  - aleatoric: normalized entropy of the mean softmax over S logit draws,
///    seeded per frame from (seed, frame_id);
///  - precomputed: the frame's uncertainty array as stored.
std::vector<double> frame_uncertainty(const FrameRecord& frame, UncertaintyKind kind,
                                      std::size_t num_classes, std::uint64_t seed = 0);

/// Seed for per-frame random draws, independent of frame order.
std::uint64_t frame_seed(std::uint64_t seed, std::string_view frame_id);

}  // namespace segcal
