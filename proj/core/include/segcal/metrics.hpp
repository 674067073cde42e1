#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace segcal {

using ClassId = std::int32_t;

/// Class table shared by every evaluation.
///
/// Label ids equal to an entry of `ignore_ids` are excluded from all
/// metrics. Ignore ids may lie outside [0, num_classes) (e.g. 255), or
/// inside it, in which case that class is never scored.
struct ClassConfig {
  std::vector<std::string> names;
  std::set<ClassId> ignore_ids;
  /// Fraction of dataset points per class, used only for class weights.
  std::optional<std::vector<double>> frequencies;

  std::size_t num_classes() const noexcept { return names.size(); }
  bool is_ignored(ClassId id) const { return ignore_ids.contains(id); }
  bool is_scored(ClassId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < num_classes() && !is_ignored(id);
  }

  /// Throws InvalidInput when C < 2, an ignore id is negative, or a
  /// frequency is outside [0, 1].
  void validate() const;

  /// Config with names "class_0" .. "class_{C-1}".
  static ClassConfig numbered(std::size_t num_classes);
};

/// counts(g, p) = number of points with ground truth g predicted as p.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes);

  std::size_t num_classes() const noexcept { return num_classes_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * num_classes_ + predicted];
  }
  void add(std::size_t truth, std::size_t predicted, std::uint64_t n = 1) {
    counts_[truth * num_classes_ + predicted] += n;
  }
  void add_ignored(std::uint64_t n = 1) noexcept { ignored_ += n; }

  std::uint64_t ignored() const noexcept { return ignored_; }
  std::uint64_t evaluated() const;
  std::uint64_t total() const { return evaluated() + ignored_; }

  std::uint64_t true_positives(std::size_t c) const { return at(c, c); }
  std::uint64_t false_positives(std::size_t c) const;
  std::uint64_t false_negatives(std::size_t c) const;

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend ConfusionMatrix operator+(ConfusionMatrix a, const ConfusionMatrix& b) {
    a += b;
    return a;
  }
  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t num_classes_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t ignored_ = 0;
};

/// Tallies a frame. Points whose label is ignored only bump `ignored()`.
/// A prediction must be a valid class id unless the label is ignored.
/// Errors name `frame_id` and the offending index.
ConfusionMatrix confusion_matrix(std::span<const ClassId> pred, std::span<const ClassId> label,
                                 const ClassConfig& config, std::string_view frame_id = {});

struct ClassIoU {
  double iou = 1.0;
  /// False when the class has no ground truth and no predictions; the
  /// IoU is then reported as 1.0 and excluded from means.
  bool present = false;

  bool operator==(const ClassIoU&) const = default;
};

/// IoU_c = TP / (TP + FP + FN) for every class.
std::vector<ClassIoU> iou_per_class(const ConfusionMatrix& cm);

/// Mean IoU over present classes; 1.0 if none is present.
double miou(std::span<const ClassIoU> ious);

}  // namespace segcal
