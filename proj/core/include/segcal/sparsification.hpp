#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "segcal/frame.hpp"
#include "segcal/metrics.hpp"

namespace segcal {

inline constexpr std::size_t kDefaultSteps = 100;

/// Removal fractions f_k = k / K for k = 0 .. K-1. The curve stops one
/// step short of 1 because nothing remains to score at f = 1.
class FractionGrid {
 public:
  explicit FractionGrid(std::size_t steps = kDefaultSteps);

  std::size_t steps() const noexcept { return steps_; }
  double fraction(std::size_t k) const noexcept {
    return static_cast<double>(k) / static_cast<double>(steps_);
  }
  double last_fraction() const noexcept { return fraction(steps_ - 1); }
  std::vector<double> fractions() const;

  /// floor(k * n / K), in exact integer arithmetic.
  std::uint64_t removal_count(std::size_t k, std::uint64_t n) const noexcept {
    return static_cast<std::uint64_t>(k) * n / steps_;
  }

  bool operator==(const FractionGrid&) const = default;

 private:
  std::size_t steps_;
};

/// Indices sorted by uncertainty, highest first; ties keep ascending index.
/// Throws InvalidInput naming the first NaN.
std::vector<std::size_t> uncertainty_ranking(std::span<const double> u, std::size_t threads = 1);

/// Best removal order for class c: class-c errors (exactly one of pred == c,
/// label == c), then every other point that is not a true positive of c,
/// then the true positives of c. Ascending index within each group.
std::vector<std::size_t> oracle_ranking(std::span<const ClassId> pred,
                                        std::span<const ClassId> label, ClassId c);

/// A point is relevant to class c when its label or prediction is c; only
/// these points enter IoU_c. Returns IoU_c of the remaining relevant points
/// after removing the first m of them in ranking order, for
/// m = 0 .. N_c - 1. Empty when the class has no relevant points.
std::vector<double> removal_profile(std::span<const ClassId> pred, std::span<const ClassId> label,
                                    std::span<const std::size_t> ranking, ClassId c);

/// Sparsification curve of class c on the grid: at f_k the first
/// floor(f_k * N_c) relevant points of the ranking are removed, where N_c is
/// the class's relevant point count. A class without relevant points gets
/// the constant 1.0 curve. `ranking` must be a permutation of all points.
std::vector<double> sparsification_curve(std::span<const ClassId> pred,
                                         std::span<const ClassId> label,
                                         std::span<const std::size_t> ranking, ClassId c,
                                         const FractionGrid& grid);

/// Closed form of the oracle curve from the class's true positives and
/// errors (FP + FN); equals sparsification_curve over oracle_ranking.
std::vector<double> oracle_curve(std::uint64_t true_positives, std::uint64_t errors,
                                 const FractionGrid& grid);

struct Ause {
  /// Trapezoidal area of (oracle - sparsification) over [0, f_{K-1}],
  /// divided by f_{K-1}; lies in [0, 1] when the oracle dominates.
  double normalized = 0.0;
  /// Plain sum of the error curve over the K grid points.
  double paper_scale = 0.0;

  bool operator==(const Ause&) const = default;
};

Ause ause(std::span<const double> oracle, std::span<const double> sparsification,
          const FractionGrid& grid);

struct ClassReport {
  ClassId id = 0;
  std::string name;
  /// False for class ids listed in ignore_ids.
  bool scored = true;
  bool present = false;
  /// Present but never predicted correctly: every curve is identically 0
  /// and the AUSE is 0 regardless of the uncertainty.
  bool degenerate = false;
  double iou = 1.0;
  std::uint64_t true_positives = 0;
  std::uint64_t false_positives = 0;
  std::uint64_t false_negatives = 0;
  std::vector<double> oracle;
  std::vector<double> sparsification;
  std::vector<double> error;
  /// Mean / population std of the uncertainty over the class's remaining
  /// relevant points at each step (0 when none remain).
  std::vector<double> mean_uncertainty;
  std::vector<double> std_uncertainty;
  Ause ause;

  bool operator==(const ClassReport&) const = default;
};

inline constexpr int kReportSchema = 1;

struct SparsificationReport {
  int schema = kReportSchema;
  std::string uncertainty;
  std::string mode = "exact";
  std::size_t bins = 0;
  std::size_t steps = kDefaultSteps;
  std::vector<double> fractions;
  std::uint64_t num_frames = 0;
  std::uint64_t num_points = 0;
  std::uint64_t num_ignored = 0;
  std::vector<ClassReport> classes;
  /// Averages over present, scored classes.
  double miou = 1.0;
  std::vector<double> mean_oracle;
  std::vector<double> mean_sparsification;
  std::vector<double> mean_error;
  Ause mean_ause;
  /// Mean / std of the uncertainty of all remaining points when the
  /// fraction f_k of all evaluated points is removed.
  std::vector<double> remaining_mean;
  std::vector<double> remaining_std;

  bool operator==(const SparsificationReport&) const = default;
};

/// Evaluated points of a dataset in canonical order (frames sorted by id,
/// points in frame order), with ignored labels dropped.
struct PooledPoints {
  std::vector<ClassId> pred;
  std::vector<ClassId> label;
  std::vector<double> uncertainty;
  std::uint64_t num_frames = 0;
  std::uint64_t num_ignored = 0;

  std::size_t size() const noexcept { return label.size(); }
};

struct EvaluationOptions {
  UncertaintyKind kind = UncertaintyKind::entropy;
  FractionGrid grid{};
  std::size_t threads = 1;
  /// Seed for aleatoric logit sampling.
  std::uint64_t seed = 0;
};

/// Validates frames, derives their uncertainty and pools them. Frame ids
/// must be unique; the result does not depend on the order of `frames`.
PooledPoints pool_frames(std::span<const FrameRecord> frames, const ClassConfig& config,
                         const EvaluationOptions& options);

/// Exact report from already pooled points (ids assumed validated).
SparsificationReport evaluate_pooled(const PooledPoints& points, const ClassConfig& config,
                                     const EvaluationOptions& options);

/// Pools every evaluated point of the dataset into one global ranking and
/// builds the full report by exact sorting.
SparsificationReport evaluate_dataset(std::span<const FrameRecord> frames,
                                      const ClassConfig& config, const EvaluationOptions& options);

/// Streaming approximation: one pass accumulates per-class TP / error
/// histograms over `bins` equal-width uncertainty bins on [0, 1]; curves
/// are rebuilt from cumulative bin sums, assuming uniform mixing inside the
/// bin that straddles a removal boundary. Memory is O(bins * C). The
/// uncertainty must already lie in [0, 1]. Accuracy degrades as bins
/// shrink; with one bin every curve is flat at the full-set IoU.
SparsificationReport binned_evaluate(std::span<const FrameRecord> frames,
                                     const ClassConfig& config, const EvaluationOptions& options,
                                     std::size_t bins);

}  // namespace segcal
