#include "segcal/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "segcal/error.hpp"
#include "segcal/parallel.hpp"

namespace segcal {
namespace {

std::size_t confidence_bin(double confidence, std::size_t bins) {
  return std::min(bins - 1, static_cast<std::size_t>(confidence * static_cast<double>(bins)));
}

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

EceAccumulator::EceAccumulator(std::size_t bins)
    : n_(bins, 0), hits_(bins, 0), confidence_sum_(bins, 0.0) {
  if (bins == 0) throw InvalidInput("ECE needs at least one bin");
}

void EceAccumulator::add(double confidence, bool correct) {
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw InvalidInput("confidence " + std::to_string(confidence) + " outside [0, 1]");
  }
  const std::size_t b = confidence_bin(confidence, n_.size());
  ++n_[b];
  if (correct) ++hits_[b];
  confidence_sum_[b] += confidence;
  ++total_;
}

EceAccumulator& EceAccumulator::operator+=(const EceAccumulator& other) {
  if (other.n_.size() != n_.size()) throw InvalidInput("cannot merge ECE with different bins");
  for (std::size_t b = 0; b < n_.size(); ++b) {
    n_[b] += other.n_[b];
    hits_[b] += other.hits_[b];
    confidence_sum_[b] += other.confidence_sum_[b];
  }
  total_ += other.total_;
  return *this;
}

double EceAccumulator::value() const {
  if (total_ == 0) throw InvalidInput("ECE of an empty input");
  double out = 0.0;
  for (std::size_t b = 0; b < n_.size(); ++b) {
    if (n_[b] == 0) continue;
    const auto nb = static_cast<double>(n_[b]);
    const double acc = static_cast<double>(hits_[b]) / nb;
    const double conf = confidence_sum_[b] / nb;
    out += nb / static_cast<double>(total_) * std::abs(acc - conf);
  }
  return out;
}

double ece(std::span<const double> confidence, std::span<const std::uint8_t> correct,
           std::size_t bins) {
  if (confidence.size() != correct.size()) {
    throw InvalidInput("ECE inputs differ in length");
  }
  if (confidence.empty()) throw InvalidInput("ECE of an empty input");
  EceAccumulator acc(bins);
  for (std::size_t i = 0; i < confidence.size(); ++i) acc.add(confidence[i], correct[i] != 0);
  return acc.value();
}

void PatchSpec::validate() const {
  if (height == 0 || width == 0) throw InvalidInput("patch dimensions must be at least 1");
  if (!(accuracy_threshold >= 0.0 && accuracy_threshold <= 1.0)) {
    throw InvalidInput("accuracy threshold outside [0, 1]");
  }
  if (uncertainty_threshold && !(*uncertainty_threshold >= 0.0 && *uncertainty_threshold <= 1.0)) {
    throw InvalidInput("uncertainty threshold outside [0, 1]");
  }
}

PatchCounts& PatchCounts::operator+=(const PatchCounts& o) noexcept {
  accurate_certain += o.accurate_certain;
  accurate_uncertain += o.accurate_uncertain;
  inaccurate_certain += o.inaccurate_certain;
  inaccurate_uncertain += o.inaccurate_uncertain;
  return *this;
}

PavpuResult PatchCounts::result() const {
  return {ratio(accurate_certain, accurate_certain + inaccurate_certain),
          ratio(inaccurate_uncertain, inaccurate_certain + inaccurate_uncertain),
          ratio(accurate_certain + inaccurate_uncertain, total())};
}

PatchCounts patch_counts(std::span<const ClassId> pred, std::span<const ClassId> label,
                         std::span<const double> uncertainty, ImageShape shape,
                         const PatchSpec& spec, double uncertainty_threshold,
                         const std::set<ClassId>& ignore) {
  spec.validate();
  if (pred.size() != label.size() || uncertainty.size() != label.size() ||
      shape.size() != label.size()) {
    throw InvalidInput("PAvPU inputs do not match the frame shape");
  }
  PatchCounts counts;
  for (std::size_t r0 = 0; r0 < shape.height; r0 += spec.height) {
    for (std::size_t c0 = 0; c0 < shape.width; c0 += spec.width) {
      std::uint64_t n = 0;
      std::uint64_t hits = 0;
      double u_sum = 0.0;
      for (std::size_t r = r0; r < std::min(r0 + spec.height, shape.height); ++r) {
        for (std::size_t c = c0; c < std::min(c0 + spec.width, shape.width); ++c) {
          const std::size_t i = r * shape.width + c;
          if (ignore.contains(label[i])) continue;
          ++n;
          if (pred[i] == label[i]) ++hits;
          u_sum += uncertainty[i];
        }
      }
      if (n == 0) continue;
      const bool accurate =
          static_cast<double>(hits) / static_cast<double>(n) > spec.accuracy_threshold;
      const bool certain = u_sum / static_cast<double>(n) <= uncertainty_threshold;
      if (accurate && certain) ++counts.accurate_certain;
      else if (accurate) ++counts.accurate_uncertain;
      else if (certain) ++counts.inaccurate_certain;
      else ++counts.inaccurate_uncertain;
    }
  }
  return counts;
}

PavpuResult pavpu(std::span<const ClassId> pred, std::span<const ClassId> label,
                  std::span<const double> uncertainty, std::optional<ImageShape> shape,
                  const PatchSpec& spec, const std::set<ClassId>& ignore) {
  if (!shape) throw InvalidInput("PAvPU needs a 2D frame shape");
  double threshold = 0.0;
  if (spec.uncertainty_threshold) {
    threshold = *spec.uncertainty_threshold;
  } else {
    double sum = 0.0;
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < label.size() && i < uncertainty.size(); ++i) {
      if (ignore.contains(label[i])) continue;
      sum += uncertainty[i];
      ++n;
    }
    threshold = n == 0 ? 0.0 : sum / static_cast<double>(n);
  }
  return patch_counts(pred, label, uncertainty, *shape, spec, threshold, ignore).result();
}

BaselineReport evaluate_baselines(std::span<const FrameRecord> frames, const ClassConfig& config,
                                  UncertaintyKind kind, std::size_t ece_bins,
                                  const PatchSpec& spec, std::uint64_t seed, std::size_t threads) {
  config.validate();
  spec.validate();
  std::vector<std::vector<double>> u(frames.size());
  parallel_for(frames.size(), threads, [&](std::size_t j) {
    frames[j].validate(config);
    if (!frames[j].shape) {
      throw InvalidInput("frame '" + frames[j].frame_id + "': PAvPU needs a 2D frame shape");
    }
    u[j] = frame_uncertainty(frames[j], kind, config.num_classes(), seed);
    for (std::size_t i = 0; i < u[j].size(); ++i) {
      if (!(u[j][i] >= 0.0 && u[j][i] <= 1.0)) {
        throw InvalidInput("frame '" + frames[j].frame_id +
                           "': baselines need uncertainty in [0, 1], got " +
                           std::to_string(u[j][i]) + " at index " + std::to_string(i));
      }
    }
  });

  BaselineReport report;
  report.ece_bins = ece_bins;
  report.patch = spec;
  EceAccumulator acc(ece_bins);
  double u_sum = 0.0;
  for (std::size_t j = 0; j < frames.size(); ++j) {
    for (std::size_t i = 0; i < frames[j].size(); ++i) {
      if (config.is_ignored(frames[j].label[i])) continue;
      acc.add(1.0 - u[j][i], frames[j].pred[i] == frames[j].label[i]);
      u_sum += u[j][i];
    }
  }
  report.num_points = acc.count();
  report.ece = acc.value();
  report.resolved_uncertainty_threshold =
      spec.uncertainty_threshold ? *spec.uncertainty_threshold
                                 : u_sum / static_cast<double>(report.num_points);
  for (std::size_t j = 0; j < frames.size(); ++j) {
    report.counts += patch_counts(frames[j].pred, frames[j].label, u[j], *frames[j].shape, spec,
                                  report.resolved_uncertainty_threshold, config.ignore_ids);
  }
  report.pavpu = report.counts.result();
  return report;
}

}  // namespace segcal
