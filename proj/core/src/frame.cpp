#include "segcal/frame.hpp"

#include <cmath>

#include "segcal/error.hpp"
#include "segcal/rng.hpp"

namespace segcal {

void FrameRecord::validate(const ClassConfig& config) const {
  const std::string where = "frame '" + frame_id + "': ";
  if (pred.size() != label.size()) {
    throw InvalidInput(where + std::to_string(pred.size()) + " predictions but " +
                       std::to_string(label.size()) + " labels");
  }
  const std::size_t n = label.size();
  if (shape && shape->size() != n) {
    throw InvalidInput(where + "shape " + std::to_string(shape->height) + "x" +
                       std::to_string(shape->width) + " does not hold " + std::to_string(n) +
                       " points");
  }
  // Reuses the id checks of the confusion matrix.
  (void)confusion_matrix(pred, label, config, frame_id);
  if (uncertainty) {
    if (uncertainty->size() != n) {
      throw InvalidInput(where + "uncertainty has " + std::to_string(uncertainty->size()) +
                         " values for " + std::to_string(n) + " points");
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (*uncertainty)[i];
      if (!std::isfinite(u) || u < 0.0) {
        throw InvalidInput(where + "uncertainty at index " + std::to_string(i) +
                           " is negative or not finite");
      }
    }
  }
  if (samples) {
    if (samples->num_points() != n || samples->num_classes() != config.num_classes()) {
      throw InvalidInput(where + "MC samples do not match " + std::to_string(n) + " points x " +
                         std::to_string(config.num_classes()) + " classes");
    }
  }
  if (logit_field) {
    if (logit_field->points != n || logit_field->classes != config.num_classes()) {
      throw InvalidInput(where + "logit field does not match " + std::to_string(n) +
                         " points x " + std::to_string(config.num_classes()) + " classes");
    }
    logit_field->validate();
  }
}

std::string_view to_string(UncertaintyKind kind) {
  switch (kind) {
    case UncertaintyKind::entropy: return "entropy";
    case UncertaintyKind::mutual_information: return "mutual_information";
    case UncertaintyKind::aleatoric: return "aleatoric";
    case UncertaintyKind::precomputed: return "precomputed";
  }
  return "unknown";
}

UncertaintyKind parse_uncertainty_kind(std::string_view name) {
  if (name == "entropy") return UncertaintyKind::entropy;
  if (name == "mutual_information") return UncertaintyKind::mutual_information;
  if (name == "aleatoric") return UncertaintyKind::aleatoric;
  if (name == "precomputed") return UncertaintyKind::precomputed;
  throw InvalidInput("unknown uncertainty kind '" + std::string(name) + "'");
}

std::uint64_t frame_seed(std::uint64_t seed, std::string_view frame_id) {
  return rng::combine(rng::splitmix64(seed), rng::fnv1a(frame_id));
}

std::vector<double> frame_uncertainty(const FrameRecord& frame, UncertaintyKind kind,
                                      std::size_t num_classes, std::uint64_t seed) {
  const std::string where = "frame '" + frame.frame_id + "': ";
  switch (kind) {
    case UncertaintyKind::entropy: {
      if (!frame.samples) throw InvalidInput(where + "entropy needs MC probability samples");
      const MeanSoftmax mean = mean_softmax(*frame.samples);
      return normalize_uncertainty(predictive_entropy(mean.probs, num_classes), num_classes);
    }
    case UncertaintyKind::mutual_information: {
      if (!frame.samples) {
        throw InvalidInput(where + "mutual information needs MC probability samples");
      }
      return normalize_uncertainty(mutual_information(*frame.samples), num_classes);
    }
    case UncertaintyKind::aleatoric: {
      if (!frame.logit_field) throw InvalidInput(where + "aleatoric uncertainty needs logit mean/spread");
      const MCSampleSet drawn = sample_logits(*frame.logit_field, frame_seed(seed, frame.frame_id));
      const MeanSoftmax mean = mean_softmax(drawn);
      return normalize_uncertainty(predictive_entropy(mean.probs, num_classes), num_classes);
    }
    case UncertaintyKind::precomputed: {
      if (!frame.uncertainty) throw InvalidInput(where + "no precomputed uncertainty");
      return *frame.uncertainty;
    }
  }
  throw InvalidInput(where + "unsupported uncertainty kind");
}

}  // namespace segcal
