#include "segcal/metrics.hpp"

#include <numeric>
#include <sstream>

#include "segcal/error.hpp"

namespace segcal {

void ClassConfig::validate() const {
  if (num_classes() < 2) {
    throw InvalidInput("class config needs at least 2 classes, got " +
                       std::to_string(num_classes()));
  }
  for (ClassId id : ignore_ids) {
    if (id < 0) throw InvalidInput("negative ignore id " + std::to_string(id));
  }
  if (frequencies) {
    if (frequencies->size() != num_classes()) {
      throw InvalidInput("class config has " + std::to_string(num_classes()) +
                         " names but " + std::to_string(frequencies->size()) + " frequencies");
    }
    for (std::size_t c = 0; c < frequencies->size(); ++c) {
      const double f = (*frequencies)[c];
      if (!(f >= 0.0 && f <= 1.0)) {
        throw InvalidInput("frequency of class " + std::to_string(c) + " outside [0, 1]");
      }
    }
  }
}

ClassConfig ClassConfig::numbered(std::size_t num_classes) {
  ClassConfig config;
  config.names.reserve(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) config.names.push_back("class_" + std::to_string(c));
  return config;
}

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : num_classes_(num_classes), counts_(num_classes * num_classes, 0) {}

std::uint64_t ConfusionMatrix::evaluated() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::false_positives(std::size_t c) const {
  std::uint64_t fp = 0;
  for (std::size_t g = 0; g < num_classes_; ++g) {
    if (g != c) fp += at(g, c);
  }
  return fp;
}

std::uint64_t ConfusionMatrix::false_negatives(std::size_t c) const {
  std::uint64_t fn = 0;
  for (std::size_t p = 0; p < num_classes_; ++p) {
    if (p != c) fn += at(c, p);
  }
  return fn;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.num_classes_ != num_classes_) {
    throw InvalidInput("cannot merge confusion matrices with different class counts");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  ignored_ += other.ignored_;
  return *this;
}

ConfusionMatrix confusion_matrix(std::span<const ClassId> pred, std::span<const ClassId> label,
                                 const ClassConfig& config, std::string_view frame_id) {
  if (pred.size() != label.size()) {
    std::ostringstream msg;
    msg << "frame '" << frame_id << "': " << pred.size() << " predictions but " << label.size()
        << " labels";
    throw InvalidInput(msg.str());
  }
  const auto num_classes = static_cast<ClassId>(config.num_classes());
  ConfusionMatrix cm(config.num_classes());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const ClassId g = label[i];
    const ClassId p = pred[i];
    if (config.is_ignored(g)) {
      if (!(p >= 0 && (p < num_classes || config.is_ignored(p)))) {
        std::ostringstream msg;
        msg << "frame '" << frame_id << "': prediction id " << p << " out of range at index " << i;
        throw InvalidInput(msg.str());
      }
      cm.add_ignored();
      continue;
    }
    if (g < 0 || g >= num_classes) {
      std::ostringstream msg;
      msg << "frame '" << frame_id << "': label id " << g << " out of range at index " << i;
      throw InvalidInput(msg.str());
    }
    if (p < 0 || p >= num_classes) {
      std::ostringstream msg;
      msg << "frame '" << frame_id << "': prediction id " << p << " out of range at index " << i;
      throw InvalidInput(msg.str());
    }
    cm.add(static_cast<std::size_t>(g), static_cast<std::size_t>(p));
  }
  return cm;
}

std::vector<ClassIoU> iou_per_class(const ConfusionMatrix& cm) {
  std::vector<ClassIoU> out(cm.num_classes());
  for (std::size_t c = 0; c < cm.num_classes(); ++c) {
    const std::uint64_t tp = cm.true_positives(c);
    const std::uint64_t denom = tp + cm.false_positives(c) + cm.false_negatives(c);
    if (denom == 0) {
      out[c] = {1.0, false};
    } else {
      out[c] = {static_cast<double>(tp) / static_cast<double>(denom), true};
    }
  }
  return out;
}

double miou(std::span<const ClassIoU> ious) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const ClassIoU& v : ious) {
    if (!v.present) continue;
    sum += v.iou;
    ++n;
  }
  return n == 0 ? 1.0 : sum / static_cast<double>(n);
}

}  // namespace segcal
