#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include "segcal/metrics.hpp"

namespace segcal {

/// MC-dropout default sample count (T) and logit-sampling default (S).
inline constexpr std::size_t kDefaultDropoutSamples = 30;
inline constexpr std::size_t kDefaultLogitSamples = 10;

/// T x N x C class probabilities, one softmax output per stochastic pass.
/// Stored sample-major: probs[(t * N + i) * C + c].
class MCSampleSet {
 public:
  MCSampleSet() = default;
  /// Validates shape, range [0, 1] and row sums (1 within 1e-5).
  MCSampleSet(std::size_t samples, std::size_t points, std::size_t classes,
              std::vector<double> probs);

  std::size_t num_samples() const noexcept { return samples_; }
  std::size_t num_points() const noexcept { return points_; }
  std::size_t num_classes() const noexcept { return classes_; }
  const std::vector<double>& data() const noexcept { return probs_; }

  std::span<const double> row(std::size_t sample, std::size_t point) const {
    return {probs_.data() + (sample * points_ + point) * classes_, classes_};
  }

  bool operator==(const MCSampleSet&) const = default;

 private:
  std::size_t samples_ = 0;
  std::size_t points_ = 0;
  std::size_t classes_ = 0;
  std::vector<double> probs_;
};

/// Per-class Gaussian over logits: x = mu + sigma * eps. Point-major N x C.
struct LogitGaussianField {
  std::size_t points = 0;
  std::size_t classes = 0;
  std::vector<double> mu;
  std::vector<double> sigma;
  std::size_t logit_samples = kDefaultLogitSamples;

  /// Throws InvalidInput on shape mismatch, non-finite entries, negative
  /// sigma or zero sample count.
  void validate() const;
  bool operator==(const LogitGaussianField&) const = default;
};

struct MeanSoftmax {
  std::size_t points = 0;
  std::size_t classes = 0;
  std::vector<double> probs;  // N x C
  std::vector<ClassId> pred;  // argmax, ties to the lowest class id
};

MeanSoftmax mean_softmax(const MCSampleSet& samples);

/// H[i] = -sum_c p[i][c] ln p[i][c], with 0 ln 0 = 0. `probs` is N x C.
std::vector<double> predictive_entropy(std::span<const double> probs, std::size_t num_classes);

/// I[i] = H(mean_t p_t) + (1/T) sum_{t,c} p ln p. Requires T >= 2.
/// Round-off negatives down to -1e-9 are clamped to zero; anything lower
/// is reported as an error.
std::vector<double> mutual_information(const MCSampleSet& samples);

/// u / ln C clamped to [0, 1]. The same bound serves entropy and mutual
/// information because I <= H <= ln C.
std::vector<double> normalize_uncertainty(std::span<const double> u, std::size_t num_classes);

/// Standard-normal draws for logit sampling, S x N x C sample-major.
/// The draw for (sample s, point i, class c) depends only on the seed and
/// (i, s, c), so any subset of points can be regenerated independently.
struct LogitNoise {
  std::size_t samples = 0;
  std::size_t points = 0;
  std::size_t classes = 0;
  std::vector<double> eps;

  double at(std::size_t s, std::size_t i, std::size_t c) const {
    return eps[(s * points + i) * classes + c];
  }
};

LogitNoise draw_logit_noise(std::size_t samples, std::size_t points, std::size_t classes,
                            std::uint64_t seed);

/// softmax(mu + sigma * eps) for each of the field's S samples.
MCSampleSet sample_logits(const LogitGaussianField& field, const LogitNoise& noise);
MCSampleSet sample_logits(const LogitGaussianField& field, std::uint64_t seed);

/// Negative log of the sample-averaged softmax likelihood of the label:
///   -sum_i ln[(1/S) sum_s exp(x_{i,s,c_i} - logsumexp_c' x_{i,s,c'})]
/// This is the negated log-likelihood, so lower is better. Points whose
/// label is in `ignore` are skipped.
double logit_loss(const LogitGaussianField& field, std::span<const ClassId> labels,
                  const LogitNoise& noise, const std::set<ClassId>& ignore = {});
double logit_loss(const LogitGaussianField& field, std::span<const ClassId> labels,
                  std::uint64_t seed, const std::set<ClassId>& ignore = {});

struct LogitLossGradient {
  double loss = 0.0;
  std::vector<double> d_mu;     // N x C
  std::vector<double> d_sigma;  // N x C
};

/// Exact gradient of logit_loss with the noise draws held fixed.
LogitLossGradient logit_loss_grad(const LogitGaussianField& field, std::span<const ClassId> labels,
                                  const LogitNoise& noise, const std::set<ClassId>& ignore = {});
LogitLossGradient logit_loss_grad(const LogitGaussianField& field, std::span<const ClassId> labels,
                                  std::uint64_t seed, const std::set<ClassId>& ignore = {});

/// weight_c = 1 / ln(1.02 + f_c).
std::vector<double> class_weights(std::span<const double> frequencies);

}  // namespace segcal
