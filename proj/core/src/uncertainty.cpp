#include "segcal/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "segcal/error.hpp"
#include "segcal/rng.hpp"

namespace segcal {
namespace {

constexpr double kRowSumTolerance = 1e-5;
constexpr double kNegativeMiTolerance = 1e-9;

double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

void check_row(std::span<const double> row, std::size_t point) {
  double sum = 0.0;
  for (double p : row) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw InvalidInput("probability outside [0, 1] at point " + std::to_string(point));
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kRowSumTolerance) {
    throw InvalidInput("probabilities of point " + std::to_string(point) + " sum to " +
                       std::to_string(sum));
  }
}

// Writes softmax(x) into out and returns logsumexp(x).
double softmax_into(std::span<const double> x, std::span<double> out) {
  const double mx = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (std::size_t c = 0; c < x.size(); ++c) {
    out[c] = std::exp(x[c] - mx);
    sum += out[c];
  }
  for (double& v : out) v /= sum;
  return mx + std::log(sum);
}

void check_labels(const LogitGaussianField& field, std::span<const ClassId> labels,
                  const std::set<ClassId>& ignore) {
  field.validate();
  if (labels.size() != field.points) {
    throw InvalidInput("logit field has " + std::to_string(field.points) + " points but " +
                       std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const ClassId g = labels[i];
    if (ignore.contains(g)) continue;
    if (g < 0 || static_cast<std::size_t>(g) >= field.classes) {
      throw InvalidInput("label id " + std::to_string(g) + " out of range at index " +
                         std::to_string(i));
    }
  }
}

void check_noise(const LogitGaussianField& field, const LogitNoise& noise) {
  if (noise.points != field.points || noise.classes != field.classes || noise.samples == 0 ||
      noise.eps.size() != noise.samples * noise.points * noise.classes) {
    throw InvalidInput("logit noise does not match the field shape");
  }
}

}  // namespace

MCSampleSet::MCSampleSet(std::size_t samples, std::size_t points, std::size_t classes,
                         std::vector<double> probs)
    : samples_(samples), points_(points), classes_(classes), probs_(std::move(probs)) {
  if (classes_ == 0) throw InvalidInput("sample set needs at least one class");
  if (probs_.size() != samples_ * points_ * classes_) {
    throw InvalidInput("sample set holds " + std::to_string(probs_.size()) + " values, expected " +
                       std::to_string(samples_ * points_ * classes_));
  }
  for (std::size_t t = 0; t < samples_; ++t) {
    for (std::size_t i = 0; i < points_; ++i) check_row(row(t, i), i);
  }
}

void LogitGaussianField::validate() const {
  if (mu.size() != points * classes || sigma.size() != points * classes) {
    throw InvalidInput("logit field arrays do not match " + std::to_string(points) + " x " +
                       std::to_string(classes));
  }
  if (classes == 0) throw InvalidInput("logit field needs at least one class");
  if (logit_samples == 0) throw InvalidInput("logit sample count must be at least 1");
  for (std::size_t k = 0; k < mu.size(); ++k) {
    if (!std::isfinite(mu[k])) throw InvalidInput("non-finite logit mean at " + std::to_string(k / classes));
    if (!std::isfinite(sigma[k]) || sigma[k] < 0.0) {
      throw InvalidInput("invalid logit spread at " + std::to_string(k / classes));
    }
  }
}

MeanSoftmax mean_softmax(const MCSampleSet& samples) {
  const std::size_t T = samples.num_samples();
  if (T == 0) throw InvalidInput("mean softmax needs at least one sample");
  const std::size_t N = samples.num_points();
  const std::size_t C = samples.num_classes();
  MeanSoftmax out{N, C, std::vector<double>(N * C, 0.0), std::vector<ClassId>(N, 0)};
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < N; ++i) {
      const auto row = samples.row(t, i);
      for (std::size_t c = 0; c < C; ++c) out.probs[i * C + c] += row[c];
    }
  }
  const double inv_t = 1.0 / static_cast<double>(T);
  for (std::size_t i = 0; i < N; ++i) {
    ClassId best = 0;
    for (std::size_t c = 0; c < C; ++c) {
      double& p = out.probs[i * C + c];
      p *= inv_t;
      if (p > out.probs[i * C + static_cast<std::size_t>(best)]) best = static_cast<ClassId>(c);
    }
    out.pred[i] = best;
  }
  return out;
}

std::vector<double> predictive_entropy(std::span<const double> probs, std::size_t num_classes) {
  if (num_classes == 0 || probs.size() % num_classes != 0) {
    throw InvalidInput("probability array is not a multiple of the class count");
  }
  const std::size_t N = probs.size() / num_classes;
  const double bound = std::log(static_cast<double>(num_classes));
  std::vector<double> h(N);
  for (std::size_t i = 0; i < N; ++i) {
    const auto row = probs.subspan(i * num_classes, num_classes);
    check_row(row, i);
    double s = 0.0;
    for (double p : row) s -= xlogx(p);
    h[i] = std::min(s, bound);  // summation can overshoot ln C by an ulp
  }
  return h;
}

std::vector<double> mutual_information(const MCSampleSet& samples) {
  const std::size_t T = samples.num_samples();
  if (T < 2) throw InvalidInput("mutual information needs at least 2 samples");
  const std::size_t N = samples.num_points();
  const std::size_t C = samples.num_classes();
  const MeanSoftmax mean = mean_softmax(samples);
  std::vector<double> mi = predictive_entropy(mean.probs, C);
  const double inv_t = 1.0 / static_cast<double>(T);
  for (std::size_t i = 0; i < N; ++i) {
    double expected = 0.0;  // sum_{t,c} p ln p, always <= 0
    for (std::size_t t = 0; t < T; ++t) {
      for (double p : samples.row(t, i)) expected += xlogx(p);
    }
    double v = mi[i] + expected * inv_t;
    if (v < 0.0) {
      if (v < -kNegativeMiTolerance) {
        throw InvalidInput("mutual information " + std::to_string(v) + " at point " +
                           std::to_string(i) + " is negative beyond round-off");
      }
      v = 0.0;
    }
    mi[i] = v;
  }
  return mi;
}

std::vector<double> normalize_uncertainty(std::span<const double> u, std::size_t num_classes) {
  if (num_classes < 2) throw InvalidInput("normalization needs at least 2 classes");
  const double bound = std::log(static_cast<double>(num_classes));
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!(u[i] >= 0.0) || !std::isfinite(u[i])) {
      throw InvalidInput("uncertainty at index " + std::to_string(i) + " is negative or not finite");
    }
    out[i] = std::clamp(u[i] / bound, 0.0, 1.0);
  }
  return out;
}

LogitNoise draw_logit_noise(std::size_t samples, std::size_t points, std::size_t classes,
                            std::uint64_t seed) {
  LogitNoise noise{samples, points, classes, std::vector<double>(samples * points * classes)};
  const std::uint64_t key = rng::splitmix64(seed);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < points; ++i) {
      for (std::size_t c = 0; c < classes; ++c) {
        const std::uint64_t counter = (static_cast<std::uint64_t>(i) * samples + s) * classes + c;
        noise.eps[(s * points + i) * classes + c] = rng::standard_normal(key, counter);
      }
    }
  }
  return noise;
}

MCSampleSet sample_logits(const LogitGaussianField& field, const LogitNoise& noise) {
  field.validate();
  check_noise(field, noise);
  const std::size_t S = noise.samples;
  const std::size_t N = field.points;
  const std::size_t C = field.classes;
  std::vector<double> probs(S * N * C);
  std::vector<double> x(C);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t c = 0; c < C; ++c) {
        x[c] = field.mu[i * C + c] + field.sigma[i * C + c] * noise.at(s, i, c);
      }
      softmax_into(x, std::span<double>(probs.data() + (s * N + i) * C, C));
    }
  }
  return MCSampleSet(S, N, C, std::move(probs));
}

MCSampleSet sample_logits(const LogitGaussianField& field, std::uint64_t seed) {
  return sample_logits(field, draw_logit_noise(field.logit_samples, field.points, field.classes, seed));
}

LogitLossGradient logit_loss_grad(const LogitGaussianField& field, std::span<const ClassId> labels,
                                  const LogitNoise& noise, const std::set<ClassId>& ignore) {
  check_labels(field, labels, ignore);
  check_noise(field, noise);
  const std::size_t S = noise.samples;
  const std::size_t N = field.points;
  const std::size_t C = field.classes;
  const double log_s = std::log(static_cast<double>(S));

  LogitLossGradient out{0.0, std::vector<double>(N * C, 0.0), std::vector<double>(N * C, 0.0)};
  std::vector<double> x(C);
  std::vector<double> p(S * C);    // softmax per sample
  std::vector<double> ll(S);       // log-softmax of the label per sample
  for (std::size_t i = 0; i < N; ++i) {
    if (ignore.contains(labels[i])) continue;
    const auto label = static_cast<std::size_t>(labels[i]);
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t c = 0; c < C; ++c) {
        x[c] = field.mu[i * C + c] + field.sigma[i * C + c] * noise.at(s, i, c);
      }
      const double lse = softmax_into(x, std::span<double>(p.data() + s * C, C));
      ll[s] = x[label] - lse;
    }
    // loss_i = -(logsumexp_s ll_s - ln S); weights w_s = softmax_s(ll).
    const double mx = *std::max_element(ll.begin(), ll.end());
    double z = 0.0;
    for (std::size_t s = 0; s < S; ++s) z += std::exp(ll[s] - mx);
    out.loss -= mx + std::log(z) - log_s;
    for (std::size_t s = 0; s < S; ++s) {
      const double w = std::exp(ll[s] - mx) / z;
      for (std::size_t c = 0; c < C; ++c) {
        const double g = w * (p[s * C + c] - (c == label ? 1.0 : 0.0));
        out.d_mu[i * C + c] += g;
        out.d_sigma[i * C + c] += g * noise.at(s, i, c);
      }
    }
  }
  return out;
}

LogitLossGradient logit_loss_grad(const LogitGaussianField& field, std::span<const ClassId> labels,
                                  std::uint64_t seed, const std::set<ClassId>& ignore) {
  return logit_loss_grad(field, labels,
                         draw_logit_noise(field.logit_samples, field.points, field.classes, seed),
                         ignore);
}

double logit_loss(const LogitGaussianField& field, std::span<const ClassId> labels,
                  const LogitNoise& noise, const std::set<ClassId>& ignore) {
  return logit_loss_grad(field, labels, noise, ignore).loss;
}

double logit_loss(const LogitGaussianField& field, std::span<const ClassId> labels,
                  std::uint64_t seed, const std::set<ClassId>& ignore) {
  return logit_loss_grad(field, labels, seed, ignore).loss;
}

std::vector<double> class_weights(std::span<const double> frequencies) {
  std::vector<double> w(frequencies.size());
  for (std::size_t c = 0; c < frequencies.size(); ++c) {
    const double f = frequencies[c];
    if (!(f >= 0.0 && f <= 1.0)) {
      throw InvalidInput("frequency of class " + std::to_string(c) + " outside [0, 1]");
    }
    w[c] = 1.0 / std::log(1.02 + f);
  }
  return w;
}

}  // namespace segcal
