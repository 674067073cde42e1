#include "segcal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "segcal/error.hpp"
#include "segcal/parallel.hpp"
#include "segcal/rng.hpp"

namespace segcal {
namespace {

// Mixing weight of the uniform distribution, per regime.
constexpr double kConfidentLo = 0.0005;
constexpr double kConfidentHi = 0.01;
constexpr double kUnsureLo = 0.5;
constexpr double kUnsureHi = 0.95;
constexpr double kConstantMix = 0.3;

std::string frame_name(std::size_t f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06zu", f);
  return buf;
}

// Exact per-class pixel counts by largest remainder.
std::vector<std::size_t> class_quotas(const ScenarioSpec& spec) {
  const std::size_t C = spec.num_classes;
  const std::size_t total = spec.shape.size();
  std::vector<double> w = spec.class_fractions;
  if (w.empty()) w.assign(C, 1.0);
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<std::size_t> quota(C);
  std::vector<std::pair<double, std::size_t>> rem(C);
  std::size_t used = 0;
  for (std::size_t c = 0; c < C; ++c) {
    const double exact = w[c] / sum * static_cast<double>(total);
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    used += quota[c];
    rem[c] = {exact - std::floor(exact), c};
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t j = 0; used < total; ++j, ++used) ++quota[rem[j % C].second];
  return quota;
}

std::vector<ClassId> striped_layout(const ScenarioSpec& spec, const std::vector<std::size_t>& quota) {
  const std::size_t H = spec.shape.height;
  const std::size_t W = spec.shape.width;
  std::vector<ClassId> label(H * W);
  std::size_t c = 0;
  std::size_t left = quota[0];
  // Column-major fill gives vertical stripes with exact class counts.
  for (std::size_t col = 0; col < W; ++col) {
    for (std::size_t row = 0; row < H; ++row) {
      while (left == 0) left = quota[++c];
      label[row * W + col] = static_cast<ClassId>(c);
      --left;
    }
  }
  return label;
}

std::vector<ClassId> blob_layout(const ScenarioSpec& spec, const std::vector<std::size_t>& quota,
                                 rng::SplitMix64& gen) {
  const std::size_t H = spec.shape.height;
  const std::size_t W = spec.shape.width;
  const std::size_t n = H * W;
  const std::size_t C = spec.num_classes;
  std::vector<ClassId> label(n, -1);
  std::vector<std::size_t> left = quota;
  std::vector<std::vector<std::size_t>> frontier(C);
  std::size_t assigned = 0;

  auto unassigned_from = [&](std::size_t start) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = (start + k) % n;
      if (label[i] < 0) return i;
    }
    return n;
  };
  for (std::size_t c = 0; c < C; ++c) {
    if (left[c] > 0) frontier[c].push_back(unassigned_from(gen.below(n)));
  }
  while (assigned < n) {
    for (std::size_t c = 0; c < C && assigned < n; ++c) {
      if (left[c] == 0) continue;
      std::size_t pick = n;
      while (!frontier[c].empty()) {
        const std::size_t j = gen.below(frontier[c].size());
        const std::size_t cand = frontier[c][j];
        frontier[c][j] = frontier[c].back();
        frontier[c].pop_back();
        if (label[cand] < 0) {
          pick = cand;
          break;
        }
      }
      if (pick == n) {
        // Enclosed: restart the class elsewhere.
        pick = unassigned_from(gen.below(n));
      }
      label[pick] = static_cast<ClassId>(c);
      --left[c];
      ++assigned;
      const std::size_t r = pick / W;
      const std::size_t col = pick % W;
      if (r > 0 && label[pick - W] < 0) frontier[c].push_back(pick - W);
      if (r + 1 < H && label[pick + W] < 0) frontier[c].push_back(pick + W);
      if (col > 0 && label[pick - 1] < 0) frontier[c].push_back(pick - 1);
      if (col + 1 < W && label[pick + 1] < 0) frontier[c].push_back(pick + 1);
    }
  }
  return label;
}

// Normalized entropy of (1 - mix) * onehot + mix * uniform over C classes.
double mixture_entropy(double mix, std::size_t C) {
  const double other = mix / static_cast<double>(C);
  const double top = 1.0 - mix + other;
  double h = 0.0;
  if (top > 0.0) h -= top * std::log(top);
  if (other > 0.0) h -= static_cast<double>(C - 1) * other * std::log(other);
  return std::clamp(h / std::log(static_cast<double>(C)), 0.0, 1.0);
}

void fill_mixture(std::span<double> row, ClassId pred, double mix) {
  const double other = mix / static_cast<double>(row.size());
  std::fill(row.begin(), row.end(), other);
  row[static_cast<std::size_t>(pred)] = 1.0 - mix + other;
}

SynthFrame generate_frame(const ScenarioSpec& spec, std::size_t f) {
  rng::SplitMix64 gen(rng::combine(rng::splitmix64(spec.seed), f));
  const std::size_t C = spec.num_classes;
  const std::size_t n = spec.shape.size();
  const std::vector<std::size_t> quota = class_quotas(spec);

  SynthFrame out;
  FrameRecord& frame = out.frame;
  frame.frame_id = frame_name(f);
  frame.shape = spec.shape;
  frame.label = spec.layout == Layout::striped ? striped_layout(spec, quota)
                                               : blob_layout(spec, quota, gen);
  frame.pred.resize(n);
  out.is_error.resize(n);
  std::vector<double> mix(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ClassId g = frame.label[i];
    const bool correct = gen.bernoulli(spec.accuracy_of(static_cast<std::size_t>(g)));
    frame.pred[i] = correct ? g
                            : static_cast<ClassId>((static_cast<std::size_t>(g) + 1 + gen.below(C - 1)) % C);
    out.is_error[i] = !correct;
    const bool confident = spec.mode == CalibrationMode::calibrated ? correct : !correct;
    mix[i] = spec.mode == CalibrationMode::constant
                 ? kConstantMix
                 : (confident ? gen.uniform(kConfidentLo, kConfidentHi) : gen.uniform(kUnsureLo, kUnsureHi));
  }

  std::vector<double> u(n);
  if (spec.mode == CalibrationMode::constant) {
    std::fill(u.begin(), u.end(), mixture_entropy(kConstantMix, C));
  } else {
    for (std::size_t i = 0; i < n; ++i) u[i] = mixture_entropy(mix[i], C);
  }
  frame.uncertainty = std::move(u);

  if (spec.emit_samples) {
    const std::size_t T = spec.mc_samples;
    std::vector<double> probs(T * n * C);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        // Samples spread symmetrically around the point's mixing weight so
        // their mean is the intended distribution.
        const double spread = 0.5 * std::min(mix[i], 1.0 - mix[i]);
        double m = mix[i];
        if (!(T % 2 == 1 && t == T - 1)) m += (t % 2 == 0 ? spread : -spread);
        fill_mixture(std::span<double>(probs.data() + (t * n + i) * C, C), frame.pred[i], m);
      }
    }
    frame.samples = MCSampleSet(T, n, C, std::move(probs));
  }
  if (spec.emit_logits) {
    LogitGaussianField field;
    field.points = n;
    field.classes = C;
    field.logit_samples = spec.logit_samples;
    field.mu.resize(n * C);
    field.sigma.resize(n * C);
    std::vector<double> row(C);
    for (std::size_t i = 0; i < n; ++i) {
      fill_mixture(row, frame.pred[i], mix[i]);
      for (std::size_t c = 0; c < C; ++c) {
        field.mu[i * C + c] = std::log(row[c]);
        field.sigma[i * C + c] = mix[i];
      }
    }
    frame.logit_field = std::move(field);
  }
  return out;
}

}  // namespace

std::string_view to_string(Layout layout) {
  return layout == Layout::striped ? "striped" : "blobs";
}

std::string_view to_string(CalibrationMode mode) {
  switch (mode) {
    case CalibrationMode::calibrated: return "calibrated";
    case CalibrationMode::anticalibrated: return "anticalibrated";
    case CalibrationMode::constant: return "constant";
  }
  return "unknown";
}

Layout parse_layout(std::string_view name) {
  if (name == "striped") return Layout::striped;
  if (name == "blobs") return Layout::blobs;
  throw InvalidInput("unknown layout '" + std::string(name) + "'");
}

CalibrationMode parse_calibration_mode(std::string_view name) {
  if (name == "calibrated") return CalibrationMode::calibrated;
  if (name == "anticalibrated") return CalibrationMode::anticalibrated;
  if (name == "constant") return CalibrationMode::constant;
  throw InvalidInput("unknown calibration mode '" + std::string(name) + "'");
}

void ScenarioSpec::validate() const {
  if (num_classes < 2) throw InvalidInput("scenario needs at least 2 classes");
  if (shape.size() == 0) throw InvalidInput("scenario frame shape must be non-empty");
  if (mc_samples < 2) throw InvalidInput("scenario needs at least 2 MC samples");
  if (logit_samples < 1) throw InvalidInput("scenario needs at least 1 logit sample");
  if (accuracy.size() != 1 && accuracy.size() != num_classes) {
    throw InvalidInput("accuracy needs 1 or " + std::to_string(num_classes) + " values");
  }
  for (double a : accuracy) {
    if (!(a >= 0.0 && a <= 1.0)) throw InvalidInput("accuracy outside [0, 1]");
  }
  if (!class_fractions.empty()) {
    if (class_fractions.size() != num_classes) {
      throw InvalidInput("class fractions need " + std::to_string(num_classes) + " values");
    }
    double sum = 0.0;
    for (double w : class_fractions) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("class fractions must be non-negative");
      sum += w;
    }
    if (sum <= 0.0) throw InvalidInput("class fractions sum to zero");
  }
}

std::vector<SynthFrame> generate_scenario(const ScenarioSpec& spec, std::size_t threads) {
  spec.validate();
  std::vector<SynthFrame> frames(spec.num_frames);
  parallel_for(spec.num_frames, threads, [&](std::size_t f) { frames[f] = generate_frame(spec, f); });
  return frames;
}

CorruptedScenario corrupt_labels(std::span<const FrameRecord> frames, std::size_t num_classes,
                                 double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidInput("corruption rate outside [0, 1)");
  if (num_classes < 2) throw InvalidInput("corruption needs at least 2 classes");
  constexpr std::size_t kMinSide = 4;
  constexpr std::size_t kMaxSide = 8;
  constexpr int kMaxAttempts = 1000;

  CorruptedScenario out;
  out.frames.assign(frames.begin(), frames.end());
  for (std::size_t f = 0; f < out.frames.size(); ++f) {
    FrameRecord& frame = out.frames[f];
    if (!frame.shape) throw InvalidInput("frame '" + frame.frame_id + "': corruption needs a 2D shape");
    const std::size_t H = frame.shape->height;
    const std::size_t W = frame.shape->width;
    const auto target = static_cast<std::size_t>(std::llround(rate * static_cast<double>(H * W)));
    rng::SplitMix64 gen(rng::combine(rng::splitmix64(seed), rng::fnv1a(frame.frame_id)));
    std::vector<char> blocked(H * W, 0);
    std::size_t covered = 0;
    int failures = 0;
    while (covered < target) {
      const std::size_t h = kMinSide + gen.below(kMaxSide - kMinSide + 1);
      const std::size_t w = kMinSide + gen.below(kMaxSide - kMinSide + 1);
      if (h > H || w > W) throw InvalidInput("frame '" + frame.frame_id + "' too small for corruption regions");
      const std::size_t r0 = gen.below(H - h + 1);
      const std::size_t c0 = gen.below(W - w + 1);
      bool free = true;
      for (std::size_t r = r0; r < r0 + h && free; ++r) {
        for (std::size_t c = c0; c < c0 + w; ++c) {
          if (blocked[r * W + c]) {
            free = false;
            break;
          }
        }
      }
      if (!free) {
        if (++failures >= kMaxAttempts) {
          throw InvalidInput("corruption rate " + std::to_string(rate) +
                             " too high to place disjoint regions in frame '" + frame.frame_id + "'");
        }
        continue;
      }
      failures = 0;
      const auto shift = static_cast<ClassId>(1 + gen.below(num_classes - 1));
      for (std::size_t r = r0; r < r0 + h; ++r) {
        for (std::size_t c = c0; c < c0 + w; ++c) {
          ClassId& g = frame.label[r * W + c];
          if (g < 0 || static_cast<std::size_t>(g) >= num_classes) {
            throw InvalidInput("frame '" + frame.frame_id + "': cannot corrupt label id " + std::to_string(g));
          }
          g = static_cast<ClassId>((static_cast<std::size_t>(g) + static_cast<std::size_t>(shift)) % num_classes);
        }
      }
      // Block the region plus a one-pixel margin.
      for (std::size_t r = r0 == 0 ? 0 : r0 - 1; r < std::min(H, r0 + h + 1); ++r) {
        for (std::size_t c = c0 == 0 ? 0 : c0 - 1; c < std::min(W, c0 + w + 1); ++c) blocked[r * W + c] = 1;
      }
      covered += h * w;
      out.ledger.push_back({frame.frame_id, r0, c0, h, w, shift});
    }
  }
  return out;
}

}  // namespace segcal
