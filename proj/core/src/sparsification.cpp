#include "segcal/sparsification.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "segcal/error.hpp"
#include "segcal/parallel.hpp"

namespace segcal {
namespace {

struct Counts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t errors() const noexcept { return fp + fn; }
  std::uint64_t relevant() const noexcept { return tp + fp + fn; }
};

double iou_of(double tp, double relevant) { return relevant > 0.0 ? tp / relevant : 1.0; }

// Running mean / variance (Welford); constant inputs give exactly zero spread.
struct Welford {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) noexcept {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  double stddev() const noexcept {
    return n == 0 ? 0.0 : std::sqrt(std::max(0.0, m2 / static_cast<double>(n)));
  }
};

std::uint64_t descending_key(double u) {
  if (u == 0.0) u = 0.0;  // -0.0 ties with +0.0
  constexpr std::uint64_t kSign = std::uint64_t{1} << 63;
  const auto bits = std::bit_cast<std::uint64_t>(u);
  const std::uint64_t ascending = (bits & kSign) ? ~bits : (bits | kSign);
  return ~ascending;
}

void check_permutation(std::span<const std::size_t> ranking, std::size_t n) {
  if (ranking.size() != n) {
    throw InvalidInput("ranking has " + std::to_string(ranking.size()) + " entries for " +
                       std::to_string(n) + " points");
  }
  auto bad = [](std::size_t idx) {
    return InvalidInput("ranking is not a permutation (bad entry " + std::to_string(idx) + ")");
  };
  if (n <= 64) {
    std::uint64_t seen = 0;
    for (std::size_t idx : ranking) {
      if (idx >= n || (seen >> idx & 1u)) throw bad(idx);
      seen |= std::uint64_t{1} << idx;
    }
    return;
  }
  std::vector<char> seen(n, 0);
  for (std::size_t idx : ranking) {
    if (idx >= n || seen[idx]) throw bad(idx);
    seen[idx] = 1;
  }
}

void check_pair(std::span<const ClassId> pred, std::span<const ClassId> label) {
  if (pred.size() != label.size()) {
    throw InvalidInput(std::to_string(pred.size()) + " predictions but " +
                       std::to_string(label.size()) + " labels");
  }
}

std::vector<double> curve_difference(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] - b[k];
  return d;
}

// Fills the derived fields shared by exact and binned reports.
void finish_report(SparsificationReport& report, const FractionGrid& grid) {
  const std::size_t K = grid.steps();
  report.steps = K;
  report.fractions = grid.fractions();
  report.mean_oracle.assign(K, 0.0);
  report.mean_sparsification.assign(K, 0.0);
  std::vector<ClassIoU> ious;
  std::size_t used = 0;
  for (ClassReport& cls : report.classes) {
    cls.error = curve_difference(cls.oracle, cls.sparsification);
    cls.ause = ause(cls.oracle, cls.sparsification, grid);
    if (!cls.scored) continue;
    ious.push_back({cls.iou, cls.present});
    if (!cls.present) continue;
    ++used;
    for (std::size_t k = 0; k < K; ++k) {
      report.mean_oracle[k] += cls.oracle[k];
      report.mean_sparsification[k] += cls.sparsification[k];
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (used == 0) {
      report.mean_oracle[k] = 1.0;
      report.mean_sparsification[k] = 1.0;
    } else {
      report.mean_oracle[k] /= static_cast<double>(used);
      report.mean_sparsification[k] /= static_cast<double>(used);
    }
  }
  report.mean_error = curve_difference(report.mean_oracle, report.mean_sparsification);
  report.mean_ause = ause(report.mean_oracle, report.mean_sparsification, grid);
  report.miou = miou(ious);
}

ClassReport make_class(const ClassConfig& config, std::size_t c, const Counts& counts,
                       std::size_t K) {
  ClassReport cls;
  cls.id = static_cast<ClassId>(c);
  cls.name = config.names[c];
  cls.scored = config.is_scored(cls.id);
  cls.true_positives = counts.tp;
  cls.false_positives = counts.fp;
  cls.false_negatives = counts.fn;
  cls.present = cls.scored && counts.relevant() > 0;
  cls.degenerate = cls.present && counts.tp == 0;
  cls.iou = cls.present ? iou_of(static_cast<double>(counts.tp), static_cast<double>(counts.relevant()))
                        : 1.0;
  cls.oracle.assign(K, 1.0);
  cls.sparsification.assign(K, 1.0);
  cls.mean_uncertainty.assign(K, 0.0);
  cls.std_uncertainty.assign(K, 0.0);
  return cls;
}

std::vector<Counts> count_classes(const PooledPoints& points, std::size_t num_classes) {
  std::vector<Counts> counts(num_classes);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto g = static_cast<std::size_t>(points.label[i]);
    const auto p = static_cast<std::size_t>(points.pred[i]);
    if (g == p) {
      ++counts[g].tp;
    } else {
      ++counts[g].fn;
      ++counts[p].fp;
    }
  }
  return counts;
}

// ---- binned accumulation ------------------------------------------------

constexpr double kFixedScale = 4294967296.0;  // 2^32

std::uint64_t to_fixed(double x) { return static_cast<std::uint64_t>(std::llround(x * kFixedScale)); }

struct BinnedHistogram {
  std::size_t bins = 0;
  std::size_t classes = 0;
  std::vector<std::uint64_t> tp;       // bins x classes, relevant true positives
  std::vector<std::uint64_t> relevant; // bins x classes, relevant points
  std::vector<std::uint64_t> u_sum;    // bins x classes, fixed point
  std::vector<std::uint64_t> u2_sum;
  std::vector<std::uint64_t> all_n;    // bins, every evaluated point
  std::vector<std::uint64_t> all_u_sum;
  std::vector<std::uint64_t> all_u2_sum;
  std::vector<Counts> counts;
  std::uint64_t points = 0;
  std::uint64_t ignored = 0;

  BinnedHistogram(std::size_t b, std::size_t c)
      : bins(b), classes(c), tp(b * c), relevant(b * c), u_sum(b * c), u2_sum(b * c),
        all_n(b), all_u_sum(b), all_u2_sum(b), counts(c) {}

  void add_relevant(std::size_t bin, std::size_t c, bool correct, std::uint64_t fu,
                    std::uint64_t fu2) {
    const std::size_t at = bin * classes + c;
    ++relevant[at];
    if (correct) ++tp[at];
    u_sum[at] += fu;
    u2_sum[at] += fu2;
  }

  void merge(const BinnedHistogram& o) {
    auto add = [](std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    };
    add(tp, o.tp);
    add(relevant, o.relevant);
    add(u_sum, o.u_sum);
    add(u2_sum, o.u2_sum);
    add(all_n, o.all_n);
    add(all_u_sum, o.all_u_sum);
    add(all_u2_sum, o.all_u2_sum);
    for (std::size_t c = 0; c < classes; ++c) {
      counts[c].tp += o.counts[c].tp;
      counts[c].fp += o.counts[c].fp;
      counts[c].fn += o.counts[c].fn;
    }
    points += o.points;
    ignored += o.ignored;
  }
};

struct RemainingStats {
  double mean = 0.0;
  double stddev = 0.0;
};

RemainingStats stats_from_sums(double n, double s, double s2) {
  if (n <= 0.0) return {};
  const double mean = s / n / kFixedScale;
  const double var = s2 / n / kFixedScale - mean * mean;
  return {mean, std::sqrt(std::max(0.0, var))};
}

// Reconstructs curve values from per-bin counts, removing bins from the
// most uncertain down and interpolating inside the straddling bin.
class BinSweep {
 public:
  BinSweep(std::span<const std::uint64_t> n, std::span<const std::uint64_t> tp,
           std::span<const std::uint64_t> s, std::span<const std::uint64_t> s2)
      : n_(n), tp_(tp), s_(s), s2_(s2), next_(n.size()) {}

  struct Removed {
    double tp = 0.0;
    double s = 0.0;
    double s2 = 0.0;
  };

  // m must be non-decreasing across calls.
  Removed remove_until(std::uint64_t m) {
    while (next_ > 0 && cum_n_ + n_[next_ - 1] <= m) {
      --next_;
      cum_n_ += n_[next_];
      cum_tp_ += tp_.empty() ? 0 : tp_[next_];
      cum_s_ += static_cast<double>(s_[next_]);
      cum_s2_ += static_cast<double>(s2_[next_]);
    }
    Removed out{static_cast<double>(cum_tp_), cum_s_, cum_s2_};
    const std::uint64_t rest = m - cum_n_;
    if (next_ > 0 && rest > 0) {
      const std::size_t b = next_ - 1;
      const auto nb = static_cast<double>(n_[b]);
      const auto r = static_cast<double>(rest);
      if (!tp_.empty()) out.tp += static_cast<double>(tp_[b]) * r / nb;
      out.s += static_cast<double>(s_[b]) * r / nb;
      out.s2 += static_cast<double>(s2_[b]) * r / nb;
    }
    return out;
  }

 private:
  std::span<const std::uint64_t> n_, tp_, s_, s2_;
  std::size_t next_;
  std::uint64_t cum_n_ = 0;
  std::uint64_t cum_tp_ = 0;
  double cum_s_ = 0.0;
  double cum_s2_ = 0.0;
};

std::vector<std::size_t> sorted_frame_order(std::span<const FrameRecord> frames) {
  std::vector<std::size_t> order(frames.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return frames[a].frame_id < frames[b].frame_id;
  });
  for (std::size_t j = 1; j < order.size(); ++j) {
    if (frames[order[j]].frame_id == frames[order[j - 1]].frame_id) {
      throw InvalidInput("duplicate frame id '" + frames[order[j]].frame_id + "'");
    }
  }
  return order;
}

}  // namespace

FractionGrid::FractionGrid(std::size_t steps) : steps_(steps) {
  if (steps_ < 2) throw InvalidInput("fraction grid needs at least 2 steps");
}

std::vector<double> FractionGrid::fractions() const {
  std::vector<double> f(steps_);
  for (std::size_t k = 0; k < steps_; ++k) f[k] = fraction(k);
  return f;
}

std::vector<std::size_t> uncertainty_ranking(std::span<const double> u, std::size_t threads) {
  struct Keyed {
    std::uint64_t key;
    std::size_t index;
  };
  std::vector<Keyed> keyed(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (std::isnan(u[i])) throw InvalidInput("uncertainty is NaN at index " + std::to_string(i));
    keyed[i] = {descending_key(u[i]), i};
  }
  parallel_sort(
      keyed,
      [](const Keyed& a, const Keyed& b) {
        return a.key != b.key ? a.key < b.key : a.index < b.index;
      },
      threads);
  std::vector<std::size_t> ranking(u.size());
  for (std::size_t j = 0; j < keyed.size(); ++j) ranking[j] = keyed[j].index;
  return ranking;
}

std::vector<std::size_t> oracle_ranking(std::span<const ClassId> pred,
                                        std::span<const ClassId> label, ClassId c) {
  check_pair(pred, label);
  // 0: error of class c, 1: unrelated point, 2: true positive of c.
  auto group = [&](std::size_t i) {
    const bool is_label = label[i] == c;
    const bool is_pred = pred[i] == c;
    return is_label != is_pred ? 0 : (is_label ? 2 : 1);
  };
  std::array<std::size_t, 3> start{};
  for (std::size_t i = 0; i < label.size(); ++i) {
    const int g = group(i);
    if (g < 2) ++start[static_cast<std::size_t>(g) + 1];
  }
  start[2] += start[1];
  std::vector<std::size_t> order(label.size());
  for (std::size_t i = 0; i < label.size(); ++i) order[start[static_cast<std::size_t>(group(i))]++] = i;
  return order;
}

std::vector<double> removal_profile(std::span<const ClassId> pred, std::span<const ClassId> label,
                                    std::span<const std::size_t> ranking, ClassId c) {
  check_pair(pred, label);
  check_permutation(ranking, label.size());
  std::uint64_t tp = 0;
  std::uint64_t relevant = 0;
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (label[i] == c || pred[i] == c) {
      ++relevant;
      if (label[i] == pred[i]) ++tp;
    }
  }
  std::vector<double> profile;
  profile.reserve(relevant);
  for (std::size_t idx : ranking) {
    if (label[idx] != c && pred[idx] != c) continue;
    profile.push_back(iou_of(static_cast<double>(tp), static_cast<double>(relevant)));
    if (label[idx] == pred[idx]) --tp;
    --relevant;
  }
  return profile;
}

std::vector<double> sparsification_curve(std::span<const ClassId> pred,
                                         std::span<const ClassId> label,
                                         std::span<const std::size_t> ranking, ClassId c,
                                         const FractionGrid& grid) {
  const std::vector<double> profile = removal_profile(pred, label, ranking, c);
  std::vector<double> curve(grid.steps(), 1.0);
  if (profile.empty()) return curve;
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    curve[k] = profile[grid.removal_count(k, profile.size())];
  }
  return curve;
}

std::vector<double> oracle_curve(std::uint64_t true_positives, std::uint64_t errors,
                                 const FractionGrid& grid) {
  const std::uint64_t relevant = true_positives + errors;
  std::vector<double> curve(grid.steps(), 1.0);
  if (relevant == 0) return curve;
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const std::uint64_t m = grid.removal_count(k, relevant);
    // Errors go first; once they are gone only true positives matter.
    curve[k] = m < errors ? iou_of(static_cast<double>(true_positives),
                                   static_cast<double>(relevant - m))
                          : (true_positives > 0 ? 1.0 : 0.0);
  }
  return curve;
}

Ause ause(std::span<const double> oracle, std::span<const double> sparsification,
          const FractionGrid& grid) {
  const std::size_t K = grid.steps();
  if (oracle.size() != K || sparsification.size() != K) {
    throw InvalidInput("curves have " + std::to_string(oracle.size()) + " and " +
                       std::to_string(sparsification.size()) + " points but the grid has " +
                       std::to_string(K));
  }
  Ause out;
  double area = 0.0;
  double prev = oracle[0] - sparsification[0];
  out.paper_scale = prev;
  for (std::size_t k = 1; k < K; ++k) {
    const double e = oracle[k] - sparsification[k];
    area += 0.5 * (prev + e);
    out.paper_scale += e;
    prev = e;
  }
  // Unit spacing 1/K cancels against the 1/K in f_{K-1} = (K-1)/K.
  out.normalized = area / static_cast<double>(K - 1);
  return out;
}

PooledPoints pool_frames(std::span<const FrameRecord> frames, const ClassConfig& config,
                         const EvaluationOptions& options) {
  config.validate();
  const std::vector<std::size_t> order = sorted_frame_order(frames);
  std::vector<std::vector<double>> uncertainty(frames.size());
  parallel_for(frames.size(), options.threads, [&](std::size_t j) {
    const FrameRecord& frame = frames[order[j]];
    frame.validate(config);
    uncertainty[j] = frame_uncertainty(frame, options.kind, config.num_classes(), options.seed);
  });

  PooledPoints pooled;
  pooled.num_frames = frames.size();
  std::size_t total = 0;
  for (const FrameRecord& f : frames) total += f.size();
  pooled.pred.reserve(total);
  pooled.label.reserve(total);
  pooled.uncertainty.reserve(total);
  for (std::size_t j = 0; j < order.size(); ++j) {
    const FrameRecord& frame = frames[order[j]];
    for (std::size_t i = 0; i < frame.size(); ++i) {
      if (config.is_ignored(frame.label[i])) {
        ++pooled.num_ignored;
        continue;
      }
      pooled.pred.push_back(frame.pred[i]);
      pooled.label.push_back(frame.label[i]);
      pooled.uncertainty.push_back(uncertainty[j][i]);
    }
    std::vector<double>().swap(uncertainty[j]);
  }
  return pooled;
}

SparsificationReport evaluate_pooled(const PooledPoints& points, const ClassConfig& config,
                                     const EvaluationOptions& options) {
  const FractionGrid& grid = options.grid;
  const std::size_t K = grid.steps();
  const std::size_t C = config.num_classes();
  const std::size_t N = points.size();

  SparsificationReport report;
  report.uncertainty = std::string(to_string(options.kind));
  report.num_frames = points.num_frames;
  report.num_points = N;
  report.num_ignored = points.num_ignored;

  const std::vector<Counts> counts = count_classes(points, C);
  std::vector<char> tracked(C, 0);
  std::vector<std::uint64_t> relevant(C, 0);
  std::vector<std::uint64_t> boundary(C * K, 0);  // removal count per class and step
  report.classes.reserve(C);
  for (std::size_t c = 0; c < C; ++c) {
    report.classes.push_back(make_class(config, c, counts[c], K));
    if (!report.classes[c].present) continue;
    tracked[c] = 1;
    relevant[c] = counts[c].relevant();
    for (std::size_t k = 0; k < K; ++k) boundary[c * K + k] = grid.removal_count(k, relevant[c]);
    report.classes[c].oracle = oracle_curve(counts[c].tp, counts[c].errors(), grid);
  }

  const std::vector<std::size_t> ranking = uncertainty_ranking(points.uncertainty, options.threads);

  // Forward sweep: IoU of the remaining relevant points at every boundary.
  {
    std::vector<std::uint64_t> removed(C, 0), removed_tp(C, 0);
    std::vector<std::size_t> next(C, 0);
    auto emit = [&](std::size_t c) {
      std::size_t& k = next[c];
      while (k < K && boundary[c * K + k] == removed[c]) {
        report.classes[c].sparsification[k] =
            iou_of(static_cast<double>(counts[c].tp - removed_tp[c]),
                   static_cast<double>(relevant[c] - removed[c]));
        ++k;
      }
    };
    for (std::size_t c = 0; c < C; ++c) {
      if (tracked[c]) emit(c);
    }
    for (std::size_t idx : ranking) {
      const auto g = static_cast<std::size_t>(points.label[idx]);
      const auto p = static_cast<std::size_t>(points.pred[idx]);
      if (tracked[g]) {
        ++removed[g];
        if (g == p) ++removed_tp[g];
        emit(g);
      }
      if (p != g && tracked[p]) {
        ++removed[p];
        emit(p);
      }
    }
  }

  // Reverse sweep: uncertainty statistics of what remains at each step.
  {
    std::vector<Welford> per_class(C);
    std::vector<std::ptrdiff_t> next(C, static_cast<std::ptrdiff_t>(K) - 1);
    Welford all;
    std::ptrdiff_t all_next = static_cast<std::ptrdiff_t>(K) - 1;
    report.remaining_mean.assign(K, 0.0);
    report.remaining_std.assign(K, 0.0);
    auto record = [&](std::size_t c) {
      std::ptrdiff_t& k = next[c];
      while (k >= 0 && relevant[c] - boundary[c * K + static_cast<std::size_t>(k)] == per_class[c].n) {
        report.classes[c].mean_uncertainty[static_cast<std::size_t>(k)] = per_class[c].mean;
        report.classes[c].std_uncertainty[static_cast<std::size_t>(k)] = per_class[c].stddev();
        --k;
      }
    };
    for (std::size_t j = N; j-- > 0;) {
      const std::size_t idx = ranking[j];
      const double u = points.uncertainty[idx];
      const auto g = static_cast<std::size_t>(points.label[idx]);
      const auto p = static_cast<std::size_t>(points.pred[idx]);
      if (tracked[g]) {
        per_class[g].add(u);
        record(g);
      }
      if (p != g && tracked[p]) {
        per_class[p].add(u);
        record(p);
      }
      all.add(u);
      while (all_next >= 0 &&
             N - grid.removal_count(static_cast<std::size_t>(all_next), N) == all.n) {
        report.remaining_mean[static_cast<std::size_t>(all_next)] = all.mean;
        report.remaining_std[static_cast<std::size_t>(all_next)] = all.stddev();
        --all_next;
      }
    }
  }

  finish_report(report, grid);
  return report;
}

SparsificationReport evaluate_dataset(std::span<const FrameRecord> frames,
                                      const ClassConfig& config, const EvaluationOptions& options) {
  return evaluate_pooled(pool_frames(frames, config, options), config, options);
}

SparsificationReport binned_evaluate(std::span<const FrameRecord> frames,
                                     const ClassConfig& config, const EvaluationOptions& options,
                                     std::size_t bins) {
  if (bins == 0) throw InvalidInput("binned evaluation needs at least one bin");
  config.validate();
  const std::vector<std::size_t> order = sorted_frame_order(frames);
  const FractionGrid& grid = options.grid;
  const std::size_t K = grid.steps();
  const std::size_t C = config.num_classes();

  const std::size_t workers = std::max<std::size_t>(
      1, std::min(resolve_threads(options.threads), frames.size()));
  std::vector<BinnedHistogram> partial(workers, BinnedHistogram(bins, C));
  parallel_for(workers, workers, [&](std::size_t w) {
    BinnedHistogram& h = partial[w];
    for (std::size_t j = frames.size() * w / workers; j < frames.size() * (w + 1) / workers; ++j) {
      const FrameRecord& frame = frames[order[j]];
      frame.validate(config);
      const std::vector<double> u =
          frame_uncertainty(frame, options.kind, C, options.seed);
      for (std::size_t i = 0; i < frame.size(); ++i) {
        const ClassId g = frame.label[i];
        if (config.is_ignored(g)) {
          ++h.ignored;
          continue;
        }
        if (!(u[i] >= 0.0 && u[i] <= 1.0)) {
          throw InvalidInput("frame '" + frame.frame_id + "': binned evaluation needs uncertainty in [0, 1], got " +
                             std::to_string(u[i]) + " at index " + std::to_string(i));
        }
        const ClassId p = frame.pred[i];
        const std::size_t bin =
            std::min(bins - 1, static_cast<std::size_t>(u[i] * static_cast<double>(bins)));
        const std::uint64_t fu = to_fixed(u[i]);
        const std::uint64_t fu2 = to_fixed(u[i] * u[i]);
        ++h.points;
        ++h.all_n[bin];
        h.all_u_sum[bin] += fu;
        h.all_u2_sum[bin] += fu2;
        const auto gc = static_cast<std::size_t>(g);
        const auto pc = static_cast<std::size_t>(p);
        if (g == p) {
          ++h.counts[gc].tp;
        } else {
          ++h.counts[gc].fn;
          ++h.counts[pc].fp;
        }
        if (config.is_scored(g)) h.add_relevant(bin, gc, g == p, fu, fu2);
        if (p != g && config.is_scored(p)) h.add_relevant(bin, pc, false, fu, fu2);
      }
    }
  });
  BinnedHistogram hist(bins, C);
  for (const BinnedHistogram& h : partial) hist.merge(h);

  SparsificationReport report;
  report.uncertainty = std::string(to_string(options.kind));
  report.mode = "binned";
  report.bins = bins;
  report.num_frames = frames.size();
  report.num_points = hist.points;
  report.num_ignored = hist.ignored;

  auto column = [&](const std::vector<std::uint64_t>& v, std::size_t c) {
    std::vector<std::uint64_t> out(bins);
    for (std::size_t b = 0; b < bins; ++b) out[b] = v[b * C + c];
    return out;
  };

  for (std::size_t c = 0; c < C; ++c) {
    report.classes.push_back(make_class(config, c, hist.counts[c], K));
    ClassReport& cls = report.classes.back();
    if (!cls.present) continue;
    const Counts& counts = hist.counts[c];
    const std::uint64_t relevant = counts.relevant();
    cls.oracle = oracle_curve(counts.tp, counts.errors(), grid);
    const auto n = column(hist.relevant, c);
    const auto tp = column(hist.tp, c);
    const auto s = column(hist.u_sum, c);
    const auto s2 = column(hist.u2_sum, c);
    const double total_s = std::accumulate(s.begin(), s.end(), 0.0,
                                           [](double a, std::uint64_t b) { return a + static_cast<double>(b); });
    const double total_s2 = std::accumulate(s2.begin(), s2.end(), 0.0,
                                            [](double a, std::uint64_t b) { return a + static_cast<double>(b); });
    BinSweep sweep(n, tp, s, s2);
    for (std::size_t k = 0; k < K; ++k) {
      const std::uint64_t m = grid.removal_count(k, relevant);
      const BinSweep::Removed removed = sweep.remove_until(m);
      const auto left = static_cast<double>(relevant - m);
      cls.sparsification[k] = iou_of(static_cast<double>(counts.tp) - removed.tp, left);
      const RemainingStats st = stats_from_sums(left, total_s - removed.s, total_s2 - removed.s2);
      cls.mean_uncertainty[k] = st.mean;
      cls.std_uncertainty[k] = st.stddev;
    }
  }

  {
    const double total_s = std::accumulate(hist.all_u_sum.begin(), hist.all_u_sum.end(), 0.0,
                                           [](double a, std::uint64_t b) { return a + static_cast<double>(b); });
    const double total_s2 = std::accumulate(hist.all_u2_sum.begin(), hist.all_u2_sum.end(), 0.0,
                                            [](double a, std::uint64_t b) { return a + static_cast<double>(b); });
    BinSweep sweep(hist.all_n, {}, hist.all_u_sum, hist.all_u2_sum);
    report.remaining_mean.assign(K, 0.0);
    report.remaining_std.assign(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      const std::uint64_t m = grid.removal_count(k, hist.points);
      const BinSweep::Removed removed = sweep.remove_until(m);
      const RemainingStats st = stats_from_sums(static_cast<double>(hist.points - m),
                                                total_s - removed.s, total_s2 - removed.s2);
      report.remaining_mean[k] = st.mean;
      report.remaining_std[k] = st.stddev;
    }
  }

  finish_report(report, grid);
  return report;
}

}  // namespace segcal
