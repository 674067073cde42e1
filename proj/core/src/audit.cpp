#include "segcal/audit.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <utility>

#include "segcal/error.hpp"
#include "segcal/parallel.hpp"

namespace segcal {
namespace {

void check_tau(double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw InvalidInput("audit threshold " + std::to_string(tau) + " outside [0, 1]");
  }
}

AuditFinding summarize(std::vector<std::size_t> members, std::size_t width,
                       std::span<const ClassId> pred, std::span<const ClassId> label,
                       std::span<const double> uncertainty, const std::string& frame_id) {
  std::sort(members.begin(), members.end());
  AuditFinding f;
  f.frame_id = frame_id;
  f.size = members.size();
  f.pixels.reserve(members.size());
  std::map<std::pair<ClassId, ClassId>, std::size_t> pairs;
  double sum = 0.0;
  for (std::size_t i : members) {
    f.pixels.push_back({i / width, i % width});
    ++pairs[{label[i], pred[i]}];
    sum += uncertainty[i];
    f.max_uncertainty = std::max(f.max_uncertainty, uncertainty[i]);
  }
  f.mean_uncertainty = sum / static_cast<double>(members.size());
  // std::map iterates in (label, pred) order, so the first maximum wins ties.
  std::size_t best = 0;
  for (const auto& [key, count] : pairs) {
    if (count > best) {
      best = count;
      f.label_class = key.first;
      f.predicted_class = key.second;
    }
  }
  return f;
}

}  // namespace

std::vector<std::uint8_t> confident_error_mask(std::span<const ClassId> pred,
                                               std::span<const ClassId> label,
                                               std::span<const double> uncertainty, double tau,
                                               const std::set<ClassId>& ignore) {
  check_tau(tau);
  if (pred.size() != label.size() || uncertainty.size() != label.size()) {
    throw InvalidInput("audit inputs differ in length");
  }
  std::vector<std::uint8_t> mask(label.size(), 0);
  for (std::size_t i = 0; i < label.size(); ++i) {
    mask[i] = pred[i] != label[i] && uncertainty[i] <= tau && !ignore.contains(label[i]);
  }
  return mask;
}

std::vector<AuditFinding> cluster_findings(std::span<const std::uint8_t> mask,
                                           std::optional<ImageShape> shape,
                                           std::span<const ClassId> pred,
                                           std::span<const ClassId> label,
                                           std::span<const double> uncertainty,
                                           std::size_t min_size, const std::string& frame_id) {
  const std::size_t n = mask.size();
  if (pred.size() != n || label.size() != n || uncertainty.size() != n) {
    throw InvalidInput("audit inputs differ in length");
  }
  std::vector<AuditFinding> out;
  if (!shape) {
    for (std::size_t i = 0; i < n;) {
      if (!mask[i]) {
        ++i;
        continue;
      }
      std::vector<std::size_t> run;
      for (; i < n && mask[i]; ++i) run.push_back(i);
      if (run.size() >= min_size) {
        out.push_back(summarize(std::move(run), n == 0 ? 1 : n, pred, label, uncertainty, frame_id));
      }
    }
    return out;
  }
  if (shape->size() != n) throw InvalidInput("audit mask does not match the frame shape");
  const std::size_t H = shape->height;
  const std::size_t W = shape->width;
  std::vector<char> visited(n, 0);
  std::vector<std::size_t> stack;
  // Raster-order seeds make the component order follow each first pixel.
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (!mask[seed] || visited[seed]) continue;
    std::vector<std::size_t> members;
    visited[seed] = 1;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      members.push_back(i);
      const std::size_t r = i / W;
      const std::size_t c = i % W;
      for (std::size_t rr = r == 0 ? 0 : r - 1; rr <= std::min(r + 1, H - 1); ++rr) {
        for (std::size_t cc = c == 0 ? 0 : c - 1; cc <= std::min(c + 1, W - 1); ++cc) {
          const std::size_t j = rr * W + cc;
          if (mask[j] && !visited[j]) {
            visited[j] = 1;
            stack.push_back(j);
          }
        }
      }
    }
    if (members.size() >= min_size) {
      out.push_back(summarize(std::move(members), W, pred, label, uncertainty, frame_id));
    }
  }
  return out;
}

std::vector<AuditFinding> rank_findings(std::vector<AuditFinding> findings) {
  for (AuditFinding& f : findings) {
    f.score = static_cast<double>(f.size) * (1.0 - f.mean_uncertainty);
  }
  std::stable_sort(findings.begin(), findings.end(), [](const AuditFinding& a, const AuditFinding& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.frame_id != b.frame_id) return a.frame_id < b.frame_id;
    return a.first_pixel() < b.first_pixel();
  });
  return findings;
}

std::vector<AuditFinding> audit_frames(std::span<const FrameRecord> frames,
                                       const ClassConfig& config, const AuditOptions& options) {
  config.validate();
  check_tau(options.tau);
  std::vector<std::vector<AuditFinding>> per_frame(frames.size());
  parallel_for(frames.size(), options.threads, [&](std::size_t j) {
    const FrameRecord& frame = frames[j];
    frame.validate(config);
    const std::vector<double> u =
        frame_uncertainty(frame, options.kind, config.num_classes(), options.seed);
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (!(u[i] >= 0.0 && u[i] <= 1.0)) {
        throw InvalidInput("frame '" + frame.frame_id + "': audit needs uncertainty in [0, 1], got " +
                           std::to_string(u[i]) + " at index " + std::to_string(i));
      }
    }
    const auto mask = confident_error_mask(frame.pred, frame.label, u, options.tau, config.ignore_ids);
    per_frame[j] = cluster_findings(mask, frame.shape, frame.pred, frame.label, u, options.min_size,
                                    frame.frame_id);
  });
  std::vector<AuditFinding> all;
  for (auto& v : per_frame) {
    std::move(v.begin(), v.end(), std::back_inserter(all));
  }
  return rank_findings(std::move(all));
}

}  // namespace segcal
