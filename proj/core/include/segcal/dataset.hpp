#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segcal/frame.hpp"
#include "segcal/metrics.hpp"

namespace segcal {

/// Class config file:
///   {"names": [...], "ignore_ids": [...], "frequencies": [...]}
/// "num_classes": C may replace "names"; the other keys are optional.
ClassConfig load_class_config(const std::filesystem::path& path);
void save_class_config(const std::filesystem::path& path, const ClassConfig& config);
ClassConfig parse_class_config(std::string_view json_text, std::string_view origin = "<memory>");

/// File name suffixes appended to each frame stem.
struct FileSuffixes {
  std::string pred = "_pred.npy";
  std::string label = "_label.npy";
  std::string uncertainty = "_unc.npy";
  std::string samples = "_samples.npy";
  std::string logit_mean = "_logit_mean.npy";
  std::string logit_std = "_logit_std.npy";

  bool operator==(const FileSuffixes&) const = default;
};

/// Manifest file:
///   {"root": "frames", "classes": "classes.json", "frames": ["a", "b"],
///    "suffixes": {...}, "logit_samples": 10}
/// Relative paths resolve against the manifest's directory. Only the label
/// file is mandatory per frame; the prediction may instead be derived from
/// the samples, and the uncertainty sources are loaded when present.
struct DatasetManifest {
  std::filesystem::path root;
  std::optional<std::filesystem::path> classes;
  std::vector<std::string> frames;
  FileSuffixes suffixes;
  std::size_t logit_samples = kDefaultLogitSamples;

  std::filesystem::path file(const std::string& stem, const std::string& suffix) const {
    return root / (stem + suffix);
  }
};

DatasetManifest load_manifest(const std::filesystem::path& path);
/// Writes `manifest` with root and classes stored relative to the
/// manifest's directory where possible.
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Which per-frame uncertainty sources exist on disk.
struct AvailableSources {
  bool uncertainty = false;
  bool samples = false;
  bool logits = false;
};
AvailableSources probe_sources(const DatasetManifest& manifest);

struct LoadOptions {
  bool uncertainty = true;
  bool samples = true;
  bool logits = true;
  std::size_t threads = 1;
};

/// Loads one frame; the frame id is the stem. Label shape (H, W) gives a
/// range image, (N) a flat frame. Samples are T x N x C or T x H x W x C;
/// logit fields N x C or H x W x C.
FrameRecord load_frame(const DatasetManifest& manifest, const std::string& stem,
                       const LoadOptions& options = {});
std::vector<FrameRecord> load_frames(const DatasetManifest& manifest, const LoadOptions& options = {});

/// Writes every frame's arrays under `dir`, plus classes.json and
/// manifest.json, so the result loads back with load_manifest.
void write_dataset(const std::filesystem::path& dir, std::span<const FrameRecord> frames,
                   const ClassConfig& config);

}  // namespace segcal
