#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "segcal/audit.hpp"
#include "segcal/baselines.hpp"
#include "segcal/dataset.hpp"
#include "segcal/error.hpp"
#include "segcal/npy.hpp"
#include "segcal/report_io.hpp"
#include "segcal/sparsification.hpp"
#include "segcal/synth.hpp"
#include "segcal/uncertainty.hpp"

namespace segcal::cli {
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr std::size_t kMinHistogramBins = 256;

struct Common {
  std::string manifest;
  std::string classes;
  std::string uncertainty;
  std::size_t steps = kDefaultSteps;
  std::size_t binned = 0;
  std::string ignore_ids;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t threads = 0;
};

void add_common(CLI::App* cmd, Common& c, bool evaluation) {
  cmd->add_option("--manifest", c.manifest, "Dataset manifest JSON")->required();
  cmd->add_option("--classes", c.classes, "Class config JSON (defaults to the manifest's)");
  cmd->add_option("--uncertainty", c.uncertainty, "entropy | mutual_information | aleatoric | precomputed");
  cmd->add_option("--ignore-ids", c.ignore_ids, "Comma-separated label ids to ignore");
  cmd->add_option("--seed", c.seed, "Seed for logit sampling");
  cmd->add_option("--out", c.out, "Output path")->required();
  cmd->add_option("--threads", c.threads, "Worker threads, 0 = all cores");
  if (evaluation) {
    cmd->add_option("--steps", c.steps, "Fraction grid size K");
    cmd->add_option("--binned", c.binned, "Use B histogram bins instead of exact sorting");
  }
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    T v{};
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw InvalidInput(std::string("bad ") + what + " value '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

struct Inputs {
  ClassConfig config;
  std::vector<FrameRecord> frames;
  UncertaintyKind kind = UncertaintyKind::entropy;
};

UncertaintyKind infer_kind(const DatasetManifest& m) {
  const AvailableSources s = probe_sources(m);
  const int count = int(s.uncertainty) + int(s.samples) + int(s.logits);
  if (count == 0) throw InvalidInput("dataset has no uncertainty source (uncertainty, samples or logit files)");
  if (count > 1) {
    throw InvalidInput("conflicting uncertainty sources in dataset; choose one with --uncertainty");
  }
  if (s.uncertainty) return UncertaintyKind::precomputed;
  if (s.samples) return UncertaintyKind::entropy;
  return UncertaintyKind::aleatoric;
}

Inputs load_inputs(const Common& c) {
  const DatasetManifest m = load_manifest(c.manifest);
  Inputs in;
  if (!c.classes.empty()) {
    in.config = load_class_config(c.classes);
  } else if (m.classes) {
    in.config = load_class_config(*m.classes);
  } else {
    throw InvalidInput("no class config: pass --classes or set 'classes' in the manifest");
  }
  for (ClassId id : parse_list<ClassId>(c.ignore_ids, "ignore id")) in.config.ignore_ids.insert(id);
  in.config.validate();
  in.kind = c.uncertainty.empty() ? infer_kind(m) : parse_uncertainty_kind(c.uncertainty);
  LoadOptions opts;
  opts.uncertainty = in.kind == UncertaintyKind::precomputed;
  opts.samples = in.kind == UncertaintyKind::entropy || in.kind == UncertaintyKind::mutual_information;
  opts.logits = in.kind == UncertaintyKind::aleatoric;
  opts.threads = c.threads;
  in.frames = load_frames(m, opts);
  return in;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

int cmd_ause(const Common& c, const std::string& csv_dir, std::ostream& out) {
  if (c.binned != 0 && c.binned < kMinHistogramBins) {
    throw InvalidInput("--binned needs at least " + std::to_string(kMinHistogramBins) + " bins");
  }
  const Inputs in = load_inputs(c);
  EvaluationOptions opts;
  opts.kind = in.kind;
  opts.grid = FractionGrid(c.steps);
  opts.threads = c.threads;
  opts.seed = c.seed;
  const SparsificationReport report = c.binned ? binned_evaluate(in.frames, in.config, opts, c.binned)
                                               : evaluate_dataset(in.frames, in.config, opts);
  write_report(c.out, report);
  if (!csv_dir.empty()) write_curve_csvs(csv_dir, report);
  out << "points " << report.num_points << "  mIoU " << fmt(report.miou) << "  mean AUSE "
      << fmt(report.mean_ause.normalized) << " (sum " << fmt(report.mean_ause.paper_scale) << ")\n";
  return kExitOk;
}

int cmd_uncertainty(const Common& c, bool raw, std::ostream& out) {
  const DatasetManifest m = load_manifest(c.manifest);
  fs::create_directories(c.out);
  std::size_t written = 0;
  for (const std::string& stem : m.frames) {
    LoadOptions opts;
    opts.uncertainty = false;
    const FrameRecord f = load_frame(m, stem, opts);
    std::vector<std::size_t> spatial =
        f.shape ? std::vector<std::size_t>{f.shape->height, f.shape->width} : std::vector<std::size_t>{f.size()};
    auto save = [&](const std::string& suffix, const std::vector<double>& v, std::vector<std::size_t> shape) {
      npy::save(fs::path(c.out) / (stem + suffix), npy::Array::from(std::span<const double>(v), std::move(shape)));
      ++written;
    };
    auto scale = [&](std::vector<double> v, std::size_t C) { return raw ? v : normalize_uncertainty(v, C); };
    if (f.samples) {
      const std::size_t C = f.samples->num_classes();
      const MeanSoftmax ms = mean_softmax(*f.samples);
      std::vector<std::size_t> with_c = spatial;
      with_c.push_back(C);
      save("_mean_softmax.npy", ms.probs, with_c);
      npy::save(fs::path(c.out) / (stem + "_argmax.npy"),
                npy::Array::from(std::span<const ClassId>(ms.pred), spatial));
      save("_entropy.npy", scale(predictive_entropy(ms.probs, C), C), spatial);
      save("_mutual_information.npy", scale(mutual_information(*f.samples), C), spatial);
    }
    if (f.logit_field) {
      const std::size_t C = f.logit_field->classes;
      const MCSampleSet s = sample_logits(*f.logit_field, frame_seed(c.seed, stem));
      save("_aleatoric.npy", scale(predictive_entropy(mean_softmax(s).probs, C), C), spatial);
    }
    if (!f.samples && !f.logit_field) throw InvalidInput("frame '" + stem + "' has no samples or logit fields");
  }
  out << "wrote " << written << " arrays to " << c.out << "\n";
  return kExitOk;
}

struct BaselineFlags {
  std::size_t ece_bins = kDefaultEceBins;
  std::string patch = "4x4";
  double accuracy_threshold = 0.5;
  std::string uncertainty_threshold = "mean";
};

int cmd_baselines(const Common& c, const BaselineFlags& b, std::ostream& out) {
  PatchSpec spec;
  const auto x = b.patch.find('x');
  const auto h = parse_list<std::size_t>(b.patch.substr(0, x), "patch");
  const auto w = x == std::string::npos ? h : parse_list<std::size_t>(b.patch.substr(x + 1), "patch");
  if (h.size() != 1 || w.size() != 1) throw InvalidInput("--patch expects HxW");
  spec.height = h[0];
  spec.width = w[0];
  spec.accuracy_threshold = b.accuracy_threshold;
  if (b.uncertainty_threshold != "mean") {
    const auto t = parse_list<double>(b.uncertainty_threshold, "uncertainty threshold");
    if (t.size() != 1) throw InvalidInput("--uncertainty-threshold expects a number or 'mean'");
    spec.uncertainty_threshold = t[0];
  }
  spec.validate();
  if (b.ece_bins < 1) throw InvalidInput("--ece-bins must be at least 1");
  const Inputs in = load_inputs(c);
  const BaselineReport r = evaluate_baselines(in.frames, in.config, in.kind, b.ece_bins, spec, c.seed, c.threads);
  write_file(c.out, baselines_to_json(r));
  out << "ECE " << fmt(r.ece) << "  PAvPU " << (r.pavpu.pavpu ? fmt(*r.pavpu.pavpu) : std::string("n/a")) << "\n";
  return kExitOk;
}

int cmd_audit(const Common& c, double tau, std::size_t min_size, std::ostream& out) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidInput("--tau outside [0, 1]");
  const Inputs in = load_inputs(c);
  AuditOptions opts;
  opts.tau = tau;
  opts.min_size = min_size;
  opts.kind = in.kind;
  opts.seed = c.seed;
  opts.threads = c.threads;
  const std::vector<AuditFinding> findings = audit_frames(in.frames, in.config, opts);
  write_findings(c.out, findings, tau, min_size);
  out << findings.size() << " findings\n";
  return kExitOk;
}

struct SynthFlags {
  std::string out;
  std::size_t num_classes = 20;
  std::size_t height = 64;
  std::size_t width = 512;
  std::size_t frames = 1;
  std::string layout = "striped";
  std::string mode = "calibrated";
  std::string accuracy = "0.9";
  std::string fractions;
  std::size_t samples = 2;
  bool logits = false;
  std::size_t logit_samples = kDefaultLogitSamples;
  double corrupt = 0.0;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

int cmd_synth(const SynthFlags& s, std::ostream& out) {
  ScenarioSpec spec;
  spec.num_classes = s.num_classes;
  spec.shape = {s.height, s.width};
  spec.num_frames = s.frames;
  spec.layout = parse_layout(s.layout);
  spec.mode = parse_calibration_mode(s.mode);
  spec.accuracy = parse_list<double>(s.accuracy, "accuracy");
  spec.class_fractions = parse_list<double>(s.fractions, "fraction");
  spec.emit_samples = s.samples > 0;
  spec.mc_samples = s.samples > 0 ? s.samples : 2;
  spec.emit_logits = s.logits;
  spec.logit_samples = s.logit_samples;
  spec.seed = s.seed;
  std::vector<SynthFrame> generated = generate_scenario(spec, s.threads);
  std::vector<FrameRecord> frames;
  frames.reserve(generated.size());
  for (SynthFrame& g : generated) frames.push_back(std::move(g.frame));

  ojson ledger = ojson::array();
  if (s.corrupt > 0.0) {
    CorruptedScenario corrupted = corrupt_labels(frames, spec.num_classes, s.corrupt, s.seed);
    frames = std::move(corrupted.frames);
    for (const CorruptionRegion& r : corrupted.ledger) {
      ledger.push_back({{"frame_id", r.frame_id},
                        {"row", r.row},
                        {"col", r.col},
                        {"height", r.height},
                        {"width", r.width},
                        {"shift", r.shift}});
    }
  }
  write_dataset(s.out, frames, ClassConfig::numbered(spec.num_classes));
  if (s.corrupt > 0.0) write_file(fs::path(s.out) / "corruption_ledger.json", ledger.dump(2) + "\n");
  out << "wrote " << frames.size() << " frames to " << s.out << "\n";
  return kExitOk;
}

int cmd_weights(const std::string& freq_path, const std::string& classes, const std::string& out_path,
                std::ostream& out) {
  std::vector<double> f;
  if (!freq_path.empty()) {
    f = npy::load(freq_path).as_double();
  } else if (!classes.empty()) {
    const ClassConfig config = load_class_config(classes);
    if (!config.frequencies) throw InvalidInput(classes + ": class config has no frequencies");
    f = *config.frequencies;
  } else {
    throw InvalidInput("weights needs --frequencies or --classes");
  }
  const std::vector<double> w = class_weights(f);
  const std::string text = ojson(w).dump() + "\n";
  if (!out_path.empty()) write_file(out_path, text);
  out << text;
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Calibration evaluation for point-wise segmentation", "segcal"};
  app.require_subcommand(1);

  Common c;
  std::string csv_dir;
  auto* ause = app.add_subcommand("ause", "Sparsification curves and AUSE report");
  add_common(ause, c, true);
  ause->add_option("--csv-dir", csv_dir, "Directory for per-class curve CSVs");

  Common cu;
  bool raw = false;
  auto* unc = app.add_subcommand("uncertainty", "Write entropy, mutual information and mean softmax arrays");
  unc->add_option("--manifest", cu.manifest, "Dataset manifest JSON")->required();
  unc->add_option("--out", cu.out, "Output directory")->required();
  unc->add_option("--seed", cu.seed, "Seed for logit sampling");
  unc->add_flag("--raw", raw, "Keep values in nats instead of normalizing by ln C");

  Common cb;
  BaselineFlags bf;
  auto* base = app.add_subcommand("baselines", "ECE and PAvPU");
  add_common(base, cb, false);
  base->add_option("--ece-bins", bf.ece_bins, "ECE bins");
  base->add_option("--patch", bf.patch, "PAvPU patch size HxW");
  base->add_option("--accuracy-threshold", bf.accuracy_threshold, "PAvPU patch accuracy threshold");
  base->add_option("--uncertainty-threshold", bf.uncertainty_threshold, "PAvPU threshold or 'mean'");

  Common ca;
  double tau = kDefaultAuditTau;
  std::size_t min_size = kDefaultAuditMinSize;
  auto* audit = app.add_subcommand("audit", "Confident-error clusters as JSON lines");
  add_common(audit, ca, false);
  audit->add_option("--tau", tau, "Normalized uncertainty threshold");
  audit->add_option("--min-size", min_size, "Smallest reported cluster");

  SynthFlags sf;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scenario on disk");
  synth->add_option("--out", sf.out, "Output directory")->required();
  synth->add_option("--num-classes", sf.num_classes, "Number of classes");
  synth->add_option("--height", sf.height, "Frame height");
  synth->add_option("--width", sf.width, "Frame width");
  synth->add_option("--frames", sf.frames, "Number of frames");
  synth->add_option("--layout", sf.layout, "striped | blobs");
  synth->add_option("--mode", sf.mode, "calibrated | anticalibrated | constant");
  synth->add_option("--accuracy", sf.accuracy, "Accuracy, one value or one per class");
  synth->add_option("--fractions", sf.fractions, "Comma-separated class fractions");
  synth->add_option("--samples", sf.samples, "MC samples per point, 0 for none");
  synth->add_flag("--logits", sf.logits, "Also write logit mean/std fields");
  synth->add_option("--logit-samples", sf.logit_samples, "Logit draws for aleatoric uncertainty");
  synth->add_option("--corrupt", sf.corrupt, "Fraction of pixels to relabel");
  synth->add_option("--seed", sf.seed, "Scenario seed");
  synth->add_option("--threads", sf.threads, "Worker threads, 0 = all cores");

  std::string freq_path, weight_classes, weight_out;
  auto* weights = app.add_subcommand("weights", "Class weights from frequencies");
  weights->add_option("--frequencies", freq_path, "NPY file with one frequency per class");
  weights->add_option("--classes", weight_classes, "Class config with frequencies");
  weights->add_option("--out", weight_out, "Output JSON path");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }

  try {
    if (*ause) return cmd_ause(c, csv_dir, out);
    if (*unc) return cmd_uncertainty(cu, raw, out);
    if (*base) return cmd_baselines(cb, bf, out);
    if (*audit) return cmd_audit(ca, tau, min_size, out);
    if (*synth) return cmd_synth(sf, out);
    if (*weights) return cmd_weights(freq_path, weight_classes, weight_out, out);
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace segcal::cli
