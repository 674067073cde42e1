#include "segcal/dataset.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "segcal/error.hpp"
#include "segcal/npy.hpp"
#include "segcal/parallel.hpp"

namespace segcal {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

json parse_json(std::string_view text, std::string_view origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string(origin) + ": invalid JSON: " + e.what());
  }
}

template <typename T>
T field(const json& j, const char* key, std::string_view origin) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidInput(std::string(origin) + ": missing or mistyped '" + key + "'");
  }
}

std::string shape_text(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? ", " : "") + std::to_string(shape[i]);
  return s + ")";
}

[[noreturn]] void bad_shape(const fs::path& path, const std::vector<std::size_t>& shape, const std::string& want) {
  throw InvalidInput(path.string() + ": shape " + shape_text(shape) + " does not match " + want);
}

fs::path relative_if_possible(const fs::path& target, const fs::path& base) {
  std::error_code ec;
  fs::path rel = fs::relative(target, base, ec);
  return ec || rel.empty() ? target : rel;
}

std::vector<ClassId> ids_of(const npy::Array& a) {
  const std::vector<std::int32_t> v = a.as_int32();
  return {v.begin(), v.end()};
}

}  // namespace

ClassConfig parse_class_config(std::string_view text, std::string_view origin) {
  const json j = parse_json(text, origin);
  if (!j.is_object()) throw InvalidInput(std::string(origin) + ": class config must be an object");
  ClassConfig config;
  if (j.contains("names")) {
    config.names = field<std::vector<std::string>>(j, "names", origin);
  } else if (j.contains("num_classes")) {
    config = ClassConfig::numbered(field<std::size_t>(j, "num_classes", origin));
  } else {
    throw InvalidInput(std::string(origin) + ": class config needs 'names' or 'num_classes'");
  }
  if (j.contains("ignore_ids")) {
    for (ClassId id : field<std::vector<ClassId>>(j, "ignore_ids", origin)) config.ignore_ids.insert(id);
  }
  if (j.contains("frequencies") && !j.at("frequencies").is_null()) {
    config.frequencies = field<std::vector<double>>(j, "frequencies", origin);
    if (config.frequencies->size() != config.num_classes()) {
      throw InvalidInput(std::string(origin) + ": 'frequencies' needs one value per class");
    }
  }
  config.validate();
  return config;
}

ClassConfig load_class_config(const fs::path& path) {
  return parse_class_config(read_text(path), path.string());
}

void save_class_config(const fs::path& path, const ClassConfig& config) {
  nlohmann::ordered_json j;
  j["names"] = config.names;
  j["ignore_ids"] = std::vector<ClassId>(config.ignore_ids.begin(), config.ignore_ids.end());
  if (config.frequencies) j["frequencies"] = *config.frequencies;
  write_text(path, j.dump(2) + "\n");
}

DatasetManifest load_manifest(const fs::path& path) {
  const std::string origin = path.string();
  const json j = parse_json(read_text(path), origin);
  if (!j.is_object()) throw InvalidInput(origin + ": manifest must be an object");
  const fs::path base = path.parent_path();
  DatasetManifest m;
  m.root = base / fs::path(j.value("root", std::string(".")));
  if (j.contains("classes")) m.classes = base / fs::path(field<std::string>(j, "classes", origin));
  m.frames = field<std::vector<std::string>>(j, "frames", origin);
  if (j.contains("logit_samples")) m.logit_samples = field<std::size_t>(j, "logit_samples", origin);
  if (j.contains("suffixes")) {
    const json& s = j.at("suffixes");
    if (!s.is_object()) throw InvalidInput(origin + ": 'suffixes' must be an object");
    auto take = [&](const char* key, std::string& dst) {
      if (s.contains(key)) dst = field<std::string>(s, key, origin);
    };
    take("pred", m.suffixes.pred);
    take("label", m.suffixes.label);
    take("uncertainty", m.suffixes.uncertainty);
    take("samples", m.suffixes.samples);
    take("logit_mean", m.suffixes.logit_mean);
    take("logit_std", m.suffixes.logit_std);
  }
  for (const auto& stem : m.frames) {
    if (stem.empty()) throw InvalidInput(origin + ": empty frame stem");
    if (!fs::exists(m.file(stem, m.suffixes.label))) {
      throw InvalidInput(origin + ": frame '" + stem + "' has no label file " +
                         m.file(stem, m.suffixes.label).string());
    }
  }
  return m;
}

void save_manifest(const fs::path& path, const DatasetManifest& m) {
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  nlohmann::ordered_json j;
  j["root"] = relative_if_possible(m.root, base).generic_string();
  if (m.classes) j["classes"] = relative_if_possible(*m.classes, base).generic_string();
  j["logit_samples"] = m.logit_samples;
  j["suffixes"] = {{"pred", m.suffixes.pred},
                   {"label", m.suffixes.label},
                   {"uncertainty", m.suffixes.uncertainty},
                   {"samples", m.suffixes.samples},
                   {"logit_mean", m.suffixes.logit_mean},
                   {"logit_std", m.suffixes.logit_std}};
  j["frames"] = m.frames;
  write_text(path, j.dump(2) + "\n");
}

AvailableSources probe_sources(const DatasetManifest& m) {
  AvailableSources a;
  for (const auto& stem : m.frames) {
    a.uncertainty = a.uncertainty || fs::exists(m.file(stem, m.suffixes.uncertainty));
    a.samples = a.samples || fs::exists(m.file(stem, m.suffixes.samples));
    a.logits = a.logits || fs::exists(m.file(stem, m.suffixes.logit_mean));
  }
  return a;
}

FrameRecord load_frame(const DatasetManifest& m, const std::string& stem, const LoadOptions& options) {
  FrameRecord frame;
  frame.frame_id = stem;

  const fs::path label_path = m.file(stem, m.suffixes.label);
  const npy::Array label = npy::load(label_path);
  if (label.shape.size() == 2) {
    frame.shape = ImageShape{label.shape[0], label.shape[1]};
  } else if (label.shape.size() != 1) {
    bad_shape(label_path, label.shape, "(N) or (H, W)");
  }
  frame.label = ids_of(label);
  const std::size_t n = frame.label.size();
  const std::vector<std::size_t> spatial = label.shape;
  auto with = [&](std::initializer_list<std::size_t> pre, std::initializer_list<std::size_t> post) {
    std::vector<std::size_t> s(pre);
    s.insert(s.end(), spatial.begin(), spatial.end());
    s.insert(s.end(), post);
    return s;
  };

  const fs::path pred_path = m.file(stem, m.suffixes.pred);
  if (fs::exists(pred_path)) {
    const npy::Array pred = npy::load(pred_path);
    if (pred.shape != spatial) bad_shape(pred_path, pred.shape, "label shape " + shape_text(spatial));
    frame.pred = ids_of(pred);
  }

  const fs::path unc_path = m.file(stem, m.suffixes.uncertainty);
  if (options.uncertainty && fs::exists(unc_path)) {
    const npy::Array u = npy::load(unc_path);
    if (u.shape != spatial) bad_shape(unc_path, u.shape, "label shape " + shape_text(spatial));
    frame.uncertainty = u.as_double();
  }

  const fs::path samples_path = m.file(stem, m.suffixes.samples);
  const bool need_samples = options.samples || frame.pred.empty();
  if (need_samples && fs::exists(samples_path)) {
    const npy::Array s = npy::load(samples_path);
    if (s.shape.size() != spatial.size() + 2 || s.shape.front() == 0 ||
        s.shape != with({s.shape.front()}, {s.shape.back()})) {
      bad_shape(samples_path, s.shape, "(T, " + shape_text(spatial) + ", C) layout");
    }
    try {
      frame.samples = MCSampleSet(s.shape.front(), n, s.shape.back(), s.as_double());
    } catch (const InvalidInput& e) {
      throw InvalidInput(samples_path.string() + ": " + e.what());
    }
  }
  if (frame.pred.empty()) {
    if (!frame.samples) throw InvalidInput("frame '" + stem + "' has neither a prediction nor samples");
    frame.pred = mean_softmax(*frame.samples).pred;
  }
  if (!options.samples && frame.samples) frame.samples.reset();

  const fs::path mean_path = m.file(stem, m.suffixes.logit_mean);
  if (options.logits && fs::exists(mean_path)) {
    const fs::path std_path = m.file(stem, m.suffixes.logit_std);
    const npy::Array mu = npy::load(mean_path);
    if (mu.shape.size() != spatial.size() + 1 || mu.shape != with({}, {mu.shape.back()})) {
      bad_shape(mean_path, mu.shape, "label shape plus a class axis");
    }
    if (!fs::exists(std_path)) throw InvalidInput("frame '" + stem + "' has logit means but no " + std_path.string());
    const npy::Array sd = npy::load(std_path);
    if (sd.shape != mu.shape) bad_shape(std_path, sd.shape, "logit mean shape " + shape_text(mu.shape));
    LogitGaussianField field;
    field.points = n;
    field.classes = mu.shape.back();
    field.mu = mu.as_double();
    field.sigma = sd.as_double();
    field.logit_samples = m.logit_samples;
    frame.logit_field = std::move(field);
  }
  return frame;
}

std::vector<FrameRecord> load_frames(const DatasetManifest& m, const LoadOptions& options) {
  std::vector<FrameRecord> frames(m.frames.size());
  parallel_for(frames.size(), options.threads, [&](std::size_t f) { frames[f] = load_frame(m, m.frames[f], options); });
  return frames;
}

void write_dataset(const fs::path& dir, std::span<const FrameRecord> frames, const ClassConfig& config) {
  fs::create_directories(dir);
  DatasetManifest m;
  m.root = dir;
  m.classes = dir / "classes.json";
  for (const FrameRecord& f : frames) {
    std::vector<std::size_t> spatial = f.shape ? std::vector<std::size_t>{f.shape->height, f.shape->width}
                                               : std::vector<std::size_t>{f.size()};
    auto extended = [&](std::initializer_list<std::size_t> pre, std::initializer_list<std::size_t> post) {
      std::vector<std::size_t> s(pre);
      s.insert(s.end(), spatial.begin(), spatial.end());
      s.insert(s.end(), post);
      return s;
    };
    m.frames.push_back(f.frame_id);
    npy::save(m.file(f.frame_id, m.suffixes.label), npy::Array::from(std::span<const ClassId>(f.label), spatial));
    npy::save(m.file(f.frame_id, m.suffixes.pred), npy::Array::from(std::span<const ClassId>(f.pred), spatial));
    if (f.uncertainty) {
      npy::save(m.file(f.frame_id, m.suffixes.uncertainty),
                npy::Array::from(std::span<const double>(*f.uncertainty), spatial));
    }
    if (f.samples) {
      npy::save(m.file(f.frame_id, m.suffixes.samples),
                npy::Array::from(std::span<const double>(f.samples->data()),
                                 extended({f.samples->num_samples()}, {f.samples->num_classes()})));
    }
    if (f.logit_field) {
      const auto shape = extended({}, {f.logit_field->classes});
      npy::save(m.file(f.frame_id, m.suffixes.logit_mean), npy::Array::from(std::span<const double>(f.logit_field->mu), shape));
      npy::save(m.file(f.frame_id, m.suffixes.logit_std), npy::Array::from(std::span<const double>(f.logit_field->sigma), shape));
      m.logit_samples = f.logit_field->logit_samples;
    }
  }
  save_class_config(*m.classes, config);
  save_manifest(dir / "manifest.json", m);
}

}  // namespace segcal
