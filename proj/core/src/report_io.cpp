#include "segcal/report_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "segcal/error.hpp"

namespace segcal {
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kIouConvention =
    "iou is TP / (TP + FP + FN); classes with no labeled or predicted points report iou 1.0 "
    "with present=false and are excluded from the means";

ojson ause_json(const Ause& a) { return {{"normalized", a.normalized}, {"paper_scale", a.paper_scale}}; }

Ause ause_from(const ojson& j) {
  return {j.at("normalized").get<double>(), j.at("paper_scale").get<double>()};
}

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string file_safe(std::string_view name) {
  std::string out;
  for (char ch : name) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
                    ch == '-' || ch == '_';
    out += ok ? ch : '_';
  }
  return out;
}

std::string csv_rows(std::span<const double> fractions, std::initializer_list<std::span<const double>> cols) {
  std::string out = "fraction,oracle,sparsification,error,mean_uncertainty,std_uncertainty\n";
  for (std::size_t k = 0; k < fractions.size(); ++k) {
    out += shortest(fractions[k]);
    for (const auto& col : cols) {
      out += ',';
      out += k < col.size() ? shortest(col[k]) : std::string();
    }
    out += '\n';
  }
  return out;
}

}  // namespace

void write_file(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::string report_to_json(const SparsificationReport& r) {
  ojson j;
  j["schema"] = r.schema;
  j["uncertainty"] = r.uncertainty;
  j["mode"] = r.mode;
  j["bins"] = r.bins;
  j["steps"] = r.steps;
  j["iou_convention"] = kIouConvention;
  j["num_frames"] = r.num_frames;
  j["num_points"] = r.num_points;
  j["num_ignored"] = r.num_ignored;
  j["fractions"] = r.fractions;
  j["summary"] = {{"miou", r.miou},
                  {"mean_ause", ause_json(r.mean_ause)},
                  {"mean_oracle", r.mean_oracle},
                  {"mean_sparsification", r.mean_sparsification},
                  {"mean_error", r.mean_error},
                  {"remaining_mean", r.remaining_mean},
                  {"remaining_std", r.remaining_std}};
  ojson classes = ojson::array();
  for (const ClassReport& c : r.classes) {
    classes.push_back({{"id", c.id},
                       {"name", c.name},
                       {"scored", c.scored},
                       {"present", c.present},
                       {"degenerate", c.degenerate},
                       {"iou", c.iou},
                       {"tp", c.true_positives},
                       {"fp", c.false_positives},
                       {"fn", c.false_negatives},
                       {"ause", ause_json(c.ause)},
                       {"curves",
                        {{"oracle", c.oracle},
                         {"sparsification", c.sparsification},
                         {"error", c.error},
                         {"mean_uncertainty", c.mean_uncertainty},
                         {"std_uncertainty", c.std_uncertainty}}}});
  }
  j["classes"] = std::move(classes);
  return j.dump(2) + "\n";
}

SparsificationReport report_from_json(std::string_view text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw InvalidInput(std::string("invalid report JSON: ") + e.what());
  }
  try {
    SparsificationReport r;
    r.schema = j.at("schema").get<int>();
    if (r.schema != kReportSchema) throw InvalidInput("unsupported report schema " + std::to_string(r.schema));
    r.uncertainty = j.at("uncertainty").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.bins = j.at("bins").get<std::size_t>();
    r.steps = j.at("steps").get<std::size_t>();
    r.num_frames = j.at("num_frames").get<std::uint64_t>();
    r.num_points = j.at("num_points").get<std::uint64_t>();
    r.num_ignored = j.at("num_ignored").get<std::uint64_t>();
    r.fractions = j.at("fractions").get<std::vector<double>>();
    const ojson& s = j.at("summary");
    r.miou = s.at("miou").get<double>();
    r.mean_ause = ause_from(s.at("mean_ause"));
    r.mean_oracle = s.at("mean_oracle").get<std::vector<double>>();
    r.mean_sparsification = s.at("mean_sparsification").get<std::vector<double>>();
    r.mean_error = s.at("mean_error").get<std::vector<double>>();
    r.remaining_mean = s.at("remaining_mean").get<std::vector<double>>();
    r.remaining_std = s.at("remaining_std").get<std::vector<double>>();
    for (const ojson& cj : j.at("classes")) {
      ClassReport c;
      c.id = cj.at("id").get<ClassId>();
      c.name = cj.at("name").get<std::string>();
      c.scored = cj.at("scored").get<bool>();
      c.present = cj.at("present").get<bool>();
      c.degenerate = cj.at("degenerate").get<bool>();
      c.iou = cj.at("iou").get<double>();
      c.true_positives = cj.at("tp").get<std::uint64_t>();
      c.false_positives = cj.at("fp").get<std::uint64_t>();
      c.false_negatives = cj.at("fn").get<std::uint64_t>();
      c.ause = ause_from(cj.at("ause"));
      const ojson& curves = cj.at("curves");
      c.oracle = curves.at("oracle").get<std::vector<double>>();
      c.sparsification = curves.at("sparsification").get<std::vector<double>>();
      c.error = curves.at("error").get<std::vector<double>>();
      c.mean_uncertainty = curves.at("mean_uncertainty").get<std::vector<double>>();
      c.std_uncertainty = curves.at("std_uncertainty").get<std::vector<double>>();
      r.classes.push_back(std::move(c));
    }
    return r;
  } catch (const ojson::exception& e) {
    throw InvalidInput(std::string("malformed report: ") + e.what());
  }
}

void write_report(const fs::path& path, const SparsificationReport& report) {
  write_file(path, report_to_json(report));
}

SparsificationReport read_report(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return report_from_json(ss.str());
}

std::string curve_csv(const ClassReport& c, std::span<const double> fractions) {
  return csv_rows(fractions, {c.oracle, c.sparsification, c.error, c.mean_uncertainty, c.std_uncertainty});
}

std::vector<fs::path> write_curve_csvs(const fs::path& dir, const SparsificationReport& r) {
  fs::create_directories(dir);
  std::vector<fs::path> written;
  for (const ClassReport& c : r.classes) {
    const fs::path p = dir / ("class_" + std::to_string(c.id) + "_" + file_safe(c.name) + ".csv");
    write_file(p, curve_csv(c, r.fractions));
    written.push_back(p);
  }
  const fs::path mean = dir / "mean.csv";
  write_file(mean, csv_rows(r.fractions, {r.mean_oracle, r.mean_sparsification, r.mean_error, r.remaining_mean,
                                          r.remaining_std}));
  written.push_back(mean);
  return written;
}

std::string finding_to_json(const AuditFinding& f, double tau, std::size_t min_size) {
  ojson pixels = ojson::array();
  for (const Pixel& p : f.pixels) pixels.push_back({p.row, p.col});
  const ojson j = {{"frame_id", f.frame_id},
                   {"label_class", f.label_class},
                   {"predicted_class", f.predicted_class},
                   {"size", f.size},
                   {"mean_uncertainty", f.mean_uncertainty},
                   {"max_uncertainty", f.max_uncertainty},
                   {"score", f.score},
                   {"tau", tau},
                   {"min_size", min_size},
                   {"pixels", std::move(pixels)}};
  return j.dump();
}

void write_findings(const fs::path& path, std::span<const AuditFinding> findings, double tau,
                    std::size_t min_size) {
  std::string text;
  for (const AuditFinding& f : findings) text += finding_to_json(f, tau, min_size) + "\n";
  write_file(path, text);
}

std::string baselines_to_json(const BaselineReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); };
  ojson j;
  j["num_points"] = r.num_points;
  j["ece"] = {{"bins", r.ece_bins}, {"value", r.ece}};
  j["pavpu"] = {{"patch", {r.patch.height, r.patch.width}},
                {"accuracy_threshold", r.patch.accuracy_threshold},
                {"uncertainty_threshold", r.resolved_uncertainty_threshold},
                {"counts",
                 {{"accurate_certain", r.counts.accurate_certain},
                  {"accurate_uncertain", r.counts.accurate_uncertain},
                  {"inaccurate_certain", r.counts.inaccurate_certain},
                  {"inaccurate_uncertain", r.counts.inaccurate_uncertain}}},
                {"p_accurate_given_certain", opt(r.pavpu.p_accurate_given_certain)},
                {"p_uncertain_given_inaccurate", opt(r.pavpu.p_uncertain_given_inaccurate)},
                {"pavpu", opt(r.pavpu.pavpu)}};
  return j.dump(2) + "\n";
}

}  // namespace segcal
