#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "segcal/audit.hpp"
#include "segcal/baselines.hpp"
#include "segcal/sparsification.hpp"

namespace segcal {

/// Pretty-printed report JSON with a trailing newline. Doubles use the
/// shortest round-trip form, so report_from_json(report_to_json(r)) == r.
std::string report_to_json(const SparsificationReport& report);
/// Throws InvalidInput on malformed input or an unknown schema version.
SparsificationReport report_from_json(std::string_view text);

void write_report(const std::filesystem::path& path, const SparsificationReport& report);
SparsificationReport read_report(const std::filesystem::path& path);

/// Header plus one row per grid step.
std::string curve_csv(const ClassReport& cls, std::span<const double> fractions);
/// One file per class named "class_<id>_<name>.csv" and "mean.csv" for the
/// class-averaged curves. Returns the written paths.
std::vector<std::filesystem::path> write_curve_csvs(const std::filesystem::path& dir,
                                                    const SparsificationReport& report);

std::string finding_to_json(const AuditFinding& finding, double tau, std::size_t min_size);
/// JSON lines, one finding per line; an empty file when there are none.
void write_findings(const std::filesystem::path& path, std::span<const AuditFinding> findings,
                    double tau, std::size_t min_size);

std::string baselines_to_json(const BaselineReport& report);

/// Writes text to a file, throwing on failure.
void write_file(const std::filesystem::path& path, std::string_view text);

}  // namespace segcal
