#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "emsserve/runner.h"

namespace emsserve {

struct Comparison {
  std::string episode_id;
  std::string config_fingerprint;
  double baseline_total_s = 0;
  double emsserve_total_s = 0;
  double speedup = 0;
  // Baseline cumulative minus EMSServe cumulative, per event.
  std::vector<double> per_event_delta;

  bool operator==(const Comparison&) const = default;
};

// Throws MismatchedRuns unless both reports cover the same episode, config
// fingerprint and event indices; InvalidArgs if a total is not positive.
Comparison speedup(const RunReport& base, const RunReport& ems);

enum class ExportFormat : std::uint8_t { Csv, Json };

// ".csv" -> Csv, ".json" -> Json; InvalidArgs otherwise.
ExportFormat format_from_path(const std::filesystem::path& path);
ExportFormat parse_export_format(std::string_view s);

inline constexpr std::string_view kReportCsvHeader =
    "index,modality,placement,latency_s,cumulative_s,recommendation";

std::string report_to_json_text(const RunReport& report);
RunReport report_from_json_text(std::string_view text);
// Header row, one row per event, then "# key=value" metadata lines.
std::string report_to_csv_text(const RunReport& report);
RunReport report_from_csv_text(std::string_view text);

std::string comparison_to_json_text(const Comparison& c);
Comparison comparison_from_json_text(std::string_view text);
std::string comparison_to_csv_text(const Comparison& c);
Comparison comparison_from_csv_text(std::string_view text);

// Throw IoError when the path cannot be written or read, SchemaError on
// malformed input.
void export_report(const RunReport& report, ExportFormat format, const std::filesystem::path& path);
RunReport import_report(const std::filesystem::path& path);
void export_comparison(const Comparison& c, ExportFormat format, const std::filesystem::path& path);
Comparison import_comparison(const std::filesystem::path& path);

}  // namespace emsserve
