#include "emsserve/metrics.h"

#include <charconv>
#include <map>
#include <sstream>

#include <json.hpp>

#include "emsserve/error.h"
#include "io_util.h"

namespace emsserve {

using nlohmann::json;

Comparison speedup(const RunReport& base, const RunReport& ems) {
  if (base.episode_id != ems.episode_id)
    fail(ErrorKind::MismatchedRuns,
         "episodes differ: '" + base.episode_id + "' vs '" + ems.episode_id + "'");
  if (base.config_fingerprint != ems.config_fingerprint)
    fail(ErrorKind::MismatchedRuns, "config fingerprints differ");
  if (base.per_event.size() != ems.per_event.size())
    fail(ErrorKind::MismatchedRuns, "event counts differ");
  Comparison c;
  c.episode_id = base.episode_id;
  c.config_fingerprint = base.config_fingerprint;
  c.baseline_total_s = base.total_s;
  c.emsserve_total_s = ems.total_s;
  if (!(base.total_s > 0) || !(ems.total_s > 0))
    fail(ErrorKind::InvalidArgs, "totals must be positive to compare");
  c.speedup = base.total_s / ems.total_s;
  for (std::size_t i = 0; i < base.per_event.size(); ++i) {
    if (base.per_event[i].index != ems.per_event[i].index)
      fail(ErrorKind::MismatchedRuns, "event indices differ at row " + std::to_string(i + 1));
    c.per_event_delta.push_back(base.per_event[i].cumulative_s - ems.per_event[i].cumulative_s);
  }
  return c;
}

ExportFormat parse_export_format(std::string_view s) {
  if (s == "csv") return ExportFormat::Csv;
  if (s == "json") return ExportFormat::Json;
  fail(ErrorKind::InvalidArgs, "format must be csv or json, got '" + std::string(s) + "'");
}

ExportFormat format_from_path(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".csv") return ExportFormat::Csv;
  if (ext == ".json") return ExportFormat::Json;
  fail(ErrorKind::InvalidArgs, "cannot infer format from '" + path.string() + "'");
}

namespace {

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::SchemaError, std::string("invalid JSON: ") + e.what());
  }
}

void check_schema(const json& j) {
  if (!j.is_object() || j.value("schema", 0) != 1)
    fail(ErrorKind::SchemaError, "expected an object with \"schema\": 1");
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    pos = nl + 1;
  }
  return out;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t p = 0;
  while (true) {
    auto c = line.find(',', p);
    out.push_back(line.substr(p, c == std::string_view::npos ? std::string_view::npos : c - p));
    if (c == std::string_view::npos) return out;
    p = c + 1;
  }
}

double number_field(std::string_view s, std::string_view what) {
  double v = 0;
  if (!detail::parse_double(s, v)) fail(ErrorKind::SchemaError, "bad " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}

template <typename Int>
Int integer_field(std::string_view s, std::string_view what) {
  Int v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    fail(ErrorKind::SchemaError, "bad " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}

// Collects "# key=value" lines; other lines go to `rows`.
std::map<std::string, std::string> split_csv(std::string_view text, std::string_view header,
                                             std::vector<std::string_view>& rows) {
  std::map<std::string, std::string> meta;
  bool seen_header = false;
  for (auto line : lines_of(text)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      auto body = detail::trim(line.substr(1));
      auto eq = body.find('=');
      if (eq != std::string_view::npos)
        meta[std::string(body.substr(0, eq))] = std::string(body.substr(eq + 1));
      continue;
    }
    if (!seen_header) {
      if (line != header)
        fail(ErrorKind::SchemaError, "expected CSV header '" + std::string(header) + "'");
      seen_header = true;
      continue;
    }
    rows.push_back(line);
  }
  if (!seen_header) fail(ErrorKind::SchemaError, "CSV header missing");
  if (meta["schema"] != "1") fail(ErrorKind::SchemaError, "CSV metadata must declare schema=1");
  return meta;
}

const std::string& meta_at(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) fail(ErrorKind::SchemaError, "CSV metadata lacks '" + key + "'");
  return it->second;
}

Modality modality_field(std::string_view s) {
  if (s.size() != 1) fail(ErrorKind::SchemaError, "bad modality '" + std::string(s) + "'");
  try {
    return modality_from_tag(s[0]);
  } catch (const Error&) {
    fail(ErrorKind::SchemaError, "bad modality '" + std::string(s) + "'");
  }
}

Placement placement_field(std::string_view s) { return parse_placement(s); }

RunMode mode_field(std::string_view s) {
  try {
    return parse_run_mode(s);
  } catch (const Error&) {
    fail(ErrorKind::SchemaError, "bad mode '" + std::string(s) + "'");
  }
}

}  // namespace

std::string report_to_json_text(const RunReport& r) {
  json j;
  j["schema"] = 1;
  j["episode_id"] = r.episode_id;
  j["mode"] = to_string(r.mode);
  j["config_fingerprint"] = r.config_fingerprint;
  j["total_s"] = r.total_s;
  j["per_event"] = json::array();
  for (const auto& e : r.per_event) {
    json row;
    row["index"] = e.index;
    row["modality"] = std::string(1, arrival_tag(e.modality));
    row["placement"] = to_string(e.placement);
    row["latency_s"] = e.latency_s;
    row["cumulative_s"] = e.cumulative_s;
    if (e.recommendation)
      row["recommendation"] = {{"model_id", e.recommendation->model_id},
                               {"class_index", e.recommendation->class_index}};
    else
      row["recommendation"] = nullptr;
    j["per_event"].push_back(std::move(row));
  }
  return j.dump(2) + "\n";
}

RunReport report_from_json_text(std::string_view text) {
  json j = parse_json(text);
  check_schema(j);
  try {
    RunReport r;
    r.episode_id = j.at("episode_id").get<std::string>();
    r.mode = mode_field(j.at("mode").get<std::string>());
    r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    r.total_s = j.at("total_s").get<double>();
    for (const auto& row : j.at("per_event")) {
      EventRecord e;
      e.index = row.at("index").get<std::uint64_t>();
      e.modality = modality_field(row.at("modality").get<std::string>());
      e.placement = placement_field(row.at("placement").get<std::string>());
      e.latency_s = row.at("latency_s").get<double>();
      e.cumulative_s = row.at("cumulative_s").get<double>();
      const auto& rec = row.at("recommendation");
      if (!rec.is_null())
        e.recommendation = Recommendation{rec.at("class_index").get<std::size_t>(),
                                          rec.at("model_id").get<std::string>(), e.index};
      r.per_event.push_back(std::move(e));
    }
    return r;
  } catch (const json::exception& e) {
    fail(ErrorKind::SchemaError, std::string("run report: ") + e.what());
  }
}

std::string report_to_csv_text(const RunReport& r) {
  std::ostringstream out;
  out << kReportCsvHeader << '\n';
  for (const auto& e : r.per_event) {
    out << e.index << ',' << arrival_tag(e.modality) << ',' << to_string(e.placement) << ','
        << detail::format_double(e.latency_s) << ',' << detail::format_double(e.cumulative_s) << ',';
    if (e.recommendation)
      out << e.recommendation->model_id << ':' << e.recommendation->class_index;
    else
      out << "pending";
    out << '\n';
  }
  out << "# schema=1\n"
      << "# episode_id=" << r.episode_id << '\n'
      << "# mode=" << to_string(r.mode) << '\n'
      << "# config_fingerprint=" << r.config_fingerprint << '\n'
      << "# total_s=" << detail::format_double(r.total_s) << '\n';
  return out.str();
}

RunReport report_from_csv_text(std::string_view text) {
  std::vector<std::string_view> rows;
  auto meta = split_csv(text, kReportCsvHeader, rows);
  RunReport r;
  r.episode_id = meta_at(meta, "episode_id");
  r.mode = mode_field(meta_at(meta, "mode"));
  r.config_fingerprint = meta_at(meta, "config_fingerprint");
  r.total_s = number_field(meta_at(meta, "total_s"), "total_s");
  for (auto line : rows) {
    auto f = split_commas(line);
    if (f.size() != 6) fail(ErrorKind::SchemaError, "report row needs 6 fields: '" + std::string(line) + "'");
    EventRecord e;
    e.index = integer_field<std::uint64_t>(f[0], "index");
    e.modality = modality_field(f[1]);
    e.placement = placement_field(f[2]);
    e.latency_s = number_field(f[3], "latency_s");
    e.cumulative_s = number_field(f[4], "cumulative_s");
    if (f[5] != "pending") {
      auto colon = f[5].rfind(':');
      if (colon == std::string_view::npos || colon == 0)
        fail(ErrorKind::SchemaError, "bad recommendation '" + std::string(f[5]) + "'");
      e.recommendation = Recommendation{integer_field<std::size_t>(f[5].substr(colon + 1), "class"),
                                        std::string(f[5].substr(0, colon)), e.index};
    }
    r.per_event.push_back(std::move(e));
  }
  return r;
}

std::string comparison_to_json_text(const Comparison& c) {
  json j;
  j["schema"] = 1;
  j["episode_id"] = c.episode_id;
  j["config_fingerprint"] = c.config_fingerprint;
  j["baseline_total_s"] = c.baseline_total_s;
  j["emsserve_total_s"] = c.emsserve_total_s;
  j["speedup"] = c.speedup;
  j["per_event_delta"] = c.per_event_delta;
  return j.dump(2) + "\n";
}

Comparison comparison_from_json_text(std::string_view text) {
  json j = parse_json(text);
  check_schema(j);
  try {
    Comparison c;
    c.episode_id = j.at("episode_id").get<std::string>();
    c.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    c.baseline_total_s = j.at("baseline_total_s").get<double>();
    c.emsserve_total_s = j.at("emsserve_total_s").get<double>();
    c.speedup = j.at("speedup").get<double>();
    c.per_event_delta = j.at("per_event_delta").get<std::vector<double>>();
    return c;
  } catch (const json::exception& e) {
    fail(ErrorKind::SchemaError, std::string("comparison: ") + e.what());
  }
}

namespace {
constexpr std::string_view kComparisonCsvHeader = "index,cumulative_delta_s";
}

std::string comparison_to_csv_text(const Comparison& c) {
  std::ostringstream out;
  out << kComparisonCsvHeader << '\n';
  for (std::size_t i = 0; i < c.per_event_delta.size(); ++i)
    out << i + 1 << ',' << detail::format_double(c.per_event_delta[i]) << '\n';
  out << "# schema=1\n"
      << "# episode_id=" << c.episode_id << '\n'
      << "# config_fingerprint=" << c.config_fingerprint << '\n'
      << "# baseline_total_s=" << detail::format_double(c.baseline_total_s) << '\n'
      << "# emsserve_total_s=" << detail::format_double(c.emsserve_total_s) << '\n'
      << "# speedup=" << detail::format_double(c.speedup) << '\n';
  return out.str();
}

Comparison comparison_from_csv_text(std::string_view text) {
  std::vector<std::string_view> rows;
  auto meta = split_csv(text, kComparisonCsvHeader, rows);
  Comparison c;
  c.episode_id = meta_at(meta, "episode_id");
  c.config_fingerprint = meta_at(meta, "config_fingerprint");
  c.baseline_total_s = number_field(meta_at(meta, "baseline_total_s"), "baseline_total_s");
  c.emsserve_total_s = number_field(meta_at(meta, "emsserve_total_s"), "emsserve_total_s");
  c.speedup = number_field(meta_at(meta, "speedup"), "speedup");
  for (auto line : rows) {
    auto f = split_commas(line);
    if (f.size() != 2) fail(ErrorKind::SchemaError, "comparison row needs 2 fields");
    if (integer_field<std::size_t>(f[0], "index") != c.per_event_delta.size() + 1)
      fail(ErrorKind::SchemaError, "comparison rows out of order");
    c.per_event_delta.push_back(number_field(f[1], "delta"));
  }
  return c;
}

void export_report(const RunReport& report, ExportFormat format, const std::filesystem::path& path) {
  detail::write_file(path, format == ExportFormat::Csv ? report_to_csv_text(report)
                                                       : report_to_json_text(report));
}

RunReport import_report(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  return format_from_path(path) == ExportFormat::Csv ? report_from_csv_text(text)
                                                     : report_from_json_text(text);
}

void export_comparison(const Comparison& c, ExportFormat format, const std::filesystem::path& path) {
  detail::write_file(path, format == ExportFormat::Csv ? comparison_to_csv_text(c)
                                                       : comparison_to_json_text(c));
}

Comparison import_comparison(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  return format_from_path(path) == ExportFormat::Csv ? comparison_from_csv_text(text)
                                                     : comparison_from_json_text(text);
}

}  // namespace emsserve
