#include "emsserve/profiling.h"

#include <cmath>
#include <cstdint>
#include <set>

#include "emsserve/error.h"
#include "io_util.h"
#include "json.hpp"

namespace emsserve {

using nlohmann::json;

void LatencyProfile::set(std::string_view module, std::string_view device, double seconds) {
  if (module.empty() || device.empty())
    fail(ErrorKind::SchemaError, "profile key with empty module or device");
  if (!std::isfinite(seconds) || seconds < 0)
    fail(ErrorKind::SchemaError, std::string(device) + "/" + std::string(module) +
                                     ": latency must be finite and non-negative");
  entries_[{std::string(module), std::string(device)}] = seconds;
}

std::optional<double> LatencyProfile::find(std::string_view module,
                                           std::string_view device) const {
  auto it = entries_.find({std::string(module), std::string(device)});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<DeviceId> LatencyProfile::devices() const {
  std::set<DeviceId> seen;
  for (const auto& [key, _] : entries_) seen.insert(key.second);
  return {seen.begin(), seen.end()};
}

void LatencyProfile::merge(const LatencyProfile& other) {
  for (const auto& [key, v] : other.entries_) entries_[key] = v;
}

double lookup(const LatencyProfile& profile, std::string_view module, std::string_view device) {
  if (auto v = profile.find(module, device)) return *v;
  fail(ErrorKind::ProfileMiss,
       "no latency for " + std::string(module) + " on " + std::string(device));
}

double measure(const TimedRunner& runner, int total_runs, int keep_last) {
  if (keep_last < 1 || total_runs < keep_last)
    fail(ErrorKind::InvalidArgs, "need total_runs >= keep_last >= 1 (got " +
                                     std::to_string(total_runs) + ", " +
                                     std::to_string(keep_last) + ")");
  // Integer nanoseconds keep the sum exact; one rounding at the division.
  std::int64_t kept_ns = 0;
  const int skip = total_runs - keep_last;
  for (int i = 0; i < total_runs; ++i) {
    auto d = runner();
    if (i >= skip) kept_ns += d.count();
  }
  return static_cast<double>(kept_ns) / (static_cast<double>(keep_last) * 1e9);
}

TimedRunner wall_timed(std::function<void()> fn) {
  return [fn = std::move(fn)]() {
    auto start = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
        std::chrono::steady_clock::now() - start);
  };
}

std::string profile_to_json_text(const LatencyProfile& profile) {
  json j = json::object();
  j["schema"] = 1;
  for (const auto& [key, v] : profile.entries()) j[key.second][key.first] = v;
  return j.dump(2) + "\n";
}

LatencyProfile profile_from_json_text(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    fail(ErrorKind::SchemaError, "profile: expected a JSON object");
  LatencyProfile p;
  for (const auto& [device, modules] : j.items()) {
    if (device == "schema") {
      if (!modules.is_number_integer() || modules.get<int>() != 1)
        fail(ErrorKind::SchemaError, "profile: unsupported schema version");
      continue;
    }
    if (!modules.is_object())
      fail(ErrorKind::SchemaError, "profile: device '" + device + "' must map to an object");
    for (const auto& [module, v] : modules.items()) {
      if (!v.is_number())
        fail(ErrorKind::SchemaError, "profile: " + device + "/" + module + " is not a number");
      p.set(module, device, v.get<double>());
    }
  }
  return p;
}

void profile_store_save(const LatencyProfile& profile, const std::filesystem::path& path) {
  detail::write_file(path, profile_to_json_text(profile));
}

LatencyProfile profile_store_load(const std::filesystem::path& path) {
  return profile_from_json_text(detail::read_file(path));
}

LatencyProfile expand_role_costs(const ModelFamily& family, std::string_view device,
                                 const RoleCosts& costs) {
  LatencyProfile p;
  for (const auto& m : family.models()) {
    p.set(m.header_id, device, costs.header);
    for (const auto& e : m.encoders) {
      double c = 0;
      switch (e.modality) {
        case Modality::Text: c = costs.text; break;
        case Modality::Vitals: c = costs.vitals; break;
        case Modality::Image: c = costs.image; break;
      }
      p.set(e.module_id, device, c);
    }
  }
  return p;
}

namespace {

struct DeviceCosts {
  std::string_view device;
  double detector;  // object-detector latency measured on the platform
  RoleCosts roles;
};

// Image costs are the measured detector latencies. The speech/text module is
// set to 5x the detector, vitals and headers to small sub-10 ms values.
constexpr DeviceCosts kDevices[] = {
    {"glass", 3.2, {16.0, 0.001, 3.2, 0.002}},
    {"ph1", 0.7, {3.5, 0.0006, 0.7, 0.001}},
    {"edge-4c", 0.08, {0.4, 0.0002, 0.08, 0.0002}},
    {"edge-64x", 0.03, {0.15, 0.0001, 0.03, 0.0001}},
};

}  // namespace

RoleCosts device_role_costs(std::string_view device) {
  for (const auto& d : kDevices)
    if (d.device == device) return d.roles;
  fail(ErrorKind::ConfigError, "no preset costs for device '" + std::string(device) + "'");
}

std::vector<std::string> preset_profile_names() {
  return {"fig7-yolo", "fig7-synthetic", "devices"};
}

LatencyProfile preset_profile(std::string_view name) {
  if (name == "fig7-yolo") {
    LatencyProfile p;
    for (const auto& d : kDevices) {
      p.set("image-detector", d.device, d.detector);
      p.set("M3_I", d.device, d.detector);
    }
    return p;
  }
  if (name == "fig7-synthetic") {
    return expand_role_costs(ModelFamily::standard(), "glass", {1.0, 0.001, 0.1, 0.001});
  }
  if (name == "devices") {
    LatencyProfile p;
    for (const auto& d : kDevices)
      p.merge(expand_role_costs(ModelFamily::standard(), d.device, d.roles));
    return p;
  }
  fail(ErrorKind::ConfigError, "unknown profile preset '" + std::string(name) + "'");
}

LatencyProfile profile_family(const ModelFamily& family, std::string_view device,
                              int total_runs, int keep_last) {
  LatencyProfile p;
  for (const auto& m : family.models()) {
    std::map<Modality, FeatureVector> features;
    for (const auto& e : m.encoders) {
      double s = measure(wall_timed([&] { features[e.modality] = eval_encoder(e, "probe", 0); }),
                         total_runs, keep_last);
      p.set(e.module_id, device, s);
    }
    double h = measure(wall_timed([&] { (void)eval_header(m, features); }), total_runs, keep_last);
    p.set(m.header_id, device, h);
  }
  return p;
}

}  // namespace emsserve
