#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "emsserve/model_family.h"

namespace emsserve {

using DeviceId = std::string;

// (module or model id, device) -> seconds. A missing key is a miss, never 0.
class LatencyProfile {
 public:
  using Key = std::pair<std::string, DeviceId>;

  LatencyProfile() = default;

  // Throws SchemaError for negative or non-finite values and empty keys.
  void set(std::string_view module, std::string_view device, double seconds);
  std::optional<double> find(std::string_view module, std::string_view device) const;
  bool contains(std::string_view module, std::string_view device) const {
    return find(module, device).has_value();
  }

  const std::map<Key, double>& entries() const { return entries_; }
  std::vector<DeviceId> devices() const;
  bool empty() const { return entries_.empty(); }

  // Entries of `other` override entries here.
  void merge(const LatencyProfile& other);

  bool operator==(const LatencyProfile&) const = default;

 private:
  std::map<Key, double> entries_;
};

// Throws Error(ProfileMiss) when the key is absent.
double lookup(const LatencyProfile& profile, std::string_view module,
              std::string_view device);

// A runner that performs one inference and reports how long it took. In
// virtual-clock tests it returns scripted durations.
using TimedRunner = std::function<std::chrono::nanoseconds()>;

// Invokes `runner` total_runs times and returns the mean of the last
// keep_last durations, in seconds. Earlier runs absorb cold-start effects.
double measure(const TimedRunner& runner, int total_runs = 15, int keep_last = 10);

// Wraps a plain callable with a monotonic clock.
TimedRunner wall_timed(std::function<void()> fn);

// Profile JSON: {"schema": 1, "<device>": {"<module>": seconds, ...}, ...}.
std::string profile_to_json_text(const LatencyProfile& profile);
LatencyProfile profile_from_json_text(std::string_view text);
void profile_store_save(const LatencyProfile& profile, const std::filesystem::path& path);
LatencyProfile profile_store_load(const std::filesystem::path& path);

// Per-role costs used to expand a coarse device profile over every module
// of a model family: each encoder gets its modality's cost and each header
// gets `header`.
struct RoleCosts {
  double text = 0;
  double vitals = 0;
  double image = 0;
  double header = 0;
};

LatencyProfile expand_role_costs(const ModelFamily& family, std::string_view device,
                                 const RoleCosts& costs);

// Named built-in profiles:
//   "fig7-yolo"      object-detector latency on the four platforms
//   "fig7-synthetic" text=1.0 vitals=0.001 image=0.1 header=0.001 on glass
//   "devices"        glass, ph1, edge-4c and edge-64x expanded over the
//                    standard family
// Throws ConfigError for unknown names.
LatencyProfile preset_profile(std::string_view name);
std::vector<std::string> preset_profile_names();
RoleCosts device_role_costs(std::string_view device);

// Times every module of `family` with the synthetic backend on this host.
LatencyProfile profile_family(const ModelFamily& family, std::string_view device,
                              int total_runs = 15, int keep_last = 10);

}  // namespace emsserve
