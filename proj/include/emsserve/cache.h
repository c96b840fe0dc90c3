#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "emsserve/model_family.h"
#include "emsserve/profiling.h"

namespace emsserve {

struct CacheKey {
  std::string model_id;
  Modality modality = Modality::Text;
  std::string session_id;

  auto operator<=>(const CacheKey&) const = default;
  bool operator==(const CacheKey&) const = default;
};

struct CacheEntry {
  CacheKey key;
  FeatureVector features;
  std::string payload_id;  // payload the features were computed from
  std::uint64_t step_version = 0;

  bool operator==(const CacheEntry&) const = default;
};

std::uint64_t feature_checksum(const FeatureVector& fv);

// Per-host feature cache. Latest entry wins per key; entries are immutable
// once published. Many readers, one writer.
class CacheStore {
 public:
  explicit CacheStore(DeviceId host = "glass") : host_(std::move(host)) {}

  CacheStore(const CacheStore&) = delete;
  CacheStore& operator=(const CacheStore&) = delete;

  const DeviceId& host() const { return host_; }

  // Throws VersionRegression if an entry with a newer step_version exists.
  void put(CacheEntry entry);
  std::optional<CacheEntry> get(const CacheKey& key) const;
  // Shared handle to the published entry, no copy.
  std::shared_ptr<const CacheEntry> get_shared(const CacheKey& key) const;

  std::size_t size() const;
  std::vector<CacheEntry> snapshot() const;
  void clear();

  std::uint64_t last_synced_step() const;
  // Records that this host holds every feature produced up to `step`.
  void mark_synced(std::uint64_t step);

 private:
  DeviceId host_;
  mutable std::shared_mutex mu_;
  std::map<CacheKey, std::shared_ptr<const CacheEntry>> entries_;
  std::uint64_t last_synced_step_ = 0;
};

void cache_put(CacheStore& store, CacheEntry entry);
std::optional<CacheEntry> cache_get(const CacheStore& store, const CacheKey& key);

// global_step - last_synced_step. Throws InvalidArgs if global_step lags.
std::uint64_t staleness(const CacheStore& device_store, std::uint64_t global_step);

// {"schema":1,"host":...,"last_synced_step":...,"entries":[{model_id,
// modality, session_id, payload_id, step_version, feature_checksum}]}
std::string cache_debug_dump(const CacheStore& store);

}  // namespace emsserve
