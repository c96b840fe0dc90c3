#include "emsserve/cache.h"

#include <mutex>

#include "emsserve/error.h"
#include "emsserve/hashing.h"
#include "json.hpp"

namespace emsserve {

std::uint64_t feature_checksum(const FeatureVector& fv) {
  return fnv1a_doubles(fv.values);
}

void CacheStore::put(CacheEntry entry) {
  auto published = std::make_shared<const CacheEntry>(std::move(entry));
  std::unique_lock lock(mu_);
  auto it = entries_.find(published->key);
  if (it != entries_.end() && published->step_version < it->second->step_version) {
    fail(ErrorKind::VersionRegression,
         host_ + ": " + published->key.model_id + "/" +
             std::string(to_string(published->key.modality)) + " at step " +
             std::to_string(it->second->step_version) + ", refusing step " +
             std::to_string(published->step_version));
  }
  entries_[published->key] = std::move(published);
}

std::shared_ptr<const CacheEntry> CacheStore::get_shared(const CacheKey& key) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  return it->second;
}

std::optional<CacheEntry> CacheStore::get(const CacheKey& key) const {
  auto e = get_shared(key);
  if (!e) return std::nullopt;
  return *e;
}

std::size_t CacheStore::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::vector<CacheEntry> CacheStore::snapshot() const {
  std::shared_lock lock(mu_);
  std::vector<CacheEntry> out;
  out.reserve(entries_.size());
  for (const auto& [_, e] : entries_) out.push_back(*e);
  return out;
}

void CacheStore::clear() {
  std::unique_lock lock(mu_);
  entries_.clear();
  last_synced_step_ = 0;
}

std::uint64_t CacheStore::last_synced_step() const {
  std::shared_lock lock(mu_);
  return last_synced_step_;
}

void CacheStore::mark_synced(std::uint64_t step) {
  std::unique_lock lock(mu_);
  if (step > last_synced_step_) last_synced_step_ = step;
}

void cache_put(CacheStore& store, CacheEntry entry) { store.put(std::move(entry)); }

std::optional<CacheEntry> cache_get(const CacheStore& store, const CacheKey& key) {
  return store.get(key);
}

std::uint64_t staleness(const CacheStore& device_store, std::uint64_t global_step) {
  const auto synced = device_store.last_synced_step();
  if (global_step < synced)
    fail(ErrorKind::InvalidArgs, "global step " + std::to_string(global_step) +
                                     " precedes last synced step " + std::to_string(synced));
  return global_step - synced;
}

std::string cache_debug_dump(const CacheStore& store) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : store.snapshot()) {
    entries.push_back({{"model_id", e.key.model_id},
                       {"modality", std::string(to_string(e.key.modality))},
                       {"session_id", e.key.session_id},
                       {"payload_id", e.payload_id},
                       {"step_version", e.step_version},
                       {"feature_checksum", hex64(feature_checksum(e.features))}});
  }
  nlohmann::json j = {{"schema", 1},
                      {"host", store.host()},
                      {"last_synced_step", store.last_synced_step()},
                      {"entries", entries}};
  return j.dump(2) + "\n";
}

}  // namespace emsserve
