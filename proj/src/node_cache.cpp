#include "minimr/node_cache.hpp"

#include <algorithm>
#include <cmath>

#include "minimr/error.hpp"
#include "minimr/hash.hpp"
#include "minimr/record.hpp"

namespace minimr {

NodeCache::NodeCache(int node_id) : NodeCache(node_id, Config()) {}

NodeCache::NodeCache(int node_id, Config config)
    : node_id_(node_id), config_(config) {
    if (config_.num_buckets <= 0)
        throw ConfigError("cache.num_buckets must be >= 1");
    if (config_.max_entries && *config_.max_entries == 0)
        throw ConfigError("cache.max_entries must be >= 1 when set");
    if (config_.evict_fraction <= 0.0 || config_.evict_fraction > 1.0)
        throw ConfigError("cache.evict_fraction must be in (0,1]");
    buckets_.resize(static_cast<std::size_t>(config_.num_buckets));
}

std::size_t NodeCache::size() const {
    std::lock_guard lock(mutex_);
    return size_;
}

std::size_t NodeCache::bucket_of(std::string_view key, int num_buckets) {
    return static_cast<std::size_t>(fnv1a64(key, kBucketBasis) %
                                    static_cast<std::uint64_t>(num_buckets));
}

NodeCache::UpdateOutcome NodeCache::update_locked(
    std::string_view key, std::uint64_t delta, const std::string* value,
    const CombineFn* combine, std::optional<std::uint64_t> threshold) {
    UpdateOutcome out;
    Bucket& bucket = buckets_[bucket_of(key, config_.num_buckets)];
    auto it = bucket.find(key);
    if (it == bucket.end()) {
        if (config_.max_entries && size_ >= *config_.max_entries)
            out.evicted = evict_locked(config_.evict_fraction);
        it = bucket.emplace(std::string(key), Entry{}).first;
        ++size_;
    }
    Entry& entry = it->second;
    entry.count = checked_add(entry.count, delta);
    if (value) {
        if (entry.payload)
            entry.payload = (*combine)(*entry.payload, *value);
        else
            entry.payload = *value;
    }
    entry.last_update = ++tick_;
    out.count = entry.count;
    if (threshold && entry.count > *threshold) {
        out.pre_emitted = CacheEmission{it->first, entry.count, entry.payload};
        bucket.erase(it);
        --size_;
    }
    return out;
}

NodeCache::UpdateOutcome NodeCache::increment(
    std::string_view key, std::uint64_t delta,
    std::optional<std::uint64_t> pre_emit_threshold) {
    std::lock_guard lock(mutex_);
    return update_locked(key, delta, nullptr, nullptr, pre_emit_threshold);
}

NodeCache::UpdateOutcome NodeCache::fold(
    std::string_view key, std::string_view value, const CombineFn& combine,
    std::optional<std::uint64_t> pre_emit_threshold) {
    std::lock_guard lock(mutex_);
    const std::string v(value);
    return update_locked(key, 1, &v, &combine, pre_emit_threshold);
}

EvictionBatch NodeCache::evict_locked(double target_fraction) {
    EvictionBatch batch;
    if (size_ == 0) return batch;
    const auto victims = static_cast<std::size_t>(
        std::ceil(target_fraction * static_cast<double>(size_)));

    // (last_update, key) ordering gives the LRU victims with deterministic
    // key-order tie-breaks.
    struct Ref {
        std::uint64_t tick;
        Bucket* bucket;
        Bucket::iterator it;
    };
    std::vector<Ref> refs;
    refs.reserve(size_);
    for (auto& bucket : buckets_)
        for (auto it = bucket.begin(); it != bucket.end(); ++it)
            refs.push_back(Ref{it->second.last_update, &bucket, it});
    auto older = [](const Ref& a, const Ref& b) {
        if (a.tick != b.tick) return a.tick < b.tick;
        return a.it->first < b.it->first;
    };
    std::partial_sort(refs.begin(),
                      refs.begin() + std::min(victims, refs.size()), refs.end(),
                      older);
    for (std::size_t i = 0; i < victims && i < refs.size(); ++i) {
        batch.push_back(CacheEmission{refs[i].it->first,
                                      refs[i].it->second.count,
                                      refs[i].it->second.payload});
        refs[i].bucket->erase(refs[i].it);
        --size_;
    }
    return batch;
}

EvictionBatch NodeCache::evict_lru(double target_fraction) {
    if (target_fraction <= 0.0 || target_fraction > 1.0)
        throw ConfigError("evict fraction must be in (0,1]");
    std::lock_guard lock(mutex_);
    return evict_locked(target_fraction);
}

int NodeCache::register_task() {
    std::lock_guard lock(mutex_);
    if (completed_tasks_ > 0)
        throw ProtocolError("task registration after a completion");
    return ++total_tasks_;
}

bool NodeCache::complete_task() {
    std::lock_guard lock(mutex_);
    if (completed_tasks_ >= total_tasks_)
        throw ProtocolError("more completions than registered tasks");
    ++completed_tasks_;
    return completed_tasks_ == total_tasks_;
}

std::vector<CacheEmission> NodeCache::drain_all() {
    std::lock_guard lock(mutex_);
    std::vector<CacheEmission> all;
    all.reserve(size_);
    for (auto& bucket : buckets_) {
        for (auto& [key, entry] : bucket)
            all.push_back(CacheEmission{key, entry.count, entry.payload});
        bucket.clear();
    }
    size_ = 0;
    std::sort(all.begin(), all.end(),
              [](const CacheEmission& a, const CacheEmission& b) {
                  return a.key < b.key;
              });
    return all;
}

std::optional<CacheEmission> NodeCache::get(std::string_view key) const {
    std::lock_guard lock(mutex_);
    const Bucket& bucket = buckets_[bucket_of(key, config_.num_buckets)];
    auto it = bucket.find(key);
    if (it == bucket.end()) return std::nullopt;
    return CacheEmission{it->first, it->second.count, it->second.payload};
}

}  // namespace minimr
