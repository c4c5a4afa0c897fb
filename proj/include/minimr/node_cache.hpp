#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace minimr {

// Associative-commutative fold of two serialized values.
using CombineFn =
    std::function<std::string(std::string_view, std::string_view)>;

// One entry leaving the cache (eviction, pre-emit or final drain). `count`
// is the numeric accumulator for count-valued workloads and the number of
// folded contributions otherwise; `payload` carries the folded value for
// non-count workloads.
struct CacheEmission {
    std::string key;
    std::uint64_t count = 0;
    std::optional<std::string> payload;

    bool operator==(const CacheEmission&) const = default;
};

using EvictionBatch = std::vector<CacheEmission>;

// Node-local counter store shared by every map task of one simulated node.
// Keys live in hash buckets; recency is a logical tick so eviction order is
// reproducible. All operations are thread-safe; the update-and-maybe-pre-emit
// path is a single atomic step, as is the is-last decision of complete_task.
class NodeCache {
  public:
    struct Config {
        int num_buckets = 16;
        std::optional<std::size_t> max_entries;  // nullopt = unbounded
        double evict_fraction = 0.25;
    };

    explicit NodeCache(int node_id);
    NodeCache(int node_id, Config config);

    int node_id() const { return node_id_; }
    std::size_t size() const;

    // Bucket placement: salted fnv1a64 of the key bytes mod num_buckets.
    static std::size_t bucket_of(std::string_view key, int num_buckets);

    struct UpdateOutcome {
        std::uint64_t count = 0;  // value after the update
        // Set when count crossed pre_emit_threshold: the entry, removed
        // from the cache, to be emitted by the calling task.
        std::optional<CacheEmission> pre_emitted;
        // Entries displaced because the insert found the cache full.
        EvictionBatch evicted;
    };

    // count += delta for `key` (inserting at count 0 first). Inserting a new
    // key at max_entries evicts evict_fraction of the cache first; with a
    // threshold, a count ending above it leaves the cache immediately as
    // `pre_emitted`. Throws OverflowError when the count would wrap.
    UpdateOutcome increment(std::string_view key, std::uint64_t delta,
                            std::optional<std::uint64_t> pre_emit_threshold = {});

    // Generic-value twin of increment for workloads whose values are not
    // counts: folds `value` into the entry payload via `combine` and advances
    // the contribution count by 1, which is what the threshold compares.
    UpdateOutcome fold(std::string_view key, std::string_view value,
                       const CombineFn& combine,
                       std::optional<std::uint64_t> pre_emit_threshold = {});

    // Removes ceil(target_fraction * size) least-recently-updated entries
    // (global across buckets, ties by key order) and returns them, oldest
    // first. Empty cache yields an empty batch.
    EvictionBatch evict_lru(double target_fraction);

    // Task registry. Registration happens at plan time, completions at task
    // end; exactly one complete_task call per job observes true.
    int register_task();
    bool complete_task();

    // Every remaining entry, sorted by key; the cache is left empty. Only
    // the last mapper (or job teardown) calls this.
    std::vector<CacheEmission> drain_all();

    // Test/diagnostic lookup.
    std::optional<CacheEmission> get(std::string_view key) const;

  private:
    struct Entry {
        std::uint64_t count = 0;
        std::optional<std::string> payload;
        std::uint64_t last_update = 0;
    };

    using Bucket = std::map<std::string, Entry, std::less<>>;

    UpdateOutcome update_locked(std::string_view key, std::uint64_t delta,
                                const std::string* value,
                                const CombineFn* combine,
                                std::optional<std::uint64_t> threshold);
    EvictionBatch evict_locked(double target_fraction);

    int node_id_;
    Config config_;
    mutable std::mutex mutex_;
    std::vector<Bucket> buckets_;
    std::size_t size_ = 0;
    std::uint64_t tick_ = 0;
    int total_tasks_ = 0;
    int completed_tasks_ = 0;
};

}  // namespace minimr
