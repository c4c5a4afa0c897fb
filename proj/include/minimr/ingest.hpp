#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "minimr/record.hpp"

namespace minimr {

// Tab-separated fields: tweet_id, message, original_tweet_id (empty when
// absent), date, user_id. line_number is carried into error messages only.
TweetRecord parse_tweet_line(std::string_view line, std::size_t line_number = 0);

// Serialization inverse of parse_tweet_line (one TSV line, no newline).
std::string format_tweet_line(const TweetRecord& rec);

// Maximal runs of non-whitespace, lowercased (ASCII). Tokens containing the
// key separator '|' are dropped. Mention tags stay in: they are ordinary
// words for the word-count job.
std::vector<std::string> tokenize(std::string_view message);

// Mentioned user names: tokens of the form `@name`, `@` stripped, order and
// duplicates preserved. A token-internal '@' is not a mention.
std::vector<std::string> extract_mentions(std::string_view message);

// One unit of map-task input. Either a byte range of a corpus file or one
// input-cache instance.
struct InputSplit {
    enum class Kind { file, cache };

    int split_id = 0;
    Kind kind = Kind::file;

    // file splits
    std::filesystem::path path;
    std::uint64_t byte_begin = 0;
    std::uint64_t byte_end = 0;

    // cache splits
    int node_id = 0;
    int instance_id = 0;

    std::uint64_t estimated_records = 0;
};

// Splits a set of corpus files into `target_split_count` record-balanced
// splits. Boundaries fall on record (newline) boundaries and a split never
// spans files; when the files cannot fill every slot, trailing splits are
// empty. Throws IoError on unreadable files, ConfigError on target 0.
std::vector<InputSplit> split_file_input(
    const std::vector<std::filesystem::path>& files, int target_split_count);

// The simulated in-memory input store: `instances_per_node` instances on
// each of `num_nodes` nodes, each instance holding whole records. Input
// caches are separate objects from the combiner NodeCache.
class InputCacheSet {
  public:
    InputCacheSet(int num_nodes, int instances_per_node,
                  std::optional<std::uint64_t> capacity_per_instance = {});

    int num_nodes() const { return num_nodes_; }
    int instances_per_node() const { return instances_per_node_; }
    int num_instances() const { return static_cast<int>(instances_.size()); }
    int node_of_instance(int instance_id) const;
    const std::vector<TweetRecord>& instance(int instance_id) const;

    // Round-robin placement across instances. Throws IoError when an
    // instance would exceed its capacity (partial caching is unsupported).
    void preload(const std::vector<TweetRecord>& records);

  private:
    int num_nodes_;
    int instances_per_node_;
    std::optional<std::uint64_t> capacity_;
    std::vector<std::vector<TweetRecord>> instances_;
};

// Preloads `records` into a fresh cache set and returns it together with
// one split per cache instance (the instance-per-split rule).
struct CachePreload {
    std::shared_ptr<InputCacheSet> cache;
    std::vector<InputSplit> splits;
};
CachePreload preload_cache(const std::vector<TweetRecord>& records,
                           int num_nodes, int instances_per_node,
                           std::optional<std::uint64_t> capacity_per_instance = {});

// Sequential reader over one split. next() yields each record exactly once,
// then returns nullopt.
class RecordCursor {
  public:
    virtual ~RecordCursor() = default;
    virtual std::optional<TweetRecord> next() = 0;
};

// Opens cursors over splits. FileInputSource reads the split's byte range;
// CacheInputSource serves records straight from the preloaded instances.
class InputSource {
  public:
    virtual ~InputSource() = default;
    virtual std::unique_ptr<RecordCursor> open(const InputSplit& split) const = 0;
};

class FileInputSource : public InputSource {
  public:
    std::unique_ptr<RecordCursor> open(const InputSplit& split) const override;
};

class CacheInputSource : public InputSource {
  public:
    explicit CacheInputSource(std::shared_ptr<InputCacheSet> cache)
        : cache_(std::move(cache)) {}
    std::unique_ptr<RecordCursor> open(const InputSplit& split) const override;

  private:
    std::shared_ptr<InputCacheSet> cache_;
};

// Seeded synthetic corpus. Word frequencies are Zipf(zipf_exponent) over a
// fixed vocabulary w1..wV; dates are uniform over the inclusive range; with
// mention_probability a record gains @user<k> tags; with retweet_probability
// a record duplicates an earlier message and records its tweet id.
struct GeneratorConfig {
    std::uint64_t record_count = 0;
    std::uint32_t vocabulary_size = 1000;
    double zipf_exponent = 1.0;
    Date date_begin{2013, 3, 1};
    Date date_end{2013, 3, 31};
    double mention_probability = 0.0;
    double retweet_probability = 0.0;
    std::uint64_t seed = 0;
    // Range of synthetic user ids; mention targets draw from the same range.
    std::uint64_t user_id_range = 10000;
    // Tokens per message are uniform in [min_tokens, max_tokens].
    std::uint32_t min_tokens = 3;
    std::uint32_t max_tokens = 12;
    // A mention-carrying record gains 1..max_mention_tags tags.
    std::uint32_t max_mention_tags = 2;

    void validate() const;
};

// Pure function of (config, seed): two calls yield identical records.
std::vector<TweetRecord> generate_synthetic(const GeneratorConfig& config);

// Corpus file helpers (TSV, one record per line).
void write_corpus(const std::filesystem::path& path,
                  const std::vector<TweetRecord>& records);
std::vector<TweetRecord> read_corpus(const std::filesystem::path& path);

}  // namespace minimr
