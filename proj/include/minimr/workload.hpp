#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "minimr/node_cache.hpp"
#include "minimr/record.hpp"

namespace minimr {

// A MapReduce job definition. Values travel through the engine as opaque
// serialized bytes; `combine` must be an associative and commutative fold
// that agrees with the aggregation performed by `reduce`, which is what
// keeps all combining strategies output-equivalent.
class Workload {
  public:
    using EmitFn = std::function<void(IntermediateKey, std::string)>;

    virtual ~Workload() = default;
    virtual std::string_view name() const = 0;

    // True when values are 8-byte counts, letting the node cache accumulate
    // them natively instead of folding payloads.
    virtual bool values_are_counts() const { return false; }

    virtual void map(const TweetRecord& record, const EmitFn& emit) const = 0;
    virtual std::string reduce(const IntermediateKey& key,
                               const std::vector<std::string>& values) const = 0;
    virtual std::string combine(std::string_view a, std::string_view b) const = 0;

    CombineFn combine_fn() const {
        return [this](std::string_view a, std::string_view b) {
            return combine(a, b);
        };
    }
};

// Daily word count: one (date|word, 1) pair per token occurrence; reduce and
// combine are both the checked sum. Reduce output is the decimal count.
class WordCountWorkload : public Workload {
  public:
    std::string_view name() const override { return "wordcount"; }
    bool values_are_counts() const override { return true; }
    void map(const TweetRecord& record, const EmitFn& emit) const override;
    std::string reduce(const IntermediateKey& key,
                       const std::vector<std::string>& values) const override;
    std::string combine(std::string_view a, std::string_view b) const override;
};

// Order-insensitive aggregate of one user's mention activity. Canonical
// serialization (sorted multisets) makes equality order-independent.
struct UserStatus {
    std::vector<std::string> edges;     // users this user mentioned
    std::vector<std::string> messages;  // texts of tweets mentioning this user

    void normalize();
    void merge(UserStatus other);
    std::string serialize() const;  // canonical JSON
    static UserStatus deserialize(std::string_view text);

    bool operator==(const UserStatus&) const = default;
};

// Mention relationships: for every mention tag `@m` in a tweet by user u,
// emits (u, edge m) and (m, message text). Values are tagged: 'e' edge,
// 'm' message, 's' partial status; combine promotes both sides to statuses
// and merges. Reduce output is the canonical status JSON.
class MentionWorkload : public Workload {
  public:
    static std::string edge_value(std::string_view mentioned_user);
    static std::string message_value(std::string_view text);
    static UserStatus promote(std::string_view value);

    std::string_view name() const override { return "mentions"; }
    void map(const TweetRecord& record, const EmitFn& emit) const override;
    std::string reduce(const IntermediateKey& key,
                       const std::vector<std::string>& values) const override;
    std::string combine(std::string_view a, std::string_view b) const override;
};

// Final-output writers (the CLI's file formats).
//
// Word count: one `part-<date>.tsv` per distinct date under `dir`, columns
// word<TAB>count, rows sorted by word. Returns the files written.
std::vector<std::filesystem::path> write_wordcount_output(
    const std::filesystem::path& dir,
    const std::vector<std::pair<std::string, std::string>>& final_pairs);

// Mentions: `mentions.tsv` (user, edge_count, msg_count) plus
// `mentions-detail.tsv` (user, edges JSON, messages JSON).
std::vector<std::filesystem::path> write_mention_output(
    const std::filesystem::path& dir,
    const std::vector<std::pair<std::string, std::string>>& final_pairs);

}  // namespace minimr
