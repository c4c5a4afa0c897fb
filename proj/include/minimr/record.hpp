#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "minimr/date.hpp"
#include "minimr/hash.hpp"

namespace minimr {

// One input record. original_tweet_id is set only for retweets.
struct TweetRecord {
    std::uint64_t tweet_id = 0;
    std::string message;
    std::optional<std::uint64_t> original_tweet_id;
    Date date;
    std::uint64_t user_id = 0;

    bool operator==(const TweetRecord&) const = default;
};

// Key of an intermediate pair. Stored in canonical text form:
//   `YYYY-MM-DD|word`  for the daily word-count workload
//   `user:<id-or-name>` for the mention workload
// The canonical form is what gets hashed, sorted and encoded, so two keys
// are equal iff their text is byte-equal.
class IntermediateKey {
  public:
    IntermediateKey() = default;

    static IntermediateKey daily_word(const Date& date, std::string_view word);
    static IntermediateKey user(std::uint64_t id);
    static IntermediateKey user(std::string_view name);

    // Wraps canonical text; parse(k.text()) == k for every key. The key is
    // opaque bytes at this layer — only the accessors below interpret it.
    // Throws ParseError on empty text.
    static IntermediateKey parse(std::string_view text);

    const std::string& text() const { return text_; }

    bool is_daily_word() const;
    bool is_user() const;

    // Component accessors; throw ParseError when the key is of the other kind.
    Date date() const;
    std::string_view word() const;
    std::string_view user_key() const;

    auto operator<=>(const IntermediateKey&) const = default;

  private:
    explicit IntermediateKey(std::string text) : text_(std::move(text)) {}
    std::string text_;
};

// A serialized (key, value) emission, tagged with its reducer index.
struct IntermediatePair {
    IntermediateKey key;
    std::string value;
    std::uint32_t partition = 0;

    bool operator==(const IntermediatePair&) const = default;
};

// Reducer index of a key: fnv1a64(canonical key bytes) mod num_reducers.
// Throws ConfigError when num_reducers == 0.
std::uint32_t partition_of(const IntermediateKey& key,
                           std::uint32_t num_reducers);

// Wire layout of one pair: 4-byte big-endian key length, key bytes,
// 4-byte big-endian value length, value bytes. This layout defines the
// shuffle-bytes metric and the spill-file contents, bit-exact.
std::string encode_pair(const IntermediatePair& p);
std::size_t encoded_size(const IntermediatePair& p);

// Inverse of encode_pair. The partition index is not part of the wire
// format (it is derived from the key), so decoding recomputes it for the
// given reducer count. Throws ParseError on truncated or overlong fields;
// `consumed` reports how many bytes the pair occupied.
IntermediatePair decode_pair(std::string_view bytes,
                             std::uint32_t num_reducers,
                             std::size_t* consumed = nullptr);

// 8-byte big-endian unsigned value payloads (word-count emissions).
std::string encode_u64(std::uint64_t v);
std::uint64_t decode_u64(std::string_view bytes);

// a + b with overflow reported as OverflowError instead of wraparound.
std::uint64_t checked_add(std::uint64_t a, std::uint64_t b);

}  // namespace minimr
