#include "minimr/record.hpp"

#include <limits>

#include "minimr/error.hpp"

namespace minimr {

namespace {

constexpr std::string_view kUserPrefix = "user:";

void put_u32_be(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>((v >> 24) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

std::uint32_t get_u32_be(std::string_view in, std::size_t at) {
    auto b = [&](std::size_t i) {
        return static_cast<std::uint32_t>(static_cast<std::uint8_t>(in[at + i]));
    };
    return (b(0) << 24) | (b(1) << 16) | (b(2) << 8) | b(3);
}

}  // namespace

IntermediateKey IntermediateKey::daily_word(const Date& date,
                                            std::string_view word) {
    return IntermediateKey(date.to_string() + "|" + std::string(word));
}

IntermediateKey IntermediateKey::user(std::uint64_t id) {
    return IntermediateKey(std::string(kUserPrefix) + std::to_string(id));
}

IntermediateKey IntermediateKey::user(std::string_view name) {
    return IntermediateKey(std::string(kUserPrefix) + std::string(name));
}

IntermediateKey IntermediateKey::parse(std::string_view text) {
    if (text.empty()) throw ParseError("empty intermediate key");
    return IntermediateKey{std::string(text)};
}

bool IntermediateKey::is_user() const {
    return text_.starts_with(kUserPrefix) && text_.size() > kUserPrefix.size();
}

bool IntermediateKey::is_daily_word() const {
    if (text_.size() < 12 || text_[10] != '|') return false;
    try {
        Date::parse(std::string_view(text_).substr(0, 10));
    } catch (const ParseError&) {
        return false;
    }
    return true;
}

Date IntermediateKey::date() const {
    if (!is_daily_word())
        throw ParseError("not a date|word key: \"" + text_ + "\"");
    return Date::parse(std::string_view(text_).substr(0, 10));
}

std::string_view IntermediateKey::word() const {
    if (!is_daily_word())
        throw ParseError("not a date|word key: \"" + text_ + "\"");
    return std::string_view(text_).substr(11);
}

std::string_view IntermediateKey::user_key() const {
    if (!is_user()) throw ParseError("not a user key: \"" + text_ + "\"");
    return std::string_view(text_).substr(kUserPrefix.size());
}

std::uint32_t partition_of(const IntermediateKey& key,
                           std::uint32_t num_reducers) {
    if (num_reducers == 0) throw ConfigError("num_reducers must be >= 1");
    return static_cast<std::uint32_t>(fnv1a64(key.text()) % num_reducers);
}

std::string encode_pair(const IntermediatePair& p) {
    constexpr std::size_t kMax = std::numeric_limits<std::uint32_t>::max();
    if (p.key.text().empty()) throw EncodeError("cannot encode an empty key");
    if (p.key.text().size() > kMax || p.value.size() > kMax)
        throw EncodeError("pair field exceeds 2^32-1 bytes");
    std::string out;
    out.reserve(encoded_size(p));
    put_u32_be(out, static_cast<std::uint32_t>(p.key.text().size()));
    out += p.key.text();
    put_u32_be(out, static_cast<std::uint32_t>(p.value.size()));
    out += p.value;
    return out;
}

std::size_t encoded_size(const IntermediatePair& p) {
    return 8 + p.key.text().size() + p.value.size();
}

IntermediatePair decode_pair(std::string_view bytes,
                             std::uint32_t num_reducers,
                             std::size_t* consumed) {
    if (bytes.size() < 4) throw ParseError("malformed pair: truncated header");
    const std::uint32_t key_len = get_u32_be(bytes, 0);
    if (bytes.size() < 4 + static_cast<std::size_t>(key_len) + 4)
        throw ParseError("malformed pair: key length exceeds buffer");
    const std::string_view key_bytes = bytes.substr(4, key_len);
    const std::uint32_t val_len = get_u32_be(bytes, 4 + key_len);
    const std::size_t total = 8 + static_cast<std::size_t>(key_len) + val_len;
    if (bytes.size() < total)
        throw ParseError("malformed pair: value length exceeds buffer");
    IntermediatePair p;
    p.key = IntermediateKey::parse(key_bytes);
    p.value = std::string(bytes.substr(8 + key_len, val_len));
    p.partition = partition_of(p.key, num_reducers);
    if (consumed) *consumed = total;
    return p;
}

std::string encode_u64(std::uint64_t v) {
    std::string out(8, '\0');
    for (int i = 7; i >= 0; --i) {
        out[i] = static_cast<char>(v & 0xff);
        v >>= 8;
    }
    return out;
}

std::uint64_t decode_u64(std::string_view bytes) {
    if (bytes.size() != 8) throw ParseError("count payload must be 8 bytes");
    std::uint64_t v = 0;
    for (char c : bytes) v = (v << 8) | static_cast<std::uint8_t>(c);
    return v;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
    if (a > std::numeric_limits<std::uint64_t>::max() - b)
        throw OverflowError("unsigned 64-bit count overflow");
    return a + b;
}

}  // namespace minimr
