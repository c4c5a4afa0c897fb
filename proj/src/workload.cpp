#include "minimr/workload.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "minimr/error.hpp"
#include "minimr/ingest.hpp"

namespace minimr {

void WordCountWorkload::map(const TweetRecord& record,
                            const EmitFn& emit) const {
    for (const auto& word : tokenize(record.message))
        emit(IntermediateKey::daily_word(record.date, word), encode_u64(1));
}

std::string WordCountWorkload::reduce(
    const IntermediateKey&, const std::vector<std::string>& values) const {
    std::uint64_t sum = 0;
    for (const auto& v : values) sum = checked_add(sum, decode_u64(v));
    return std::to_string(sum);
}

std::string WordCountWorkload::combine(std::string_view a,
                                       std::string_view b) const {
    return encode_u64(checked_add(decode_u64(a), decode_u64(b)));
}

void UserStatus::normalize() {
    std::sort(edges.begin(), edges.end());
    std::sort(messages.begin(), messages.end());
}

void UserStatus::merge(UserStatus other) {
    edges.insert(edges.end(), std::make_move_iterator(other.edges.begin()),
                 std::make_move_iterator(other.edges.end()));
    messages.insert(messages.end(),
                    std::make_move_iterator(other.messages.begin()),
                    std::make_move_iterator(other.messages.end()));
    normalize();
}

std::string UserStatus::serialize() const {
    UserStatus sorted = *this;
    sorted.normalize();
    nlohmann::json j;
    j["edges"] = sorted.edges;
    j["msgs"] = sorted.messages;
    return j.dump();
}

UserStatus UserStatus::deserialize(std::string_view text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.contains("edges") || !j.contains("msgs"))
        throw ParseError("malformed status payload");
    UserStatus s;
    s.edges = j["edges"].get<std::vector<std::string>>();
    s.messages = j["msgs"].get<std::vector<std::string>>();
    s.normalize();
    return s;
}

std::string MentionWorkload::edge_value(std::string_view mentioned_user) {
    return "e" + std::string(mentioned_user);
}

std::string MentionWorkload::message_value(std::string_view text) {
    return "m" + std::string(text);
}

UserStatus MentionWorkload::promote(std::string_view value) {
    if (value.empty()) throw ParseError("empty mention value");
    UserStatus s;
    switch (value[0]) {
        case 'e':
            s.edges.emplace_back(value.substr(1));
            return s;
        case 'm':
            s.messages.emplace_back(value.substr(1));
            return s;
        case 's':
            return UserStatus::deserialize(value.substr(1));
        default:
            throw ParseError("unknown mention value tag");
    }
}

void MentionWorkload::map(const TweetRecord& record, const EmitFn& emit) const {
    const auto author = IntermediateKey::user(record.user_id);
    for (const auto& mentioned : extract_mentions(record.message)) {
        emit(author, edge_value(mentioned));
        emit(IntermediateKey::user(mentioned), message_value(record.message));
    }
}

std::string MentionWorkload::reduce(
    const IntermediateKey&, const std::vector<std::string>& values) const {
    UserStatus status;
    for (const auto& v : values) status.merge(promote(v));
    return status.serialize();
}

std::string MentionWorkload::combine(std::string_view a,
                                     std::string_view b) const {
    UserStatus status = promote(a);
    status.merge(promote(b));
    return "s" + status.serialize();
}

std::vector<std::filesystem::path> write_wordcount_output(
    const std::filesystem::path& dir,
    const std::vector<std::pair<std::string, std::string>>& final_pairs) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> files;
    std::ofstream out;
    std::string current_date;
    // Keys sort as date|word, so pairs arrive grouped by date and sorted by
    // word within each date.
    for (const auto& [key_text, count] : final_pairs) {
        const auto key = IntermediateKey::parse(key_text);
        const std::string date = key.date().to_string();
        if (date != current_date) {
            if (out.is_open()) out.close();
            files.push_back(dir / ("part-" + date + ".tsv"));
            out.open(files.back(), std::ios::binary);
            if (!out)
                throw IoError("cannot open output file: " +
                              files.back().string());
            current_date = date;
        }
        out << key.word() << '\t' << count << '\n';
    }
    return files;
}

std::vector<std::filesystem::path> write_mention_output(
    const std::filesystem::path& dir,
    const std::vector<std::pair<std::string, std::string>>& final_pairs) {
    std::filesystem::create_directories(dir);
    const auto summary_path = dir / "mentions.tsv";
    const auto detail_path = dir / "mentions-detail.tsv";
    std::ofstream summary(summary_path, std::ios::binary);
    std::ofstream detail(detail_path, std::ios::binary);
    if (!summary || !detail)
        throw IoError("cannot open mention output files under " + dir.string());
    for (const auto& [key_text, status_text] : final_pairs) {
        const auto key = IntermediateKey::parse(key_text);
        const UserStatus status = UserStatus::deserialize(status_text);
        summary << key.user_key() << '\t' << status.edges.size() << '\t'
                << status.messages.size() << '\n';
        nlohmann::json edges = status.edges;
        nlohmann::json msgs = status.messages;
        detail << key.user_key() << '\t' << edges.dump() << '\t' << msgs.dump()
               << '\n';
    }
    return {summary_path, detail_path};
}

}  // namespace minimr
