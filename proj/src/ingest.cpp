#include "minimr/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "minimr/error.hpp"

namespace minimr {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
}

std::uint64_t parse_u64_field(std::string_view field, std::string_view name,
                              std::size_t line_number) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size())
        throw ParseError("line " + std::to_string(line_number) +
                         ": non-numeric " + std::string(name) + ": \"" +
                         std::string(field) + "\"");
    return v;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

}  // namespace

TweetRecord parse_tweet_line(std::string_view line, std::size_t line_number) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto fields = split_tabs(line);
    if (fields.size() != 5)
        throw ParseError("line " + std::to_string(line_number) + ": expected 5 "
                         "tab-separated fields, got " +
                         std::to_string(fields.size()));
    TweetRecord rec;
    rec.tweet_id = parse_u64_field(fields[0], "tweet id", line_number);
    rec.message = std::string(fields[1]);
    if (!fields[2].empty())
        rec.original_tweet_id =
            parse_u64_field(fields[2], "original tweet id", line_number);
    try {
        rec.date = Date::parse(fields[3]);
    } catch (const ParseError& e) {
        throw ParseError("line " + std::to_string(line_number) + ": " + e.what());
    }
    rec.user_id = parse_u64_field(fields[4], "user id", line_number);
    return rec;
}

std::string format_tweet_line(const TweetRecord& rec) {
    if (rec.message.find('\t') != std::string::npos ||
        rec.message.find('\n') != std::string::npos)
        throw EncodeError("message may not contain tab or newline");
    std::string line = std::to_string(rec.tweet_id);
    line += '\t';
    line += rec.message;
    line += '\t';
    if (rec.original_tweet_id) line += std::to_string(*rec.original_tweet_id);
    line += '\t';
    line += rec.date.to_string();
    line += '\t';
    line += std::to_string(rec.user_id);
    return line;
}

std::vector<std::string> tokenize(std::string_view message) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < message.size()) {
        while (i < message.size() && is_space(message[i])) ++i;
        std::size_t start = i;
        while (i < message.size() && !is_space(message[i])) ++i;
        if (i == start) break;
        std::string_view token = message.substr(start, i - start);
        if (token.find('|') != std::string_view::npos) continue;
        std::string word(token);
        for (char& c : word)
            c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        words.push_back(std::move(word));
    }
    return words;
}

std::vector<std::string> extract_mentions(std::string_view message) {
    std::vector<std::string> names;
    std::size_t i = 0;
    while (i < message.size()) {
        while (i < message.size() && is_space(message[i])) ++i;
        std::size_t start = i;
        while (i < message.size() && !is_space(message[i])) ++i;
        if (i == start) break;
        std::string_view token = message.substr(start, i - start);
        if (token.size() > 1 && token[0] == '@')
            names.emplace_back(token.substr(1));
    }
    return names;
}

namespace {

struct FileLayout {
    std::filesystem::path path;
    std::vector<std::uint64_t> record_offsets;  // start of each record
    std::uint64_t size = 0;
};

FileLayout scan_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open input file: " + path.string());
    FileLayout layout;
    layout.path = path;
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    layout.size = content.size();
    std::uint64_t pos = 0;
    while (pos < content.size()) {
        layout.record_offsets.push_back(pos);
        std::size_t nl = content.find('\n', pos);
        pos = (nl == std::string::npos) ? content.size() : nl + 1;
    }
    return layout;
}

}  // namespace

std::vector<InputSplit> split_file_input(
    const std::vector<std::filesystem::path>& files, int target_split_count) {
    if (target_split_count <= 0)
        throw ConfigError("target_split_count must be >= 1");
    if (files.empty()) throw ConfigError("no input files");

    std::vector<FileLayout> layouts;
    std::uint64_t total_records = 0;
    for (const auto& f : files) {
        layouts.push_back(scan_file(f));
        total_records += layouts.back().record_offsets.size();
    }

    // Slot allocation: one slot per non-empty file at minimum, remaining
    // slots by largest remainder of the record share. A split never spans
    // files, so with more non-empty files than requested splits the file
    // count wins.
    std::vector<std::size_t> nonempty;
    for (std::size_t i = 0; i < layouts.size(); ++i)
        if (!layouts[i].record_offsets.empty()) nonempty.push_back(i);

    std::vector<InputSplit> splits;
    int next_id = 0;
    if (!nonempty.empty()) {
        const int slots =
            std::max<int>(target_split_count, static_cast<int>(nonempty.size()));
        std::vector<int> per_file(nonempty.size(), 1);
        int remaining = slots - static_cast<int>(nonempty.size());
        if (remaining > 0) {
            std::vector<double> share(nonempty.size());
            for (std::size_t i = 0; i < nonempty.size(); ++i)
                share[i] = static_cast<double>(
                               layouts[nonempty[i]].record_offsets.size()) /
                           static_cast<double>(total_records) * remaining;
            std::vector<std::size_t> order(nonempty.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            for (std::size_t i = 0; i < nonempty.size(); ++i) {
                per_file[i] += static_cast<int>(share[i]);
                remaining -= static_cast<int>(share[i]);
            }
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) {
                                 double fa = share[a] - static_cast<int>(share[a]);
                                 double fb = share[b] - static_cast<int>(share[b]);
                                 return fa > fb;
                             });
            for (std::size_t i = 0; remaining > 0; i = (i + 1) % order.size()) {
                ++per_file[order[i]];
                --remaining;
            }
        }
        for (std::size_t i = 0; i < nonempty.size(); ++i) {
            const FileLayout& layout = layouts[nonempty[i]];
            const std::size_t m = layout.record_offsets.size();
            const int k = per_file[i];
            for (int s = 0; s < k; ++s) {
                const std::size_t lo = m * s / k;
                const std::size_t hi = m * (s + 1) / k;
                InputSplit split;
                split.split_id = next_id++;
                split.kind = InputSplit::Kind::file;
                split.path = layout.path;
                split.byte_begin = layout.record_offsets[lo];
                split.byte_end =
                    hi < m ? layout.record_offsets[hi] : layout.size;
                if (lo == hi) split.byte_end = split.byte_begin;
                split.estimated_records = hi - lo;
                splits.push_back(std::move(split));
            }
        }
    }
    // Pad with empty splits so the requested split count is honored even for
    // degenerate inputs (fewer records than splits, empty files).
    while (static_cast<int>(splits.size()) < target_split_count) {
        InputSplit split;
        split.split_id = next_id++;
        split.kind = InputSplit::Kind::file;
        split.path = files.front();
        split.byte_begin = split.byte_end = 0;
        split.estimated_records = 0;
        splits.push_back(std::move(split));
    }
    return splits;
}

InputCacheSet::InputCacheSet(int num_nodes, int instances_per_node,
                             std::optional<std::uint64_t> capacity_per_instance)
    : num_nodes_(num_nodes),
      instances_per_node_(instances_per_node),
      capacity_(capacity_per_instance) {
    if (num_nodes <= 0 || instances_per_node <= 0)
        throw ConfigError("cache topology counts must be >= 1");
    instances_.resize(static_cast<std::size_t>(num_nodes) * instances_per_node);
}

int InputCacheSet::node_of_instance(int instance_id) const {
    return instance_id / instances_per_node_;
}

const std::vector<TweetRecord>& InputCacheSet::instance(int instance_id) const {
    return instances_.at(static_cast<std::size_t>(instance_id));
}

void InputCacheSet::preload(const std::vector<TweetRecord>& records) {
    if (capacity_) {
        const std::uint64_t per_instance =
            (records.size() + instances_.size() - 1) / instances_.size();
        if (per_instance > *capacity_)
            throw IoError("cache preload exceeds instance capacity (" +
                          std::to_string(per_instance) + " > " +
                          std::to_string(*capacity_) + " records)");
    }
    for (std::size_t i = 0; i < records.size(); ++i)
        instances_[i % instances_.size()].push_back(records[i]);
}

CachePreload preload_cache(const std::vector<TweetRecord>& records,
                           int num_nodes, int instances_per_node,
                           std::optional<std::uint64_t> capacity_per_instance) {
    CachePreload out;
    out.cache = std::make_shared<InputCacheSet>(num_nodes, instances_per_node,
                                                capacity_per_instance);
    out.cache->preload(records);
    for (int i = 0; i < out.cache->num_instances(); ++i) {
        InputSplit split;
        split.split_id = i;
        split.kind = InputSplit::Kind::cache;
        split.node_id = out.cache->node_of_instance(i);
        split.instance_id = i;
        split.estimated_records = out.cache->instance(i).size();
        out.splits.push_back(std::move(split));
    }
    return out;
}

namespace {

class FileRecordCursor : public RecordCursor {
  public:
    explicit FileRecordCursor(const InputSplit& split) : split_(split) {
        if (split.byte_end > split.byte_begin) {
            std::ifstream in(split.path, std::ios::binary);
            if (!in)
                throw IoError("cannot open split file: " + split.path.string());
            in.seekg(static_cast<std::streamoff>(split.byte_begin));
            buffer_.resize(split.byte_end - split.byte_begin);
            in.read(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
            if (static_cast<std::uint64_t>(in.gcount()) != buffer_.size())
                throw IoError("short read on split file: " +
                              split.path.string());
        }
    }

    std::optional<TweetRecord> next() override {
        if (pos_ >= buffer_.size()) return std::nullopt;
        std::size_t nl = buffer_.find('\n', pos_);
        std::string_view line =
            std::string_view(buffer_).substr(pos_, nl == std::string::npos
                                                       ? std::string::npos
                                                       : nl - pos_);
        pos_ = (nl == std::string::npos) ? buffer_.size() : nl + 1;
        ++record_index_;
        try {
            return parse_tweet_line(line, record_index_);
        } catch (const ParseError& e) {
            throw ParseError("split " + std::to_string(split_.split_id) +
                             ", record " + std::to_string(record_index_) + ": " +
                             e.what());
        }
    }

  private:
    InputSplit split_;
    std::string buffer_;
    std::size_t pos_ = 0;
    std::size_t record_index_ = 0;
};

class CacheRecordCursor : public RecordCursor {
  public:
    CacheRecordCursor(const InputCacheSet& cache, int instance_id)
        : records_(cache.instance(instance_id)) {}

    std::optional<TweetRecord> next() override {
        if (pos_ >= records_.size()) return std::nullopt;
        return records_[pos_++];
    }

  private:
    const std::vector<TweetRecord>& records_;
    std::size_t pos_ = 0;
};

}  // namespace

std::unique_ptr<RecordCursor> FileInputSource::open(
    const InputSplit& split) const {
    if (split.kind != InputSplit::Kind::file)
        throw ConfigError("file source cannot open a cache split");
    return std::make_unique<FileRecordCursor>(split);
}

std::unique_ptr<RecordCursor> CacheInputSource::open(
    const InputSplit& split) const {
    if (split.kind != InputSplit::Kind::cache)
        throw ConfigError("cache source cannot open a file split");
    return std::make_unique<CacheRecordCursor>(*cache_, split.instance_id);
}

void GeneratorConfig::validate() const {
    if (vocabulary_size == 0) throw ConfigError("vocabulary_size must be >= 1");
    if (zipf_exponent <= 0.0) throw ConfigError("zipf_exponent must be > 0");
    if (mention_probability < 0.0 || mention_probability > 1.0)
        throw ConfigError("mention_probability must be in [0,1]");
    if (retweet_probability < 0.0 || retweet_probability > 1.0)
        throw ConfigError("retweet_probability must be in [0,1]");
    if (date_end < date_begin) throw ConfigError("empty date range");
    if (min_tokens == 0 || max_tokens < min_tokens)
        throw ConfigError("token count range must satisfy 1 <= min <= max");
    if (user_id_range == 0) throw ConfigError("user_id_range must be >= 1");
    if (max_mention_tags == 0)
        throw ConfigError("max_mention_tags must be >= 1");
}

namespace {

// Draw helpers pinned to mt19937_64 output so streams are identical across
// standard libraries (std::uniform_*_distribution is not portable).
struct Rng {
    std::mt19937_64 eng;
    explicit Rng(std::uint64_t seed) : eng(seed) {}
    std::uint64_t below(std::uint64_t n) { return eng() % n; }
    double u01() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }
};

class ZipfSampler {
  public:
    ZipfSampler(std::uint32_t vocab, double exponent) : cumulative_(vocab) {
        double total = 0.0;
        for (std::uint32_t j = 0; j < vocab; ++j) {
            total += 1.0 / std::pow(static_cast<double>(j + 1), exponent);
            cumulative_[j] = total;
        }
    }

    // Rank in [0, vocab), rank 0 most frequent.
    std::uint32_t sample(Rng& rng) const {
        const double u = rng.u01() * cumulative_.back();
        auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
        if (it == cumulative_.end()) --it;
        return static_cast<std::uint32_t>(it - cumulative_.begin());
    }

  private:
    std::vector<double> cumulative_;
};

}  // namespace

std::vector<TweetRecord> generate_synthetic(const GeneratorConfig& config) {
    config.validate();
    Rng rng(config.seed);
    ZipfSampler zipf(config.vocabulary_size, config.zipf_exponent);

    const std::int64_t day_begin = config.date_begin.to_epoch_days();
    const std::uint64_t day_span =
        static_cast<std::uint64_t>(config.date_end.to_epoch_days() - day_begin) + 1;

    std::vector<TweetRecord> records;
    records.reserve(config.record_count);
    for (std::uint64_t i = 0; i < config.record_count; ++i) {
        TweetRecord rec;
        rec.tweet_id = i + 1;
        rec.date = Date::from_epoch_days(
            day_begin + static_cast<std::int64_t>(rng.below(day_span)));
        rec.user_id = 1 + rng.below(config.user_id_range);
        const bool retweet =
            !records.empty() && rng.u01() < config.retweet_probability;
        if (retweet) {
            const auto& original = records[rng.below(records.size())];
            rec.message = original.message;
            rec.original_tweet_id = original.tweet_id;
        } else {
            const std::uint32_t tokens =
                config.min_tokens +
                static_cast<std::uint32_t>(
                    rng.below(config.max_tokens - config.min_tokens + 1));
            std::string msg;
            for (std::uint32_t t = 0; t < tokens; ++t) {
                if (t) msg += ' ';
                msg += 'w';
                msg += std::to_string(zipf.sample(rng) + 1);
            }
            if (rng.u01() < config.mention_probability) {
                const std::uint64_t tags = 1 + rng.below(config.max_mention_tags);
                for (std::uint64_t t = 0; t < tags; ++t) {
                    msg += " @user";
                    msg += std::to_string(1 + rng.below(config.user_id_range));
                }
            }
            rec.message = std::move(msg);
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void write_corpus(const std::filesystem::path& path,
                  const std::vector<TweetRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open output file: " + path.string());
    for (const auto& rec : records) {
        out << format_tweet_line(rec) << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<TweetRecord> read_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open input file: " + path.string());
    std::vector<TweetRecord> records;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        records.push_back(parse_tweet_line(line, line_number));
    }
    return records;
}

}  // namespace minimr
