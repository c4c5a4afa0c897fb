// Test-only oracles: brute-force references the engine results are checked
// against. These deliberately avoid the buffer/spill/shuffle machinery — a
// single hash-map pass over the records is the ground truth.
#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "minimr/engine.hpp"
#include "minimr/ingest.hpp"
#include "minimr/record.hpp"
#include "minimr/workload.hpp"

namespace oracle {

using minimr::InputSource;
using minimr::InputSplit;
using minimr::TweetRecord;

inline std::vector<TweetRecord> read_split(const InputSource& source,
                                           const InputSplit& split) {
    std::vector<TweetRecord> records;
    auto cursor = source.open(split);
    while (auto rec = cursor->next()) records.push_back(std::move(*rec));
    return records;
}

// Per-key counts of the daily word-count job.
inline std::map<std::string, std::uint64_t> wordcount(
    const std::vector<TweetRecord>& records) {
    std::map<std::string, std::uint64_t> counts;
    for (const auto& rec : records)
        for (const auto& word : minimr::tokenize(rec.message))
            ++counts[minimr::IntermediateKey::daily_word(rec.date, word).text()];
    return counts;
}

inline std::uint64_t total_tokens(const std::vector<TweetRecord>& records) {
    std::uint64_t tokens = 0;
    for (const auto& rec : records) tokens += minimr::tokenize(rec.message).size();
    return tokens;
}

// Per-user statuses of the mention job.
inline std::map<std::string, minimr::UserStatus> mentions(
    const std::vector<TweetRecord>& records) {
    std::map<std::string, minimr::UserStatus> statuses;
    for (const auto& rec : records) {
        for (const auto& name : minimr::extract_mentions(rec.message)) {
            statuses[minimr::IntermediateKey::user(rec.user_id).text()]
                .edges.push_back(name);
            statuses[minimr::IntermediateKey::user(name).text()]
                .messages.push_back(rec.message);
        }
    }
    for (auto& [key, status] : statuses) status.normalize();
    return statuses;
}

// Expected final (key, output) pairs for a workload, computed without the
// engine.
inline std::vector<std::pair<std::string, std::string>> expected_output(
    const minimr::Workload& workload,
    const std::vector<TweetRecord>& records) {
    std::vector<std::pair<std::string, std::string>> out;
    if (workload.name() == "wordcount") {
        for (const auto& [key, count] : wordcount(records))
            out.emplace_back(key, std::to_string(count));
    } else {
        for (const auto& [key, status] : mentions(records))
            out.emplace_back(key, status.serialize());
    }
    return out;
}

// Keys each map task would produce, derived from the plan assignment and a
// direct map-function pass (no engine execution).
inline std::vector<std::set<std::string>> keys_per_task(
    const minimr::JobPlan& plan, const InputSource& source,
    const minimr::Workload& workload) {
    std::vector<std::set<std::string>> per_task(plan.tasks.size());
    for (const auto& task : plan.tasks) {
        auto& keys = per_task[static_cast<std::size_t>(task.task_id)];
        for (const auto& rec : read_split(source, task.split))
            workload.map(rec, [&](minimr::IntermediateKey key, std::string) {
                keys.insert(key.text());
            });
    }
    return per_task;
}

inline std::vector<std::set<std::string>> keys_per_node(
    const minimr::JobPlan& plan, const InputSource& source,
    const minimr::Workload& workload) {
    std::vector<std::set<std::string>> per_node(
        static_cast<std::size_t>(plan.num_nodes));
    const auto per_task = keys_per_task(plan, source, workload);
    for (const auto& task : plan.tasks)
        per_node[static_cast<std::size_t>(task.node_id)].insert(
            per_task[static_cast<std::size_t>(task.task_id)].begin(),
            per_task[static_cast<std::size_t>(task.task_id)].end());
    return per_node;
}

inline std::uint64_t sum_distinct(const std::vector<std::set<std::string>>& sets) {
    std::uint64_t total = 0;
    for (const auto& s : sets) total += s.size();
    return total;
}

// Total pair emissions of the plain map functions (strategy `none` output).
inline std::uint64_t total_emissions(const std::vector<TweetRecord>& records,
                                     const minimr::Workload& workload) {
    std::uint64_t n = 0;
    for (const auto& rec : records)
        workload.map(rec, [&](minimr::IntermediateKey, std::string) { ++n; });
    return n;
}

}  // namespace oracle
