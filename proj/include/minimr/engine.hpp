#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "minimr/combiner.hpp"
#include "minimr/ingest.hpp"
#include "minimr/record.hpp"
#include "minimr/workload.hpp"

namespace minimr {

// Shape of the simulated cluster plus the map-side buffering knobs.
// buffer_capacity is measured in pairs, small by default so spills actually
// happen at desk scale.
struct ClusterConfig {
    int num_nodes = 1;
    int tasks_per_node = 1;
    int num_reducers = 1;
    std::size_t buffer_capacity = 1000;
    double spill_threshold = 0.8;
    int combiner_min_spills = 3;

    void validate() const;  // throws ConfigError
    // A spill fires when the buffer holds this many pairs.
    std::size_t spill_trigger() const;
};

struct ExecutionOptions {
    // One thread per task slot; map tasks of a node then run concurrently.
    bool parallel_map = false;
    bool parallel_reduce = false;
    // When set, spill files are written here in the on-disk format and read
    // back at merge time instead of being kept in memory.
    std::optional<std::filesystem::path> scratch_dir;
    // Test probe: invoked for every pre-emitted pair with its count.
    std::function<void(const IntermediateKey&, std::uint64_t)> pre_emit_probe;
};

// One planned map task: which split runs where. Wave k of a slot runs after
// wave k-1; tasks of distinct slots are independent.
struct TaskPlan {
    int task_id = 0;
    int node_id = 0;
    int slot = 0;  // task slot within the node
    int wave = 0;
    InputSplit split;
};

struct JobPlan {
    std::vector<TaskPlan> tasks;
    std::vector<int> tasks_per_node;  // feeds node-cache task registration
    int num_nodes = 0;
    int slots_per_node = 0;
};

// Splits round-robin across nodes, then across each node's task slots;
// overflow queues as extra waves on the same slots.
JobPlan plan_job(const ClusterConfig& cluster,
                 const std::vector<InputSplit>& splits);

// A partition-sorted run of pairs flushed from one buffer fill.
struct SpillFile {
    int index = 0;
    std::vector<std::vector<IntermediatePair>> partitions;

    std::uint64_t record_count() const;
};

// Groups buffer contents by reducer and sorts each partition by key.
std::vector<std::vector<IntermediatePair>> partition_pairs(
    std::vector<IntermediatePair> pairs, std::uint32_t num_reducers);

// Folds adjacent equal keys of a key-sorted run via the workload combine fn.
// Counts every input pair into *combine_in and every surviving pair into
// *combine_out when the pointers are given.
std::vector<IntermediatePair> combine_sorted_run(
    std::vector<IntermediatePair> run, const Workload& workload,
    std::uint64_t* combine_in = nullptr, std::uint64_t* combine_out = nullptr);

// K-way merge of key-sorted runs. Throws InternalError on unsorted input.
std::vector<IntermediatePair> merge_sorted_runs(
    const std::vector<std::vector<IntermediatePair>>& runs);

// On-disk spill format: for each partition, a 4-byte big-endian partition
// index, a 4-byte big-endian record count, then that many encoded pairs.
void write_spill_file(const std::filesystem::path& path, const SpillFile& spill);
SpillFile read_spill_file(const std::filesystem::path& path,
                          std::uint32_t num_reducers);

// Per-run metrics. All counts are logical operation counts; no wall clock.
struct JobReport {
    std::string strategy;
    std::string workload;
    int num_nodes = 0;
    int tasks_per_node = 0;
    int num_reducers = 0;
    std::size_t buffer_capacity = 0;
    double spill_threshold = 0.0;
    int combiner_min_spills = 0;

    std::uint64_t map_tasks = 0;
    std::uint64_t input_records = 0;
    std::uint64_t records_read_file = 0;
    std::uint64_t records_read_cache = 0;
    std::uint64_t map_output_records = 0;
    std::uint64_t combine_input_records = 0;
    std::uint64_t combine_output_records = 0;
    std::uint64_t spill_count = 0;
    std::uint64_t spilled_records = 0;
    std::uint64_t shuffle_bytes = 0;
    std::uint64_t reduce_input_records = 0;
    std::uint64_t reduce_input_groups = 0;
    std::uint64_t reduce_output_records = 0;
    std::vector<std::uint64_t> spills_per_task;

    // Pinned CSV schema, one row per run.
    static std::string csv_header();
    std::string csv_row() const;
};

struct JobResult {
    // Final reduce outputs over all reducers, sorted by key text.
    std::vector<std::pair<std::string, std::string>> output;
    JobReport report;
};

// Runs plan -> map -> shuffle -> reduce and reports metrics. Final output is
// independent of the strategy and of task interleaving for any workload with
// an associative-commutative combine.
JobResult run_job(const ClusterConfig& cluster,
                  const std::vector<InputSplit>& splits,
                  const InputSource& source, const Workload& workload,
                  StrategyKind strategy, const CombinerConfig& combiner = {},
                  const ExecutionOptions& options = {});

}  // namespace minimr
