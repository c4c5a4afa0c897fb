#include "minimr/engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <queue>
#include <sstream>
#include <thread>

#include "minimr/error.hpp"

namespace minimr {

void ClusterConfig::validate() const {
    if (num_nodes < 1) throw ConfigError("num_nodes must be >= 1");
    if (tasks_per_node < 1) throw ConfigError("tasks_per_node must be >= 1");
    if (num_reducers < 1) throw ConfigError("num_reducers must be >= 1");
    if (buffer_capacity < 1) throw ConfigError("buffer_capacity must be >= 1");
    if (spill_threshold <= 0.0 || spill_threshold > 1.0)
        throw ConfigError("spill_threshold must be in (0,1]");
    if (combiner_min_spills < 1)
        throw ConfigError("combiner_min_spills must be >= 1");
}

std::size_t ClusterConfig::spill_trigger() const {
    const auto trigger = static_cast<std::size_t>(
        std::ceil(spill_threshold * static_cast<double>(buffer_capacity)));
    return std::clamp<std::size_t>(trigger, 1, buffer_capacity);
}

JobPlan plan_job(const ClusterConfig& cluster,
                 const std::vector<InputSplit>& splits) {
    cluster.validate();
    if (splits.empty()) throw ConfigError("no input splits to plan");
    JobPlan plan;
    plan.num_nodes = cluster.num_nodes;
    plan.slots_per_node = cluster.tasks_per_node;
    plan.tasks_per_node.assign(static_cast<std::size_t>(cluster.num_nodes), 0);
    const int total_slots = cluster.num_nodes * cluster.tasks_per_node;
    for (std::size_t i = 0; i < splits.size(); ++i) {
        TaskPlan task;
        task.task_id = static_cast<int>(i);
        task.node_id = static_cast<int>(i) % cluster.num_nodes;
        task.slot = (static_cast<int>(i) / cluster.num_nodes) %
                    cluster.tasks_per_node;
        task.wave = static_cast<int>(i) / total_slots;
        task.split = splits[i];
        ++plan.tasks_per_node[static_cast<std::size_t>(task.node_id)];
        plan.tasks.push_back(std::move(task));
    }
    return plan;
}

std::uint64_t SpillFile::record_count() const {
    std::uint64_t n = 0;
    for (const auto& p : partitions) n += p.size();
    return n;
}

std::vector<std::vector<IntermediatePair>> partition_pairs(
    std::vector<IntermediatePair> pairs, std::uint32_t num_reducers) {
    std::vector<std::vector<IntermediatePair>> partitions(num_reducers);
    for (auto& p : pairs) {
        if (p.partition >= num_reducers)
            throw InternalError("partition index out of range");
        partitions[p.partition].push_back(std::move(p));
    }
    for (auto& part : partitions)
        std::stable_sort(part.begin(), part.end(),
                         [](const IntermediatePair& a,
                            const IntermediatePair& b) {
                             return a.key.text() < b.key.text();
                         });
    return partitions;
}

std::vector<IntermediatePair> combine_sorted_run(
    std::vector<IntermediatePair> run, const Workload& workload,
    std::uint64_t* combine_in, std::uint64_t* combine_out) {
    std::vector<IntermediatePair> out;
    std::size_t i = 0;
    while (i < run.size()) {
        std::size_t j = i + 1;
        IntermediatePair acc = std::move(run[i]);
        while (j < run.size() && run[j].key == acc.key) {
            acc.value = workload.combine(acc.value, run[j].value);
            ++j;
        }
        if (combine_in) *combine_in += j - i;
        if (combine_out) ++*combine_out;
        out.push_back(std::move(acc));
        i = j;
    }
    return out;
}

std::vector<IntermediatePair> merge_sorted_runs(
    const std::vector<std::vector<IntermediatePair>>& runs) {
    std::vector<IntermediatePair> out;
    std::size_t total = 0;
    for (const auto& run : runs) total += run.size();
    out.reserve(total);

    // (key, run index) min-heap; run index breaks ties so equal keys keep
    // spill order.
    using Head = std::pair<std::string_view, std::size_t>;
    auto later = [](const Head& a, const Head& b) { return a > b; };
    std::priority_queue<Head, std::vector<Head>, decltype(later)> heap(later);
    std::vector<std::size_t> cursor(runs.size(), 0);
    for (std::size_t r = 0; r < runs.size(); ++r)
        if (!runs[r].empty())
            heap.emplace(runs[r][0].key.text(), r);
    while (!heap.empty()) {
        const auto [key, r] = heap.top();
        heap.pop();
        out.push_back(runs[r][cursor[r]]);
        ++cursor[r];
        if (cursor[r] < runs[r].size()) {
            if (runs[r][cursor[r]].key.text() < key)
                throw InternalError("unsorted spill run in merge");
            heap.emplace(runs[r][cursor[r]].key.text(), r);
        }
    }
    return out;
}

namespace {

void put_u32_be(std::ostream& out, std::uint32_t v) {
    char b[4] = {static_cast<char>((v >> 24) & 0xff),
                 static_cast<char>((v >> 16) & 0xff),
                 static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>(v & 0xff)};
    out.write(b, 4);
}

std::uint32_t get_u32_be(std::istream& in) {
    char b[4];
    if (!in.read(b, 4)) throw ParseError("truncated spill file header");
    auto u = [&](int i) {
        return static_cast<std::uint32_t>(static_cast<std::uint8_t>(b[i]));
    };
    return (u(0) << 24) | (u(1) << 16) | (u(2) << 8) | u(3);
}

}  // namespace

void write_spill_file(const std::filesystem::path& path,
                      const SpillFile& spill) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create spill file: " + path.string());
    for (std::size_t p = 0; p < spill.partitions.size(); ++p) {
        put_u32_be(out, static_cast<std::uint32_t>(p));
        put_u32_be(out, static_cast<std::uint32_t>(spill.partitions[p].size()));
        for (const auto& pair : spill.partitions[p]) out << encode_pair(pair);
    }
    if (!out) throw IoError("spill write failed: " + path.string());
}

SpillFile read_spill_file(const std::filesystem::path& path,
                          std::uint32_t num_reducers) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open spill file: " + path.string());
    SpillFile spill;
    spill.partitions.resize(num_reducers);
    for (std::uint32_t p = 0; p < num_reducers; ++p) {
        const std::uint32_t index = get_u32_be(in);
        if (index != p) throw ParseError("spill partition header mismatch");
        const std::uint32_t count = get_u32_be(in);
        spill.partitions[p].reserve(count);
        std::string buf;
        for (std::uint32_t i = 0; i < count; ++i) {
            // Each record is self-delimiting: read the header, then the rest.
            char head[4];
            if (!in.read(head, 4)) throw ParseError("truncated spill record");
            auto u = [&](int k) {
                return static_cast<std::uint32_t>(
                    static_cast<std::uint8_t>(head[k]));
            };
            const std::uint32_t key_len =
                (u(0) << 24) | (u(1) << 16) | (u(2) << 8) | u(3);
            buf.assign(head, 4);
            buf.resize(4 + key_len + 4);
            if (!in.read(buf.data() + 4,
                         static_cast<std::streamsize>(key_len + 4)))
                throw ParseError("truncated spill record");
            auto v = [&](std::size_t k) {
                return static_cast<std::uint32_t>(
                    static_cast<std::uint8_t>(buf[4 + key_len + k]));
            };
            const std::uint32_t val_len =
                (v(0) << 24) | (v(1) << 16) | (v(2) << 8) | v(3);
            const std::size_t before = buf.size();
            buf.resize(before + val_len);
            if (!in.read(buf.data() + before,
                         static_cast<std::streamsize>(val_len)))
                throw ParseError("truncated spill record");
            IntermediatePair pair = decode_pair(buf, num_reducers);
            if (pair.partition != p)
                throw InternalError(
                    "spill record hashed to a different partition");
            spill.partitions[p].push_back(std::move(pair));
        }
    }
    return spill;
}

std::string JobReport::csv_header() {
    return "strategy,nodes,tasks,records,map_output_records,"
           "combine_input_records,combine_output_records,spill_count,"
           "shuffle_bytes,reduce_input_records,reduce_input_groups";
}

std::string JobReport::csv_row() const {
    std::ostringstream row;
    row << strategy << ',' << num_nodes << ',' << map_tasks << ','
        << input_records << ',' << map_output_records << ','
        << combine_input_records << ',' << combine_output_records << ','
        << spill_count << ',' << shuffle_bytes << ',' << reduce_input_records
        << ',' << reduce_input_groups;
    return row.str();
}

namespace {

struct TaskCounters {
    std::uint64_t records_read_file = 0;
    std::uint64_t records_read_cache = 0;
    std::uint64_t map_output = 0;
    std::uint64_t combine_in = 0;
    std::uint64_t combine_out = 0;
    std::uint64_t spill_count = 0;
    std::uint64_t spilled_records = 0;
};

struct MapTaskOutput {
    std::vector<std::vector<IntermediatePair>> partitions;
};

class MapTaskContext final : public TaskContext {
  public:
    MapTaskContext(const ClusterConfig& cluster, const Workload& workload,
                   const CombinerConfig& combiner, NodeCache* cache,
                   const ExecutionOptions& options, CombinerStrategy& strategy,
                   int task_id, int node_id)
        : cluster_(cluster),
          workload_(workload),
          combiner_(combiner),
          cache_(cache),
          options_(options),
          strategy_(strategy),
          task_id_(task_id),
          node_id_(node_id) {
        buffer_.reserve(cluster.spill_trigger());
    }

    void to_buffer(IntermediateKey key, std::string value) override {
        IntermediatePair pair;
        pair.partition = partition_of(
            key, static_cast<std::uint32_t>(cluster_.num_reducers));
        pair.key = std::move(key);
        pair.value = std::move(value);
        ++counters_.map_output;
        buffer_.push_back(std::move(pair));
        if (buffer_.size() >= cluster_.spill_trigger()) spill_now();
    }

    const Workload& workload() const override { return workload_; }
    const CombinerConfig& combiner_config() const override { return combiner_; }
    NodeCache* node_cache() const override { return cache_; }
    void count_combine_input(std::uint64_t n) override {
        counters_.combine_in += n;
    }
    void count_combine_output(std::uint64_t n) override {
        counters_.combine_out += n;
    }
    void observe_pre_emit(const IntermediateKey& key,
                          std::uint64_t count) override {
        if (options_.pre_emit_probe) options_.pre_emit_probe(key, count);
    }

    void record_read(const InputSplit& split) {
        if (split.kind == InputSplit::Kind::cache)
            ++counters_.records_read_cache;
        else
            ++counters_.records_read_file;
    }

    // Remaining buffer spilled, spills merged into the task's final
    // partitioned output, combining at merge time when the gate allows.
    MapTaskOutput finish() {
        strategy_.on_task_end(*this);
        if (!buffer_.empty()) spill_now();

        if (options_.scratch_dir) {
            for (const auto& path : spill_paths_)
                spills_.push_back(read_spill_file(
                    path, static_cast<std::uint32_t>(cluster_.num_reducers)));
        }

        MapTaskOutput out;
        const auto reducers = static_cast<std::size_t>(cluster_.num_reducers);
        out.partitions.resize(reducers);
        const bool combine = strategy_.combine_on_merge(
            counters_.spill_count, cluster_.combiner_min_spills);
        for (std::size_t p = 0; p < reducers; ++p) {
            if (spills_.size() == 1) {
                out.partitions[p] = std::move(spills_[0].partitions[p]);
            } else if (!spills_.empty()) {
                std::vector<std::vector<IntermediatePair>> runs;
                runs.reserve(spills_.size());
                for (auto& spill : spills_)
                    runs.push_back(std::move(spill.partitions[p]));
                out.partitions[p] = merge_sorted_runs(runs);
            }
            if (combine)
                out.partitions[p] = combine_sorted_run(
                    std::move(out.partitions[p]), workload_,
                    &counters_.combine_in, &counters_.combine_out);
        }
        spills_.clear();
        return out;
    }

    const TaskCounters& counters() const { return counters_; }
    int task_id() const { return task_id_; }
    int node_id() const { return node_id_; }

  private:
    void spill_now() {
        auto partitions = partition_pairs(
            std::move(buffer_), static_cast<std::uint32_t>(cluster_.num_reducers));
        buffer_.clear();
        if (strategy_.combine_on_spill())
            for (auto& part : partitions)
                part = combine_sorted_run(std::move(part), workload_,
                                          &counters_.combine_in,
                                          &counters_.combine_out);
        SpillFile spill;
        spill.index = static_cast<int>(counters_.spill_count);
        spill.partitions = std::move(partitions);
        ++counters_.spill_count;
        counters_.spilled_records += spill.record_count();
        if (options_.scratch_dir) {
            const auto path =
                *options_.scratch_dir /
                ("task" + std::to_string(task_id_) + "_spill" +
                 std::to_string(spill.index) + ".spill");
            write_spill_file(path, spill);
            spill_paths_.push_back(path);
        } else {
            spills_.push_back(std::move(spill));
        }
    }

    const ClusterConfig& cluster_;
    const Workload& workload_;
    const CombinerConfig& combiner_;
    NodeCache* cache_;
    const ExecutionOptions& options_;
    CombinerStrategy& strategy_;
    int task_id_;
    int node_id_;
    std::vector<IntermediatePair> buffer_;
    std::vector<SpillFile> spills_;
    std::vector<std::filesystem::path> spill_paths_;
    TaskCounters counters_;
};

}  // namespace

JobResult run_job(const ClusterConfig& cluster,
                  const std::vector<InputSplit>& splits,
                  const InputSource& source, const Workload& workload,
                  StrategyKind strategy, const CombinerConfig& combiner,
                  const ExecutionOptions& options) {
    cluster.validate();
    const JobPlan plan = plan_job(cluster, splits);
    if (options.scratch_dir)
        std::filesystem::create_directories(*options.scratch_dir);

    // Node caches exist only for the in-node strategy. Every task the plan
    // put on a node is registered up front so queued waves cannot trigger a
    // premature last-mapper drain.
    std::vector<std::unique_ptr<NodeCache>> caches;
    if (strategy == StrategyKind::in_node) {
        NodeCache::Config cache_config;
        cache_config.num_buckets = combiner.cache_num_buckets;
        cache_config.max_entries = combiner.cache_max_entries;
        cache_config.evict_fraction = combiner.evict_fraction;
        caches.reserve(static_cast<std::size_t>(cluster.num_nodes));
        for (int n = 0; n < cluster.num_nodes; ++n)
            caches.push_back(std::make_unique<NodeCache>(n, cache_config));
        for (const auto& task : plan.tasks)
            caches[static_cast<std::size_t>(task.node_id)]->register_task();
    }

    std::vector<MapTaskOutput> outputs(plan.tasks.size());
    std::vector<TaskCounters> task_counters(plan.tasks.size());

    auto run_map_task = [&](const TaskPlan& task) {
        auto strat = make_strategy(strategy);
        NodeCache* cache =
            caches.empty()
                ? nullptr
                : caches[static_cast<std::size_t>(task.node_id)].get();
        MapTaskContext ctx(cluster, workload, combiner, cache, options, *strat,
                           task.task_id, task.node_id);
        strat->setup(ctx);
        std::uint64_t position = 0;
        Workload::EmitFn emit = [&](IntermediateKey key, std::string value) {
            strat->on_emit(ctx, std::move(key), std::move(value));
        };
        try {
            auto cursor = source.open(task.split);
            while (auto record = cursor->next()) {
                ctx.record_read(task.split);
                ++position;
                workload.map(*record, emit);
            }
            outputs[static_cast<std::size_t>(task.task_id)] = ctx.finish();
        } catch (const std::exception& e) {
            throw Error("map phase failed: node " +
                        std::to_string(task.node_id) + ", task " +
                        std::to_string(task.task_id) + ", record " +
                        std::to_string(position) + ": " + e.what());
        }
        task_counters[static_cast<std::size_t>(task.task_id)] = ctx.counters();
    };

    if (options.parallel_map) {
        // One thread per task slot; a slot runs its waves in order.
        std::map<std::pair<int, int>, std::vector<const TaskPlan*>> slots;
        for (const auto& task : plan.tasks)
            slots[{task.node_id, task.slot}].push_back(&task);
        std::vector<std::thread> threads;
        std::vector<std::exception_ptr> failures(slots.size());
        std::size_t slot_index = 0;
        for (auto& [slot_key, tasks] : slots) {
            threads.emplace_back(
                [&run_map_task, tasks, &failures, slot_index]() {
                    try {
                        for (const TaskPlan* task : tasks) run_map_task(*task);
                    } catch (...) {
                        failures[slot_index] = std::current_exception();
                    }
                });
            ++slot_index;
        }
        for (auto& t : threads) t.join();
        for (auto& failure : failures)
            if (failure) std::rethrow_exception(failure);
    } else {
        for (const auto& task : plan.tasks) run_map_task(task);
    }

    JobReport report;
    report.strategy = std::string(to_string(strategy));
    report.workload = std::string(workload.name());
    report.num_nodes = cluster.num_nodes;
    report.tasks_per_node = cluster.tasks_per_node;
    report.num_reducers = cluster.num_reducers;
    report.buffer_capacity = cluster.buffer_capacity;
    report.spill_threshold = cluster.spill_threshold;
    report.combiner_min_spills = cluster.combiner_min_spills;
    report.map_tasks = plan.tasks.size();
    for (const auto& counters : task_counters) {
        report.records_read_file += counters.records_read_file;
        report.records_read_cache += counters.records_read_cache;
        report.map_output_records += counters.map_output;
        report.combine_input_records += counters.combine_in;
        report.combine_output_records += counters.combine_out;
        report.spill_count += counters.spill_count;
        report.spilled_records += counters.spilled_records;
        report.spills_per_task.push_back(counters.spill_count);
    }
    report.input_records =
        report.records_read_file + report.records_read_cache;

    // Shuffle: a barrier between phases. Partition p of every task output is
    // delivered, in task order, to reducer p.
    const auto reducers = static_cast<std::size_t>(cluster.num_reducers);
    std::vector<std::vector<IntermediatePair>> reducer_inputs(reducers);
    for (auto& output : outputs) {
        for (std::size_t p = 0; p < output.partitions.size(); ++p) {
            for (auto& pair : output.partitions[p]) {
                if (pair.partition != p)
                    throw InternalError("pair shuffled to wrong reducer");
                report.shuffle_bytes += encoded_size(pair);
                ++report.reduce_input_records;
                reducer_inputs[p].push_back(std::move(pair));
            }
        }
        output.partitions.clear();
    }

    struct ReducerResult {
        std::vector<std::pair<std::string, std::string>> output;
        std::uint64_t groups = 0;
    };
    std::vector<ReducerResult> reducer_results(reducers);
    auto run_reduce_task = [&](std::size_t r) {
        auto& input = reducer_inputs[r];
        std::stable_sort(input.begin(), input.end(),
                         [](const IntermediatePair& a,
                            const IntermediatePair& b) {
                             return a.key.text() < b.key.text();
                         });
        std::size_t i = 0;
        while (i < input.size()) {
            std::size_t j = i;
            std::vector<std::string> values;
            while (j < input.size() && input[j].key == input[i].key)
                values.push_back(std::move(input[j++].value));
            ++reducer_results[r].groups;
            try {
                reducer_results[r].output.emplace_back(
                    input[i].key.text(),
                    workload.reduce(input[i].key, values));
            } catch (const std::exception& e) {
                throw Error("reduce phase failed: reducer " +
                            std::to_string(r) + ", key \"" +
                            input[i].key.text() + "\": " + e.what());
            }
            i = j;
        }
    };

    if (options.parallel_reduce && reducers > 1) {
        std::vector<std::thread> threads;
        std::vector<std::exception_ptr> failures(reducers);
        for (std::size_t r = 0; r < reducers; ++r)
            threads.emplace_back([&, r]() {
                try {
                    run_reduce_task(r);
                } catch (...) {
                    failures[r] = std::current_exception();
                }
            });
        for (auto& t : threads) t.join();
        for (auto& failure : failures)
            if (failure) std::rethrow_exception(failure);
    } else {
        for (std::size_t r = 0; r < reducers; ++r) run_reduce_task(r);
    }

    JobResult result;
    for (auto& reducer : reducer_results) {
        report.reduce_input_groups += reducer.groups;
        report.reduce_output_records += reducer.output.size();
        result.output.insert(result.output.end(),
                             std::make_move_iterator(reducer.output.begin()),
                             std::make_move_iterator(reducer.output.end()));
    }
    std::sort(result.output.begin(), result.output.end());
    result.report = std::move(report);
    return result;
}

}  // namespace minimr
