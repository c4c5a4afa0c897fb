#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "minimr/node_cache.hpp"
#include "minimr/record.hpp"
#include "minimr/workload.hpp"

namespace minimr {

enum class StrategyKind { none, traditional, in_mapper, in_node };

std::string_view to_string(StrategyKind kind);
StrategyKind parse_strategy(std::string_view name);  // throws ConfigError

// Knobs shared by the combining strategies and the node cache.
struct CombinerConfig {
    std::optional<std::uint64_t> pre_emit_threshold;  // nullopt = infinity
    std::optional<std::size_t> imc_capacity;          // nullopt = unbounded
    std::optional<std::size_t> cache_max_entries;     // nullopt = unbounded
    int cache_num_buckets = 16;
    double evict_fraction = 0.25;
};

// Per-task services the engine hands to a strategy. to_buffer is the only
// path into the map output buffer, so map_output_records counts exactly the
// pairs a strategy lets through.
class TaskContext {
  public:
    virtual ~TaskContext() = default;
    virtual void to_buffer(IntermediateKey key, std::string value) = 0;
    virtual const Workload& workload() const = 0;
    virtual const CombinerConfig& combiner_config() const = 0;
    virtual NodeCache* node_cache() const = 0;  // set only for in-node
    virtual void count_combine_input(std::uint64_t n) = 0;
    virtual void count_combine_output(std::uint64_t n) = 0;
    virtual void observe_pre_emit(const IntermediateKey& key,
                                  std::uint64_t count) = 0;
};

// Strategy hook contract. One instance per map task. The spill/merge hooks
// are predicates because the engine owns sorting and merging; a strategy
// only decides whether adjacent equal keys get combined at those points.
class CombinerStrategy {
  public:
    virtual ~CombinerStrategy() = default;
    virtual StrategyKind kind() const = 0;
    virtual void setup(TaskContext&) {}
    virtual void on_emit(TaskContext& ctx, IntermediateKey key,
                         std::string value) = 0;
    virtual bool combine_on_spill() const { return false; }
    virtual bool combine_on_merge(std::size_t spill_count,
                                  int combiner_min_spills) const {
        (void)spill_count;
        (void)combiner_min_spills;
        return false;
    }
    virtual void on_task_end(TaskContext&) {}
};

std::unique_ptr<CombinerStrategy> make_strategy(StrategyKind kind);

}  // namespace minimr
