#include "minimr/combiner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "minimr/error.hpp"

namespace minimr {

std::string_view to_string(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::none: return "none";
        case StrategyKind::traditional: return "traditional";
        case StrategyKind::in_mapper: return "in-mapper";
        case StrategyKind::in_node: return "in-node";
    }
    return "?";
}

StrategyKind parse_strategy(std::string_view name) {
    if (name == "none") return StrategyKind::none;
    if (name == "traditional") return StrategyKind::traditional;
    if (name == "in-mapper" || name == "imc") return StrategyKind::in_mapper;
    if (name == "in-node" || name == "inc") return StrategyKind::in_node;
    throw ConfigError("unknown combiner strategy: \"" + std::string(name) +
                      "\"");
}

namespace {

std::string emission_value(const CacheEmission& e) {
    return e.payload ? *e.payload : encode_u64(e.count);
}

class NoneStrategy : public CombinerStrategy {
  public:
    StrategyKind kind() const override { return StrategyKind::none; }
    void on_emit(TaskContext& ctx, IntermediateKey key,
                 std::string value) override {
        ctx.to_buffer(std::move(key), std::move(value));
    }
};

class TraditionalStrategy : public CombinerStrategy {
  public:
    StrategyKind kind() const override { return StrategyKind::traditional; }
    void on_emit(TaskContext& ctx, IntermediateKey key,
                 std::string value) override {
        // Emission count is unchanged; combining happens on spill and,
        // conditionally, while merging spill files.
        ctx.to_buffer(std::move(key), std::move(value));
    }
    bool combine_on_spill() const override { return true; }
    bool combine_on_merge(std::size_t spill_count,
                          int combiner_min_spills) const override {
        return spill_count >= static_cast<std::size_t>(combiner_min_spills);
    }
};

// Task-local associative array with logical-tick recency. Same eviction
// rule as the node cache: least-recently-updated first, ties by key order.
class InMapperStrategy : public CombinerStrategy {
  public:
    StrategyKind kind() const override { return StrategyKind::in_mapper; }

    void on_emit(TaskContext& ctx, IntermediateKey key,
                 std::string value) override {
        ctx.count_combine_input(1);
        auto it = array_.find(key.text());
        if (it == array_.end()) {
            const auto cap = ctx.combiner_config().imc_capacity;
            if (cap && array_.size() >= *cap) evict(ctx);
            it = array_.emplace(key.text(), Slot{}).first;
        }
        Slot& slot = it->second;
        slot.value = slot.value.empty()
                         ? std::move(value)
                         : ctx.workload().combine(slot.value, value);
        slot.last_update = ++tick_;
    }

    void on_task_end(TaskContext& ctx) override {
        for (auto& [key_text, slot] : array_) {
            ctx.count_combine_output(1);
            ctx.to_buffer(IntermediateKey::parse(key_text),
                          std::move(slot.value));
        }
        array_.clear();
    }

  private:
    struct Slot {
        std::string value;
        std::uint64_t last_update = 0;
    };

    void evict(TaskContext& ctx) {
        const auto victims = static_cast<std::size_t>(std::ceil(
            ctx.combiner_config().evict_fraction *
            static_cast<double>(array_.size())));
        std::vector<std::map<std::string, Slot>::iterator> refs;
        refs.reserve(array_.size());
        for (auto it = array_.begin(); it != array_.end(); ++it)
            refs.push_back(it);
        std::partial_sort(refs.begin(),
                          refs.begin() + std::min(victims, refs.size()),
                          refs.end(), [](const auto& a, const auto& b) {
                              if (a->second.last_update !=
                                  b->second.last_update)
                                  return a->second.last_update <
                                         b->second.last_update;
                              return a->first < b->first;
                          });
        for (std::size_t i = 0; i < victims && i < refs.size(); ++i) {
            ctx.count_combine_output(1);
            ctx.to_buffer(IntermediateKey::parse(refs[i]->first),
                          std::move(refs[i]->second.value));
            array_.erase(refs[i]);
        }
    }

    // Ordered map so the task-end flush is emitted in key order.
    std::map<std::string, Slot> array_;
    std::uint64_t tick_ = 0;
};

class InNodeStrategy : public CombinerStrategy {
  public:
    StrategyKind kind() const override { return StrategyKind::in_node; }

    void on_emit(TaskContext& ctx, IntermediateKey key,
                 std::string value) override {
        NodeCache* cache = ctx.node_cache();
        if (!cache) throw InternalError("in-node strategy without a node cache");
        ctx.count_combine_input(1);
        const auto threshold = ctx.combiner_config().pre_emit_threshold;
        NodeCache::UpdateOutcome outcome;
        if (ctx.workload().values_are_counts()) {
            outcome = cache->increment(key.text(), decode_u64(value), threshold);
        } else {
            outcome = cache->fold(key.text(), value, ctx.workload().combine_fn(),
                                  threshold);
        }
        // Capacity evictions and pre-emits leave through the task whose
        // update triggered them.
        for (auto& evicted : outcome.evicted) {
            ctx.count_combine_output(1);
            ctx.to_buffer(IntermediateKey::parse(evicted.key),
                          emission_value(evicted));
        }
        if (outcome.pre_emitted) {
            ctx.observe_pre_emit(key, outcome.pre_emitted->count);
            ctx.count_combine_output(1);
            ctx.to_buffer(IntermediateKey::parse(outcome.pre_emitted->key),
                          emission_value(*outcome.pre_emitted));
        }
    }

    void on_task_end(TaskContext& ctx) override {
        NodeCache* cache = ctx.node_cache();
        if (!cache) throw InternalError("in-node strategy without a node cache");
        if (!cache->complete_task()) return;
        // Last mapper on the node: everything still cached goes out here.
        for (auto& entry : cache->drain_all()) {
            ctx.count_combine_output(1);
            ctx.to_buffer(IntermediateKey::parse(entry.key),
                          emission_value(entry));
        }
    }
};

}  // namespace

std::unique_ptr<CombinerStrategy> make_strategy(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::none: return std::make_unique<NoneStrategy>();
        case StrategyKind::traditional:
            return std::make_unique<TraditionalStrategy>();
        case StrategyKind::in_mapper:
            return std::make_unique<InMapperStrategy>();
        case StrategyKind::in_node: return std::make_unique<InNodeStrategy>();
    }
    throw ConfigError("invalid strategy kind");
}

}  // namespace minimr
