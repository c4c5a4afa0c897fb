// minimr — a desk-scale MapReduce engine with pluggable combining
// strategies. Subcommands: generate (synthetic corpora), run (one job),
// compare (strategy/size/node matrices).

#include <unistd.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "minimr/engine.hpp"
#include "minimr/error.hpp"
#include "minimr/ingest.hpp"
#include "minimr/workload.hpp"

namespace {

using namespace minimr;

struct GenerateArgs {
    std::uint64_t records = 10000;
    std::uint32_t vocab = 1000;
    double zipf = 1.0;
    std::string date_start = "2013-03-01";
    std::string date_end = "2013-03-31";
    double mention_prob = 0.0;
    double retweet_prob = 0.0;
    std::uint64_t seed = 1;
    std::uint64_t user_range = 10000;
    std::string output;
};

GeneratorConfig to_generator_config(const GenerateArgs& args) {
    GeneratorConfig config;
    config.record_count = args.records;
    config.vocabulary_size = args.vocab;
    config.zipf_exponent = args.zipf;
    config.date_begin = Date::parse(args.date_start);
    config.date_end = Date::parse(args.date_end);
    config.mention_probability = args.mention_prob;
    config.retweet_probability = args.retweet_prob;
    config.seed = args.seed;
    config.user_id_range = args.user_range;
    return config;
}

std::uint64_t count_tokens(const std::vector<TweetRecord>& records) {
    std::uint64_t tokens = 0;
    for (const auto& rec : records) tokens += tokenize(rec.message).size();
    return tokens;
}

int cmd_generate(const GenerateArgs& args) {
    if (args.records == 0)
        std::cerr << "warning: --records 0, writing an empty corpus\n";
    const auto records = to_generator_config(args).record_count == 0
                             ? std::vector<TweetRecord>{}
                             : generate_synthetic(to_generator_config(args));
    write_corpus(args.output, records);
    std::cout << "records " << records.size() << "\n"
              << "tokens " << count_tokens(records) << "\n";
    return 0;
}

struct RunArgs {
    std::string input;
    std::string job = "wordcount";
    std::string combiner = "none";
    std::string input_source = "file";
    int nodes = 1;
    int tasks_per_node = 1;
    int reducers = 1;
    int splits = 0;  // 0 = nodes * tasks_per_node
    int instances_per_node = 0;  // 0 = tasks_per_node
    std::size_t buffer_capacity = 1000;
    double spill_threshold = 0.8;
    int min_spills = 3;
    int cache_num_buckets = 16;
    std::uint64_t cache_max_entries = 0;  // 0 = unbounded
    double evict_fraction = 0.25;
    std::uint64_t pre_emit_threshold = 0;  // 0 = infinity
    std::uint64_t imc_capacity = 0;        // 0 = unbounded
    std::string scratch_dir;
    std::string output_dir;
    bool parallel = false;
    bool no_header = false;
};

const Workload& workload_by_name(const std::string& name) {
    static const WordCountWorkload wordcount;
    static const MentionWorkload mentions;
    if (name == "wordcount") return wordcount;
    if (name == "mentions") return mentions;
    throw ConfigError("unknown job: \"" + name + "\"");
}

ClusterConfig to_cluster(const RunArgs& args) {
    ClusterConfig cluster;
    cluster.num_nodes = args.nodes;
    cluster.tasks_per_node = args.tasks_per_node;
    cluster.num_reducers = args.reducers;
    cluster.buffer_capacity = args.buffer_capacity;
    cluster.spill_threshold = args.spill_threshold;
    cluster.combiner_min_spills = args.min_spills;
    return cluster;
}

CombinerConfig to_combiner(const RunArgs& args) {
    CombinerConfig combiner;
    if (args.pre_emit_threshold) combiner.pre_emit_threshold = args.pre_emit_threshold;
    if (args.imc_capacity) combiner.imc_capacity = args.imc_capacity;
    if (args.cache_max_entries) combiner.cache_max_entries = args.cache_max_entries;
    combiner.cache_num_buckets = args.cache_num_buckets;
    combiner.evict_fraction = args.evict_fraction;
    return combiner;
}

JobResult run_once(const RunArgs& args) {
    const ClusterConfig cluster = to_cluster(args);
    const CombinerConfig combiner = to_combiner(args);
    const Workload& workload = workload_by_name(args.job);
    const StrategyKind strategy = parse_strategy(args.combiner);

    ExecutionOptions options;
    options.parallel_map = args.parallel;
    options.parallel_reduce = args.parallel;
    if (!args.scratch_dir.empty()) options.scratch_dir = args.scratch_dir;

    if (args.input_source == "cache") {
        const int instances =
            args.instances_per_node ? args.instances_per_node : args.tasks_per_node;
        auto preload =
            preload_cache(read_corpus(args.input), args.nodes, instances);
        CacheInputSource source(preload.cache);
        return run_job(cluster, preload.splits, source, workload, strategy,
                       combiner, options);
    }
    if (args.input_source != "file")
        throw ConfigError("unknown input source: \"" + args.input_source + "\"");
    const int target =
        args.splits ? args.splits : args.nodes * args.tasks_per_node;
    const auto splits = split_file_input({args.input}, target);
    FileInputSource source;
    return run_job(cluster, splits, source, workload, strategy, combiner,
                   options);
}

int cmd_run(const RunArgs& args) {
    const JobResult result = run_once(args);
    if (!args.no_header) std::cout << JobReport::csv_header() << "\n";
    std::cout << result.report.csv_row() << "\n";
    if (!args.output_dir.empty()) {
        if (args.job == "wordcount")
            write_wordcount_output(args.output_dir, result.output);
        else
            write_mention_output(args.output_dir, result.output);
    }
    return 0;
}

struct CompareArgs {
    std::vector<std::string> strategies = {"none", "traditional", "in-mapper",
                                           "in-node"};
    std::vector<std::uint64_t> sizes = {1000, 10000, 100000};
    std::vector<int> nodes_list = {1, 2, 4};
    int tasks_per_node = 2;
    int reducers = 1;
    std::string job = "wordcount";
    GenerateArgs generator;
    std::size_t buffer_capacity = 1000;
    std::string output;
};

int cmd_compare(const CompareArgs& args) {
    namespace fs = std::filesystem;
    const fs::path workdir =
        fs::temp_directory_path() /
        ("minimr-compare-" + std::to_string(::getpid()));
    fs::create_directories(workdir);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!args.output.empty()) {
        file.open(args.output);
        if (!file) throw IoError("cannot open " + args.output);
        out = &file;
    }
    *out << JobReport::csv_header() << "\n";

    struct Cell {
        std::uint64_t size;
        int nodes;
        std::string strategy;
        JobReport report;
    };
    std::vector<Cell> cells;
    for (std::uint64_t size : args.sizes) {
        GenerateArgs gen = args.generator;
        gen.records = size;
        const auto corpus_path =
            workdir / ("corpus-" + std::to_string(size) + ".tsv");
        write_corpus(corpus_path, generate_synthetic(to_generator_config(gen)));
        for (int nodes : args.nodes_list) {
            for (const auto& strategy : args.strategies) {
                RunArgs run;
                run.input = corpus_path.string();
                run.job = args.job;
                run.combiner = strategy;
                run.nodes = nodes;
                run.tasks_per_node = args.tasks_per_node;
                run.reducers = args.reducers;
                run.buffer_capacity = args.buffer_capacity;
                try {
                    Cell cell{size, nodes, strategy, run_once(run).report};
                    *out << cell.report.csv_row() << "\n";
                    cells.push_back(std::move(cell));
                } catch (const std::exception& e) {
                    fs::remove_all(workdir);
                    throw Error("compare cell failed (size=" +
                                std::to_string(size) + ", nodes=" +
                                std::to_string(nodes) + ", strategy=" +
                                strategy + "): " + e.what());
                }
            }
        }
    }
    fs::remove_all(workdir);

    // Reduction ratios against the none baseline of the same cell.
    for (const auto& cell : cells) {
        if (cell.strategy == "none") continue;
        const auto baseline = std::find_if(
            cells.begin(), cells.end(), [&](const Cell& c) {
                return c.size == cell.size && c.nodes == cell.nodes &&
                       c.strategy == "none";
            });
        if (baseline == cells.end()) continue;
        const auto ratio = [](std::uint64_t a, std::uint64_t b) {
            return b ? static_cast<double>(a) / static_cast<double>(b) : 1.0;
        };
        std::cerr << "size=" << cell.size << " nodes=" << cell.nodes
                  << " strategy=" << cell.strategy << " map_output_ratio="
                  << ratio(cell.report.map_output_records,
                           baseline->report.map_output_records)
                  << " reduce_input_ratio="
                  << ratio(cell.report.reduce_input_records,
                           baseline->report.reduce_input_records)
                  << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"minimr: instrumented desk-scale MapReduce engine"};
    app.require_subcommand(1);
    app.set_config("--config");

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "write a synthetic corpus");
    generate->add_option("--records", gen.records, "record count");
    generate->add_option("--vocab", gen.vocab, "vocabulary size");
    generate->add_option("--zipf", gen.zipf, "Zipf exponent");
    generate->add_option("--date-start", gen.date_start, "first day");
    generate->add_option("--date-end", gen.date_end, "last day");
    generate->add_option("--mention-prob", gen.mention_prob,
                         "probability of mention tags");
    generate->add_option("--retweet-prob", gen.retweet_prob,
                         "probability of retweets");
    generate->add_option("--seed", gen.seed, "generator seed");
    generate->add_option("--user-range", gen.user_range, "user id range");
    generate->add_option("-o,--output", gen.output, "corpus file")->required();

    RunArgs run;
    auto* runcmd = app.add_subcommand("run", "run one job and print its CSV row");
    runcmd->add_option("--input", run.input, "corpus file")->required();
    runcmd->add_option("--job", run.job)
        ->check(CLI::IsMember({"wordcount", "mentions"}));
    runcmd->add_option("--combiner", run.combiner,
                       "none|traditional|in-mapper|in-node");
    runcmd->add_option("--nodes", run.nodes, "simulated nodes");
    runcmd->add_option("--tasks-per-node", run.tasks_per_node);
    runcmd->add_option("--reducers", run.reducers);
    runcmd->add_option("--input-source", run.input_source, "file|cache");
    runcmd->add_option("--splits", run.splits,
                       "target split count (default nodes*tasks)");
    runcmd->add_option("--instances-per-node", run.instances_per_node,
                       "cache instances per node (cache source)");
    runcmd->add_option("--buffer-capacity", run.buffer_capacity,
                       "map output buffer capacity in pairs");
    runcmd->add_option("--spill-threshold", run.spill_threshold);
    runcmd->add_option("--min-spills", run.min_spills,
                       "merge-time combiner gate");
    runcmd->add_option("--cache.num_buckets", run.cache_num_buckets);
    runcmd->add_option("--cache.max_entries", run.cache_max_entries,
                       "node cache capacity (0 = unbounded)");
    runcmd->add_option("--cache.evict_fraction", run.evict_fraction);
    runcmd->add_option("--combiner.pre_emit_threshold", run.pre_emit_threshold,
                       "0 = infinity");
    runcmd->add_option("--combiner.imc_capacity", run.imc_capacity,
                       "0 = unbounded");
    runcmd->add_option("--engine.scratch_dir", run.scratch_dir,
                       "write spill files here instead of keeping them in memory");
    runcmd->add_option("--output-dir", run.output_dir,
                       "write final output files here");
    runcmd->add_flag("--parallel", run.parallel, "run map tasks concurrently");
    runcmd->add_flag("--no-header", run.no_header, "omit the CSV header row");

    CompareArgs cmp;
    auto* compare =
        app.add_subcommand("compare", "run a strategy/size/node matrix");
    compare->add_option("--strategies", cmp.strategies)->delimiter(',');
    compare->add_option("--sizes", cmp.sizes, "record counts")->delimiter(',');
    compare->add_option("--nodes-list", cmp.nodes_list)->delimiter(',');
    compare->add_option("--tasks-per-node", cmp.tasks_per_node);
    compare->add_option("--reducers", cmp.reducers);
    compare->add_option("--job", cmp.job)
        ->check(CLI::IsMember({"wordcount", "mentions"}));
    compare->add_option("--seed", cmp.generator.seed);
    compare->add_option("--vocab", cmp.generator.vocab);
    compare->add_option("--zipf", cmp.generator.zipf);
    compare->add_option("--mention-prob", cmp.generator.mention_prob);
    compare->add_option("--retweet-prob", cmp.generator.retweet_prob);
    compare->add_option("--buffer-capacity", cmp.buffer_capacity);
    compare->add_option("-o,--output", cmp.output, "matrix CSV file");

    try {
        app.parse(argc, argv);
        if (*generate) return cmd_generate(gen);
        if (*runcmd) return cmd_run(run);
        return cmd_compare(cmp);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
