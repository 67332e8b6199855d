#include "cmabnas/cli.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cmabnas/genotype.hpp"
#include "cmabnas/oracles.hpp"
#include "cmabnas/ucb_kernels.hpp"

namespace cmabnas {

namespace {

using json = nlohmann::ordered_json;

std::string fmt(double d, const char* spec = "%.6f")
{
    char buf[40];
    std::snprintf(buf, sizeof buf, spec, d);
    return buf;
}

std::string group_digits(const std::string& digits)
{
    std::string out;
    const std::size_t n = digits.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && (n - i) % 3 == 0) {
            out += ',';
        }
        out += digits[i];
    }
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    os << text;
}

const SeparableOracle* as_separable(const RewardOracle& oracle)
{
    return dynamic_cast<const SeparableOracle*>(&oracle);
}

struct SearchArgs
{
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    bool full_budget = false;
};

void write_outputs(const std::filesystem::path& dir, const RunConfig& config, const SearchResult& result,
                   bool have_best)
{
    std::filesystem::create_directories(dir);
    write_file(dir / "config.ini", format_run_config(config));
    {
        std::ofstream os(dir / "history.jsonl", std::ios::binary | std::ios::trunc);
        write_history(os, result.history, config.space);
    }
    {
        std::ofstream os(dir / "summary.tsv", std::ios::binary | std::ios::trunc);
        write_summary(os, result, config.space);
    }
    if (have_best) {
        std::string text = "# reward " + fmt(result.best_reward, "%.17g") + "\n# hash " +
                           format_hash(genotype_hash(config.space, result.best_pair)) + "\n";
        text += serialize_genotype(config.space, result.best_pair);
        write_file(dir / "best.genotype", text);
    }
}

int cmd_search(const SearchArgs& args, std::ostream& out, std::ostream& err)
{
    RunConfig config;
    try {
        config = load_run_config(args.config);
        if (args.full_budget) {
            const EngineConfig keep = config.engine;
            config.engine = EngineConfig{};
            config.engine.seed = keep.seed;
            config.engine.policy = keep.policy;
            config.engine.sampler = keep.sampler;
            config.engine.parallel_width = keep.parallel_width;
        }
        for (const auto& o : args.overrides) {
            apply_override(config, o);
        }
        if (args.seed) {
            config.engine.seed = *args.seed;
        }
        if (!args.out_dir.empty()) {
            config.output_dir = args.out_dir;
        } else if (const char* env = std::getenv("CMABNAS_OUTPUT_DIR"); env && *env) {
            config.output_dir = env;
        }
        validate_run_config(config);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config_error;
    }

    const EngineConfig full{};
    if (config.oracle.kind != "external" && config.engine.epochs >= full.epochs &&
        config.engine.batch >= full.batch) {
        err << "warning: a full-size budget with a synthetic oracle; full-size runs are meant for an "
               "external evaluator (oracle.kind = external)\n";
    }

    std::unique_ptr<RewardOracle> oracle;
    try {
        oracle = make_oracle(config);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config_error;
    } catch (const std::exception& e) {
        err << "oracle error: " << e.what() << '\n';
        return exit_oracle_failure;
    }

    try {
        const SearchResult result = run_search(config.engine, config.space, *oracle);
        write_outputs(config.output_dir, config, result, true);
        out << "best reward " << fmt(result.best_reward, "%.17g") << '\n';
        out << "best genotype hash " << format_hash(genotype_hash(config.space, result.best_pair)) << '\n';
        out << "outputs in " << config.output_dir.string() << '\n';
        return exit_ok;
    } catch (const SearchFailure& e) {
        err << "oracle failure: " << e.what() << '\n';
        try {
            write_outputs(config.output_dir, config, e.partial(), !e.partial().per_epoch_best.empty());
            err << "partial outputs in " << config.output_dir.string() << '\n';
        } catch (const std::exception& w) {
            err << "could not write partial outputs: " << w.what() << '\n';
        }
        return exit_oracle_failure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_oracle_failure;
    }
}

int cmd_space(const std::string& config_path, std::size_t nodes, const std::string& ops, std::ostream& out,
              std::ostream& err)
{
    SearchSpaceConfig space;
    try {
        if (!config_path.empty()) {
            space = load_run_config(config_path).space;
        }
        if (nodes > 0) {
            space.nodes = nodes;
        }
        if (!ops.empty()) {
            space.operations = parse_operations(ops);
        }
        space.validate();
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config_error;
    }
    out << "nodes " << space.nodes << ", operations " << space.op_count() << ":";
    for (const auto& n : space.operations.names()) {
        out << ' ' << n;
    }
    out << "\nnode\tarms\n";
    for (std::size_t i = 1; i <= space.nodes; ++i) {
        out << i << '\t' << arm_count(space, i) << '\n';
    }
    const BigInt cell = space_size(space);
    const BigInt pair = cell * cell;
    out << "cell total\t" << group_digits(cell.str()) << '\n';
    out << "pair total\t" << group_digits(pair.str()) << '\n';
    out << "kernels\t" << kernels::isa_name(kernels::active_isa()) << '\n';
    return exit_ok;
}

int cmd_bench(const std::string& config_path, const std::vector<std::string>& overrides, std::size_t seeds,
              std::ostream& out, std::ostream& err)
{
    RunConfig config;
    try {
        config = load_run_config(config_path);
        for (const auto& o : overrides) {
            apply_override(config, o);
        }
        validate_run_config(config);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config_error;
    }
    try {
        print_policy_bench(out, run_policy_bench(config, seeds));
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config_error;
    } catch (const std::exception& e) {
        err << "oracle failure: " << e.what() << '\n';
        return exit_oracle_failure;
    }
    return exit_ok;
}

int cmd_replay(const std::string& path, std::optional<double> optimum, std::ostream& out, std::ostream& err)
{
    RewardHistory history;
    try {
        std::ifstream is(path, std::ios::binary);
        if (!is) {
            throw std::runtime_error("cannot read '" + path + "'");
        }
        history = read_history(is);
    } catch (const std::exception& e) {
        err << "history error: " << e.what() << '\n';
        return exit_config_error;
    }

    struct EpochStats
    {
        std::size_t plays[3] = {0, 0, 0};
        double reward_sum[3] = {0, 0, 0};
        double best = -1.0;
    };
    std::map<std::size_t, EpochStats> epochs;
    for (const auto& r : history.records) {
        auto& e = epochs[r.epoch];
        const auto p = static_cast<std::size_t>(r.phase);
        ++e.plays[p];
        e.reward_sum[p] += r.reward;
        if (r.phase == Phase::best) {
            e.best = std::max(e.best, r.reward);
        }
    }
    out << "epoch\tsimulation\tcandidate\tbest\tmean_sim\tmean_cand\tbest_reward\n";
    for (const auto& [epoch, e] : epochs) {
        auto mean = [&](int p) { return e.plays[p] ? fmt(e.reward_sum[p] / double(e.plays[p])) : std::string("-"); };
        out << epoch << '\t' << e.plays[0] << '\t' << e.plays[1] << '\t' << e.plays[2] << '\t' << mean(0) << '\t'
            << mean(1) << '\t' << (e.plays[2] ? fmt(e.best) : std::string("-")) << '\n';
    }
    out << "plays " << history.size() << '\n';
    if (optimum) {
        try {
            const Regrets r = compute_regrets(history, *optimum);
            out << "cumulative regret " << fmt(r.cumulative, "%.17g") << '\n';
            out << "simple regret " << fmt(r.simple, "%.17g") << '\n';
        } catch (const std::invalid_argument& e) {
            err << "history error: " << e.what() << '\n';
            return exit_config_error;
        }
    }
    return exit_ok;
}

int cmd_tabulate(const std::string& config_path, const std::string& table, std::ostream& out, std::ostream& err)
{
    RunConfig config;
    try {
        config = load_run_config(config_path);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config_error;
    }
    try {
        auto oracle = make_oracle(config);
        dump_tabular(config.space, *oracle, table);
    } catch (const std::exception& e) {
        err << "oracle failure: " << e.what() << '\n';
        return exit_oracle_failure;
    }
    out << "wrote " << table << '\n';
    return exit_ok;
}

} // namespace

void write_history(std::ostream& os, const RewardHistory& history, const SearchSpaceConfig& space)
{
    for (const auto& r : history.records) {
        json line;
        line["epoch"] = r.epoch;
        line["t"] = r.play;
        line["phase"] = std::string(phase_name(r.phase));
        line["genotype_hash"] = format_hash(r.genotype_hash);
        line["arms"] = pair_to_indices(space, r.pair);
        line["reward"] = r.reward;
        os << line.dump() << '\n';
    }
}

RewardHistory read_history(std::istream& is, const SearchSpaceConfig* space)
{
    RewardHistory history;
    std::string text;
    std::size_t lineno = 0;
    while (std::getline(is, text)) {
        ++lineno;
        if (text.empty()) {
            continue;
        }
        try {
            const json line = json::parse(text);
            PlayRecord r;
            r.epoch = line.at("epoch").get<std::size_t>();
            r.play = line.at("t").get<std::uint64_t>();
            r.phase = parse_phase(line.at("phase").get<std::string>());
            r.genotype_hash = parse_hash(line.at("genotype_hash").get<std::string>());
            r.reward = line.at("reward").get<double>();
            if (space) {
                r.pair = pair_from_indices(*space, line.at("arms").get<std::vector<std::size_t>>());
            }
            history.records.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw std::runtime_error("history line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return history;
}

void write_summary(std::ostream& os, const SearchResult& result, const SearchSpaceConfig& space)
{
    os << "epoch\talpha\tbest_reward\tgenotype_hash\n";
    for (const auto& e : result.per_epoch_best) {
        os << e.epoch << '\t' << fmt(e.alpha, "%.17g") << '\t' << fmt(e.best_reward, "%.17g") << '\t'
           << format_hash(genotype_hash(space, e.best_pair)) << '\n';
    }
}

double PolicyBenchRow::mean_best_reward() const
{
    if (best_rewards.empty()) {
        return 0.0;
    }
    return std::accumulate(best_rewards.begin(), best_rewards.end(), 0.0) / double(best_rewards.size());
}

std::optional<double> PolicyBenchRow::mean_simple_regret() const
{
    if (simple_regrets.empty()) {
        return std::nullopt;
    }
    return std::accumulate(simple_regrets.begin(), simple_regrets.end(), 0.0) / double(simple_regrets.size());
}

PolicyBench run_policy_bench(const RunConfig& config, std::size_t seeds)
{
    if (seeds == 0) {
        throw ConfigError("--seeds must be at least 1");
    }
    const SelectionPolicy order[] = {SelectionPolicy::local_optimal, SelectionPolicy::local_suboptimal,
                                     SelectionPolicy::local_random};
    PolicyBench bench;
    bench.seeds = seeds;
    for (auto p : order) {
        bench.rows.push_back(PolicyBenchRow{p, {}, {}, 0});
    }
    bool optimum_known = true;
    double optimum_sum = 0.0;
    for (std::size_t s = 0; s < seeds; ++s) {
        for (auto& row : bench.rows) {
            RunConfig c = config;
            c.engine.seed = config.engine.seed + s;
            c.engine.policy = row.policy;
            auto oracle = make_oracle(c, s);
            const SearchResult result = run_search(c.engine, c.space, *oracle);
            row.best_rewards.push_back(result.best_reward);
            if (const auto* sep = as_separable(*oracle)) {
                const double opt = oracle_optimum(*sep).second;
                row.simple_regrets.push_back(opt - sep->expected(result.best_pair));
                if (row.policy == SelectionPolicy::local_optimal) {
                    optimum_sum += opt;
                }
            } else {
                optimum_known = false;
            }
        }
        const double random_best = bench.rows.back().best_rewards.back();
        for (std::size_t i = 0; i + 1 < bench.rows.size(); ++i) {
            if (bench.rows[i].best_rewards.back() > random_best) {
                ++bench.rows[i].wins_vs_random;
            }
        }
    }
    if (optimum_known) {
        bench.optimum = optimum_sum / double(seeds);
    } else {
        for (auto& row : bench.rows) {
            row.simple_regrets.clear();
        }
    }
    return bench;
}

void print_policy_bench(std::ostream& os, const PolicyBench& bench)
{
    os << "seeds " << bench.seeds;
    if (bench.optimum) {
        os << ", mean optimum " << fmt(*bench.optimum);
    }
    os << "\npolicy\tmean_best_reward\tmean_simple_regret\twins_vs_random\n";
    for (const auto& row : bench.rows) {
        const auto regret = row.mean_simple_regret();
        os << policy_name(row.policy) << '\t' << fmt(row.mean_best_reward()) << '\t'
           << (regret ? fmt(*regret) : std::string("-")) << '\t';
        if (row.policy == SelectionPolicy::local_random) {
            os << "-";
        } else {
            os << row.wins_vs_random << '/' << bench.seeds;
        }
        os << '\n';
    }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Bandit-guided nested Monte-Carlo cell search", "cmabnas"};
    app.require_subcommand(1);

    SearchArgs search;
    auto* search_cmd = app.add_subcommand("search", "run a search and write its outputs");
    search_cmd->add_option("config", search.config, "run configuration file")->required();
    search_cmd->add_option("--set", search.overrides, "override section.key=value (repeatable)");
    search_cmd->add_option("--seed", search.seed, "engine seed");
    search_cmd->add_option("--out", search.out_dir, "output directory");
    search_cmd->add_flag("--full-budget", search.full_budget, "reset the engine budget to the full-size defaults");

    std::string space_config, space_ops;
    std::size_t space_nodes = 0;
    auto* space_cmd = app.add_subcommand("space", "print per-node arm counts and space size");
    space_cmd->add_option("config", space_config, "run configuration file");
    space_cmd->add_option("--nodes", space_nodes, "intermediate nodes per cell");
    space_cmd->add_option("--operations", space_ops, "preset (standard, s2, s4) or comma list");

    std::string bench_config;
    std::vector<std::string> bench_overrides;
    std::size_t bench_seeds = 20;
    auto* bench_cmd = app.add_subcommand("bench-policies", "compare selection policies over seeds");
    bench_cmd->add_option("config", bench_config, "run configuration file")->required();
    bench_cmd->add_option("--seeds", bench_seeds, "number of seeds")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--set", bench_overrides, "override section.key=value (repeatable)");

    std::string replay_path;
    std::optional<double> replay_optimum;
    auto* replay_cmd = app.add_subcommand("replay", "summarize a history log");
    replay_cmd->add_option("history", replay_path, "history.jsonl")->required();
    replay_cmd->add_option("--optimum", replay_optimum, "optimal reward, enables regret output");

    std::string tab_config, tab_path;
    auto* tab_cmd = app.add_subcommand("tabulate", "write the configured oracle's rewards as a table");
    tab_cmd->add_option("config", tab_config, "run configuration file")->required();
    tab_cmd->add_option("table", tab_path, "output table")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config_error;
    }

    if (*search_cmd) {
        return cmd_search(search, out, err);
    }
    if (*space_cmd) {
        return cmd_space(space_config, space_nodes, space_ops, out, err);
    }
    if (*bench_cmd) {
        return cmd_bench(bench_config, bench_overrides, bench_seeds, out, err);
    }
    if (*replay_cmd) {
        return cmd_replay(replay_path, replay_optimum, out, err);
    }
    return cmd_tabulate(tab_config, tab_path, out, err);
}

} // namespace cmabnas
