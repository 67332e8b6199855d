#pragma once

// Command-line frontend and the file formats it writes.
//
//   cmabnas search <config> [--set section.key=value]... [--seed n] [--out dir] [--full-budget]
//   cmabnas space [config]
//   cmabnas bench-policies <config> [--seeds n] [--set ...]
//   cmabnas replay <history.jsonl> [--optimum r]
//   cmabnas tabulate <config> <table.tsv>
//
// Exit status: 0 ok, 2 usage or configuration error, 3 oracle failure.
// CMABNAS_OUTPUT_DIR overrides [output] directory; --out overrides both.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cmabnas/nmcs_engine.hpp"
#include "cmabnas/run_config.hpp"
#include "cmabnas/search_space.hpp"

namespace cmabnas {

inline constexpr int exit_ok = 0;
inline constexpr int exit_config_error = 2;
inline constexpr int exit_oracle_failure = 3;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// history.jsonl: one object per play,
//   {"epoch":0,"t":0,"phase":"simulation","genotype_hash":"<16 hex>","arms":[...],"reward":0.5}
// "arms" holds the per-level arm indices (normal levels first).
void write_history(std::ostream& os, const RewardHistory& history, const SearchSpaceConfig& space);
/// Pairs are rebuilt from "arms" when `space` is given, left empty otherwise.
/// Throws std::runtime_error naming the line on malformed input.
RewardHistory read_history(std::istream& is, const SearchSpaceConfig* space = nullptr);

// summary.tsv: header then `epoch alpha best_reward genotype_hash`.
void write_summary(std::ostream& os, const SearchResult& result, const SearchSpaceConfig& space);

struct PolicyBenchRow
{
    SelectionPolicy policy = SelectionPolicy::local_optimal;
    std::vector<double> best_rewards;  // one per seed
    std::vector<double> simple_regrets;  // empty when the optimum is unknown
    std::size_t wins_vs_random = 0;  // seeds where best reward > LocalRandom's

    double mean_best_reward() const;
    std::optional<double> mean_simple_regret() const;
};

struct PolicyBench
{
    std::size_t seeds = 0;
    std::optional<double> optimum;  // known for noiseless-table oracles only
    std::vector<PolicyBenchRow> rows;  // local_optimal, local_suboptimal, local_random
};

/// Seed s uses engine seed + s and oracle seeds + s.
PolicyBench run_policy_bench(const RunConfig& config, std::size_t seeds);
void print_policy_bench(std::ostream& os, const PolicyBench& bench);

} // namespace cmabnas
