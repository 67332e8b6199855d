#pragma once

// Nested Monte-Carlo search over the bandit tree.
//
// One epoch:
//   1. fresh tree;
//   2. B times: L_sim simulations (sample -> evaluate -> backprop), then one
//      more UCB sample kept as a candidate;
//   3. oracle.train(candidates); evaluate each candidate and backprop;
//   4. SearchBest: for each of the 2N levels run L_best simulations below the
//      committed prefix, then commit that level's arm with the selection policy;
//   5. evaluate the committed pair (plus up to k-1 alternatives) and keep the max.
// The exploration weight starts at alpha0 and is multiplied by alpha_decay
// after every epoch.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cmabnas/bandit_tree.hpp"
#include "cmabnas/oracles.hpp"
#include "cmabnas/search_space.hpp"

namespace cmabnas {

enum class Phase { simulation, candidate, best };

std::string_view phase_name(Phase phase) noexcept;
Phase parse_phase(std::string_view name);
std::string_view policy_name(SelectionPolicy policy) noexcept;
SelectionPolicy parse_policy(std::string_view name);
std::string_view sampler_name(Sampler sampler) noexcept;
Sampler parse_sampler(std::string_view name);

struct EngineConfig
{
    std::size_t epochs = 50;
    std::size_t batch = 2500;
    std::size_t sim_iterations = 8;
    std::size_t best_iterations = 800;
    double alpha0 = 1.0;
    double alpha_decay = 0.95;
    std::size_t top_k = 1;
    std::size_t warmup_epochs = 5;
    std::uint64_t seed = 0;
    SelectionPolicy policy = SelectionPolicy::local_optimal;
    Sampler sampler = Sampler::ucb;
    /// Concurrent candidate evaluations; 1 keeps the engine single-threaded.
    std::size_t parallel_width = 1;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

struct PlayRecord
{
    std::size_t epoch = 0;
    /// Play index t, counted from 0 within the epoch.
    std::uint64_t play = 0;
    ArchitecturePair pair;
    std::uint64_t genotype_hash = 0;
    double reward = 0.0;
    Phase phase = Phase::simulation;

    friend bool operator==(const PlayRecord&, const PlayRecord&) = default;
};

struct RewardHistory
{
    std::vector<PlayRecord> records;

    std::size_t size() const noexcept { return records.size(); }
    bool empty() const noexcept { return records.empty(); }

    friend bool operator==(const RewardHistory&, const RewardHistory&) = default;
};

struct EpochSummary
{
    std::size_t epoch = 0;
    double alpha = 0.0;
    ArchitecturePair best_pair;
    double best_reward = 0.0;

    friend bool operator==(const EpochSummary&, const EpochSummary&) = default;
};

struct SearchResult
{
    ArchitecturePair best_pair;
    double best_reward = 0.0;
    std::vector<EpochSummary> per_epoch_best;
    RewardHistory history;

    friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

/// Raised by run_search when the oracle fails; carries everything recorded up
/// to the failure.
class SearchFailure : public std::runtime_error
{
public:
    SearchFailure(const std::string& what, SearchResult partial);

    const SearchResult& partial() const noexcept { return partial_; }

private:
    SearchResult partial_;
};

struct Regrets
{
    double cumulative = 0.0;
    double simple = 0.0;
};

/// Cumulative regret over simulation and candidate plays, simple regret of the
/// best best-phase play. Throws std::invalid_argument on an empty history or
/// one without best-phase plays.
Regrets compute_regrets(const RewardHistory& history, double optimum);

/// Per-level outcome of SearchBest.
struct LevelCommit
{
    std::size_t level = 0;
    std::size_t arm = 0;
    ArmRanking ranking;
};

struct BestSearch
{
    Path path;
    ArchitecturePair pair;
    std::vector<LevelCommit> commits;
};

/// The search state of one run: tree, generator, history and counters. The
/// epoch-level operations are exposed for testing; run_search drives them.
class NestedSearch
{
public:
    NestedSearch(SearchSpaceConfig space, EngineConfig engine, RewardOracle& oracle);

    /// Fresh tree; play counter restarts at 0.
    void begin_epoch(std::size_t epoch, double alpha);

    /// `iterations` rounds of sample -> evaluate -> backprop, constrained to
    /// `prefix` (arm indices of the first levels).
    void simulate(std::size_t iterations, std::span<const std::size_t> prefix = {});

    /// B times: simulate(L_sim) then one sample. Duplicates are kept.
    std::vector<SampledPath> sample_candidates();

    /// Evaluate candidates (up to parallel_width at once when the oracle
    /// allows it) and backprop in issue order.
    void evaluate_candidates(const std::vector<SampledPath>& candidates);

    /// Level-by-level commitment with L_best simulations before each level.
    BestSearch search_best();

    /// Evaluates the committed pair and up to top_k - 1 alternatives, each
    /// replacing one level's arm by that level's best/runner-up alternative,
    /// most ambiguous level first. Returns the highest-reward pair.
    std::pair<ArchitecturePair, double> select_top_k(const BestSearch& best);

    /// Trains the oracle on warmup_epochs batches of B uniformly random pairs.
    void warmup();

    const SearchTree& tree() const noexcept { return tree_; }
    const RewardHistory& history() const noexcept { return history_; }
    RewardHistory take_history() noexcept { return std::move(history_); }
    double alpha() const noexcept { return alpha_; }
    std::uint64_t evaluations() const noexcept { return ticket_; }
    Rng& rng() noexcept { return rng_; }

private:
    double evaluate_one(const ArchitecturePair& pair, std::uint64_t ticket);
    void record(const ArchitecturePair& pair, double reward, Phase phase);

    SearchSpaceConfig space_;
    EngineConfig engine_;
    RewardOracle& oracle_;
    bool stateful_;
    SearchTree tree_;
    Rng rng_;
    RewardHistory history_;
    std::size_t epoch_ = 0;
    double alpha_ = 0.0;
    std::uint64_t play_ = 0;
    std::uint64_t ticket_ = 0;
};

/// Full search. Deterministic in (engine, space, oracle, seed).
SearchResult run_search(const EngineConfig& engine, const SearchSpaceConfig& space, RewardOracle& oracle);

} // namespace cmabnas
