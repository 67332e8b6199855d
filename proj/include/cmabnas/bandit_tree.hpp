#pragma once

// Lazily expanded 2N-level search tree. Levels 1..N choose the normal-cell
// nodes, levels N+1..2N the reduction-cell nodes. Each tree node is one local
// bandit over the canonical arms of its node position, conditioned on the arms
// fixed above it.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "cmabnas/search_space.hpp"

namespace cmabnas {

using Rng = std::mt19937_64;

enum class SelectionPolicy { local_optimal, local_suboptimal, local_random };

/// How sample_path picks arms: UCB with unexplored-first, or uniformly at random.
enum class Sampler { ucb, uniform };

class InsufficientPlaysError : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

struct ArmStats
{
    std::uint64_t plays = 0;
    double cumulative_reward = 0.0;

    /// Only meaningful when plays > 0.
    double mean() const noexcept { return cumulative_reward / static_cast<double>(plays); }
};

class TreeNode
{
public:
    TreeNode(std::size_t level, std::size_t arm_count);

    std::size_t level() const noexcept { return level_; }
    std::size_t arm_count() const noexcept { return plays_.size(); }
    /// n_i: total plays through this node.
    std::uint64_t total_plays() const noexcept { return total_plays_; }
    ArmStats arm(std::size_t j) const { return {plays_.at(j), rewards_.at(j)}; }
    std::size_t played_arm_count() const noexcept;

    std::span<const std::uint32_t> plays() const noexcept { return plays_; }
    std::span<const double> rewards() const noexcept { return rewards_; }

    /// nullptr until arm j has been played.
    const TreeNode* child(std::size_t j) const noexcept;

private:
    friend class SearchTree;

    std::size_t level_;
    std::uint64_t total_plays_ = 0;
    std::vector<std::uint32_t> plays_;
    std::vector<double> rewards_;
    std::vector<std::unique_ptr<TreeNode>> children_;
};

struct PathStep
{
    std::size_t level = 0;
    std::size_t arm = 0;

    friend bool operator==(const PathStep&, const PathStep&) = default;
};

/// One arm per level, levels 1..2N in order.
struct Path
{
    std::vector<PathStep> steps;

    std::vector<std::size_t> arm_indices() const;

    friend bool operator==(const Path&, const Path&) = default;
};

class SearchTree
{
public:
    explicit SearchTree(SearchSpaceConfig config);

    SearchTree(const SearchTree&) = delete;
    SearchTree& operator=(const SearchTree&) = delete;
    SearchTree(SearchTree&&) noexcept = default;
    SearchTree& operator=(SearchTree&&) noexcept = default;

    const SearchSpaceConfig& config() const noexcept { return config_; }
    std::size_t depth() const noexcept { return config_.levels(); }
    std::size_t arms_at_level(std::size_t level) const { return level_arms_.at(level - 1); }

    const TreeNode& root() const noexcept { return *root_; }
    /// Node reached by following `prefix` from the root, or nullptr if that
    /// part of the tree has not been expanded.
    const TreeNode* find(std::span<const std::size_t> prefix) const;
    std::size_t node_count() const noexcept { return node_count_; }

    /// Credits reward / 2N to every arm on the path and increments the play
    /// counts, expanding nodes as needed. Rejects rewards outside [0, 1].
    void backprop(const Path& path, double reward);

    ArchitecturePair to_pair(const Path& path) const;

    /// One record per arm of every expanded node, depth first:
    /// `level<TAB>prefix<TAB>arm<TAB>plays<TAB>mean` (prefix as dotted arm
    /// indices, `-` at the root; mean `-` for unplayed arms).
    void dump_stats(std::ostream& os) const;

private:
    void validate_path(const Path& path) const;

    SearchSpaceConfig config_;
    std::vector<std::size_t> level_arms_;
    std::unique_ptr<TreeNode> root_;
    std::size_t node_count_ = 1;
};

/// UCB arm selection at one node. Returns the first unplayed arm in canonical
/// order if there is one, else argmax mean + alpha * sqrt(2 ln n_i / n_j).
std::size_t select_arm_ucb(const TreeNode& node, double alpha);

struct SampledPath
{
    ArchitecturePair pair;
    Path path;
};

/// Descend all 2N levels. `prefix` pins the arms of the first prefix.size()
/// levels; the remaining levels are chosen by `sampler`. Unexpanded subtrees
/// behave as fresh nodes. Nothing is allocated.
SampledPath sample_path(const SearchTree& tree, double alpha, Rng& rng, Sampler sampler = Sampler::ucb,
                        std::span<const std::size_t> prefix = {});

/// Exploitation choice at a node. LocalOptimal / LocalSuboptimal rank played
/// arms by mean (ties to the lowest index); LocalRandom draws uniformly from
/// all arms. A node with a single arm always returns it.
std::size_t node_best_arm(const TreeNode& node, SelectionPolicy policy, Rng& rng);

struct ArmRanking
{
    std::size_t best = 0;
    double best_mean = 0.0;
    /// Equal to best when fewer than two arms have been played.
    std::size_t runner_up = 0;
    double runner_up_mean = 0.0;
    bool has_runner_up = false;
};

/// Best and second-best played arms by mean. Throws InsufficientPlaysError
/// if no arm has been played.
ArmRanking rank_arms(const TreeNode& node);

} // namespace cmabnas
