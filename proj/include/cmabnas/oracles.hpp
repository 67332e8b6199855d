#pragma once

// Reward oracles: sources of rewards in [0, 1] for architecture pairs.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cmabnas/search_space.hpp"

namespace cmabnas {

class OracleError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class UnknownArchitectureError : public OracleError
{
public:
    explicit UnknownArchitectureError(std::uint64_t hash);

    std::uint64_t hash() const noexcept { return hash_; }

private:
    std::uint64_t hash_;
};

struct OracleCapabilities
{
    /// Training changes future evaluations; train_step is meaningful.
    bool stateful = false;
    /// evaluate may be called from several threads at once.
    bool concurrent_evaluate = true;
};

/// Maps architecture pairs to rewards in [0, 1].
///
/// `ticket` is the engine's issue-order index of the evaluation. Oracles that
/// add noise derive it from the ticket, so results do not depend on the order
/// in which concurrent evaluations complete.
class RewardOracle
{
public:
    virtual ~RewardOracle() = default;

    virtual OracleCapabilities capabilities() const = 0;
    virtual double evaluate(const ArchitecturePair& pair, std::uint64_t ticket) = 0;
    virtual void train(std::span<const ArchitecturePair> batch) { (void)batch; }
    virtual void train_step(const ArchitecturePair& pair) { (void)pair; }
};

/// Reward = clamp(mean over the 2N levels of u[level][arm] + noise, 0, 1).
/// Noise is zero-mean normal with standard deviation sigma, truncated to
/// [-3 sigma, 3 sigma], drawn from a generator keyed by (noise seed, ticket).
class SeparableOracle final : public RewardOracle
{
public:
    using UtilityTable = std::vector<std::vector<double>>;

    SeparableOracle(SearchSpaceConfig config, UtilityTable utilities, double noise_sigma = 0.0,
                    std::uint64_t noise_seed = 0);

    OracleCapabilities capabilities() const override { return {}; }
    double evaluate(const ArchitecturePair& pair, std::uint64_t ticket) override;

    /// Noise-free mean of per-level utilities (unclamped).
    double expected(const ArchitecturePair& pair) const;
    double expected(std::span<const std::size_t> arm_indices) const;
    /// Additive noise term for `ticket` (0 when sigma is 0).
    double noise(std::uint64_t ticket) const;

    const SearchSpaceConfig& config() const noexcept { return config_; }
    const UtilityTable& utilities() const noexcept { return utilities_; }
    double noise_sigma() const noexcept { return noise_sigma_; }

private:
    SearchSpaceConfig config_;
    UtilityTable utilities_;
    double noise_sigma_;
    std::uint64_t noise_seed_;
};

/// Utilities drawn uniformly from [0, 1) level by level, arm by arm.
SeparableOracle make_separable(const SearchSpaceConfig& config, std::uint64_t seed, double noise_sigma);

/// Per-level argmax of the utility table (lowest index on ties) and the mean of
/// the per-level maxima.
std::pair<ArchitecturePair, double> oracle_optimum(const SeparableOracle& oracle);

/// Separable base plus epsilon times the mean pairwise interaction over all
/// level pairs of the chosen arms. Interactions w in [-1, 1] are a seeded hash
/// of (level, arm, level', arm'), so the table is never materialized.
class CoupledOracle final : public RewardOracle
{
public:
    CoupledOracle(SeparableOracle base, double epsilon, std::uint64_t coupling_seed);

    OracleCapabilities capabilities() const override { return {}; }
    double evaluate(const ArchitecturePair& pair, std::uint64_t ticket) override;

    double interaction(std::size_t level_a, std::size_t arm_a, std::size_t level_b, std::size_t arm_b) const;
    const SeparableOracle& base() const noexcept { return base_; }
    double epsilon() const noexcept { return epsilon_; }

private:
    SeparableOracle base_;
    double epsilon_;
    std::uint64_t coupling_seed_;
};

/// Exact stored rewards keyed by genotype hash.
class TabularOracle final : public RewardOracle
{
public:
    TabularOracle(SearchSpaceConfig config, std::unordered_map<std::uint64_t, double> table);

    OracleCapabilities capabilities() const override { return {}; }
    double evaluate(const ArchitecturePair& pair, std::uint64_t ticket) override;
    /// Throws UnknownArchitectureError when absent.
    double lookup(std::uint64_t hash) const;

    std::size_t size() const noexcept { return table_.size(); }
    const SearchSpaceConfig& config() const noexcept { return config_; }

private:
    SearchSpaceConfig config_;
    std::unordered_map<std::uint64_t, double> table_;
};

/// Reads `genotype_hash<TAB>reward` records. Blank lines and `#` comments are
/// skipped. Errors name the line number.
TabularOracle load_tabular(const SearchSpaceConfig& config, const std::filesystem::path& path);

/// Writes every pair of the space evaluated with `oracle` (ticket = enumeration
/// index) in the tabular format. Only sensible for tiny spaces.
void dump_tabular(const SearchSpaceConfig& config, RewardOracle& oracle, const std::filesystem::path& path);

/// Emulated proxy training: reward = inner * (1 - exp(-rate * steps)).
class LearningCurveWrapper final : public RewardOracle
{
public:
    LearningCurveWrapper(std::unique_ptr<RewardOracle> inner, double rate);

    OracleCapabilities capabilities() const override { return {true, false}; }
    double evaluate(const ArchitecturePair& pair, std::uint64_t ticket) override;
    void train(std::span<const ArchitecturePair> batch) override;
    void train_step(const ArchitecturePair& pair) override;

    std::uint64_t steps() const noexcept { return steps_; }

private:
    std::unique_ptr<RewardOracle> inner_;
    double rate_;
    std::uint64_t steps_ = 0;
};

/// Visits every pair of the space in lexicographic per-level index order.
template<class Fn>
void for_each_pair(const SearchSpaceConfig& config, Fn&& fn)
{
    const std::size_t depth = config.levels();
    std::vector<std::size_t> limits(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        limits[l] = arm_count(config, config.position_of_level(l + 1));
    }
    std::vector<std::size_t> idx(depth, 0);
    while (true) {
        fn(std::as_const(idx));
        std::size_t l = depth;
        while (l > 0) {
            --l;
            if (++idx[l] < limits[l]) {
                break;
            }
            idx[l] = 0;
            if (l == 0) {
                return;
            }
        }
    }
}

} // namespace cmabnas
