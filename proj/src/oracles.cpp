#include "cmabnas/oracles.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <tuple>

#include "cmabnas/genotype.hpp"

namespace cmabnas {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double clamp01(double x) noexcept
{
    return std::clamp(x, 0.0, 1.0);
}

std::string format_reward(double r)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", r);
    return buf;
}

} // namespace

UnknownArchitectureError::UnknownArchitectureError(std::uint64_t hash)
  : OracleError("unknown architecture " + format_hash(hash))
  , hash_(hash)
{}

SeparableOracle::SeparableOracle(SearchSpaceConfig config, UtilityTable utilities, double noise_sigma,
                                 std::uint64_t noise_seed)
  : config_(std::move(config))
  , utilities_(std::move(utilities))
  , noise_sigma_(noise_sigma)
  , noise_seed_(noise_seed)
{
    config_.validate();
    if (utilities_.size() != config_.levels()) {
        throw std::invalid_argument("utility table needs one row per tree level");
    }
    for (std::size_t l = 0; l < utilities_.size(); ++l) {
        if (utilities_[l].size() != arm_count(config_, config_.position_of_level(l + 1))) {
            throw std::invalid_argument("utility row " + std::to_string(l + 1) + " has the wrong arm count");
        }
        for (double u : utilities_[l]) {
            if (!(u >= 0.0 && u <= 1.0)) {
                throw std::invalid_argument("utilities must lie in [0, 1]");
            }
        }
    }
    if (!(noise_sigma_ >= 0.0) || !std::isfinite(noise_sigma_)) {
        throw std::invalid_argument("noise sigma must be finite and >= 0");
    }
}

double SeparableOracle::expected(std::span<const std::size_t> arm_indices) const
{
    double sum = 0.0;
    for (std::size_t l = 0; l < arm_indices.size(); ++l) {
        sum += utilities_[l].at(arm_indices[l]);
    }
    return sum / static_cast<double>(utilities_.size());
}

double SeparableOracle::expected(const ArchitecturePair& pair) const
{
    const auto idx = pair_to_indices(config_, pair);
    return expected(idx);
}

double SeparableOracle::noise(std::uint64_t ticket) const
{
    if (noise_sigma_ == 0.0) {
        return 0.0;
    }
    std::mt19937_64 rng(splitmix64(noise_seed_ ^ splitmix64(ticket)));
    std::normal_distribution<double> normal(0.0, noise_sigma_);
    double x = normal(rng);
    while (std::abs(x) > 3.0 * noise_sigma_) {
        x = normal(rng);
    }
    return x;
}

double SeparableOracle::evaluate(const ArchitecturePair& pair, std::uint64_t ticket)
{
    return clamp01(expected(pair) + noise(ticket));
}

SeparableOracle make_separable(const SearchSpaceConfig& config, std::uint64_t seed, double noise_sigma)
{
    config.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    SeparableOracle::UtilityTable table(config.levels());
    for (std::size_t l = 0; l < table.size(); ++l) {
        table[l].resize(arm_count(config, config.position_of_level(l + 1)));
        for (double& u : table[l]) {
            u = uniform(rng);
        }
    }
    return SeparableOracle(config, std::move(table), noise_sigma, splitmix64(seed));
}

std::pair<ArchitecturePair, double> oracle_optimum(const SeparableOracle& oracle)
{
    const auto& table = oracle.utilities();
    std::vector<std::size_t> best(table.size(), 0);
    for (std::size_t l = 0; l < table.size(); ++l) {
        best[l] = static_cast<std::size_t>(std::max_element(table[l].begin(), table[l].end()) - table[l].begin());
    }
    return {pair_from_indices(oracle.config(), best), oracle.expected(best)};
}

CoupledOracle::CoupledOracle(SeparableOracle base, double epsilon, std::uint64_t coupling_seed)
  : base_(std::move(base))
  , epsilon_(epsilon)
  , coupling_seed_(coupling_seed)
{
    if (!std::isfinite(epsilon_)) {
        throw std::invalid_argument("coupling strength must be finite");
    }
}

double CoupledOracle::interaction(std::size_t level_a, std::size_t arm_a, std::size_t level_b,
                                  std::size_t arm_b) const
{
    if (std::tie(level_b, arm_b) < std::tie(level_a, arm_a)) {
        std::swap(level_a, level_b);
        std::swap(arm_a, arm_b);
    }
    std::uint64_t h = splitmix64(coupling_seed_);
    for (std::uint64_t v : {level_a, arm_a, level_b, arm_b}) {
        h = splitmix64(h ^ v);
    }
    // 53 high bits -> [0, 1) -> [-1, 1)
    const double unit = static_cast<double>(h >> 11) * 0x1.0p-53;
    return 2.0 * unit - 1.0;
}

double CoupledOracle::evaluate(const ArchitecturePair& pair, std::uint64_t ticket)
{
    const auto idx = pair_to_indices(base_.config(), pair);
    double coupling = 0.0;
    if (epsilon_ != 0.0) {
        std::size_t count = 0;
        for (std::size_t a = 0; a < idx.size(); ++a) {
            for (std::size_t b = a + 1; b < idx.size(); ++b) {
                coupling += interaction(a + 1, idx[a], b + 1, idx[b]);
                ++count;
            }
        }
        coupling /= static_cast<double>(count);
    }
    return clamp01(base_.expected(idx) + base_.noise(ticket) + epsilon_ * coupling);
}

TabularOracle::TabularOracle(SearchSpaceConfig config, std::unordered_map<std::uint64_t, double> table)
  : config_(std::move(config))
  , table_(std::move(table))
{
    for (const auto& [hash, reward] : table_) {
        if (!(reward >= 0.0 && reward <= 1.0)) {
            throw OracleError("reward for " + format_hash(hash) + " outside [0, 1]");
        }
    }
}

double TabularOracle::lookup(std::uint64_t hash) const
{
    auto it = table_.find(hash);
    if (it == table_.end()) {
        throw UnknownArchitectureError(hash);
    }
    return it->second;
}

double TabularOracle::evaluate(const ArchitecturePair& pair, std::uint64_t)
{
    return lookup(genotype_hash(config_, pair));
}

TabularOracle load_tabular(const SearchSpaceConfig& config, const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw OracleError("cannot open tabular oracle file '" + path.string() + "'");
    }
    std::unordered_map<std::uint64_t, double> table;
    std::string line;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& why) {
        throw OracleError(path.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
            fail("expected 'genotype_hash<TAB>reward'");
        }
        std::uint64_t hash = 0;
        try {
            hash = parse_hash(std::string_view(line).substr(0, tab));
        } catch (const std::invalid_argument& e) {
            fail(e.what());
        }
        const std::string value = line.substr(tab + 1);
        double reward = 0.0;
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), reward);
        if (ec != std::errc{} || ptr != value.data() + value.size()) {
            fail("malformed reward '" + value + "'");
        }
        if (!(reward >= 0.0 && reward <= 1.0)) {
            fail("reward " + value + " outside [0, 1]");
        }
        if (!table.emplace(hash, reward).second) {
            fail("duplicate genotype hash " + format_hash(hash));
        }
    }
    return TabularOracle(config, std::move(table));
}

void dump_tabular(const SearchSpaceConfig& config, RewardOracle& oracle, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw OracleError("cannot write '" + path.string() + "'");
    }
    std::uint64_t ticket = 0;
    for_each_pair(config, [&](const std::vector<std::size_t>& idx) {
        const ArchitecturePair pair = pair_from_indices(config, idx);
        out << format_hash(genotype_hash(config, pair)) << '\t' << format_reward(oracle.evaluate(pair, ticket++))
            << '\n';
    });
    if (!out) {
        throw OracleError("write to '" + path.string() + "' failed");
    }
}

LearningCurveWrapper::LearningCurveWrapper(std::unique_ptr<RewardOracle> inner, double rate)
  : inner_(std::move(inner))
  , rate_(rate)
{
    if (!inner_) {
        throw std::invalid_argument("learning curve needs an inner oracle");
    }
    if (!(rate_ > 0.0) || !std::isfinite(rate_)) {
        throw std::invalid_argument("learning curve rate must be positive");
    }
}

double LearningCurveWrapper::evaluate(const ArchitecturePair& pair, std::uint64_t ticket)
{
    const double progress = 1.0 - std::exp(-rate_ * static_cast<double>(steps_));
    return clamp01(inner_->evaluate(pair, ticket) * progress);
}

void LearningCurveWrapper::train(std::span<const ArchitecturePair> batch)
{
    steps_ += batch.size();
}

void LearningCurveWrapper::train_step(const ArchitecturePair&)
{
    ++steps_;
}

} // namespace cmabnas
