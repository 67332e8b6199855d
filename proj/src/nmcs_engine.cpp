#include "cmabnas/nmcs_engine.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "cmabnas/genotype.hpp"

namespace cmabnas {

namespace {

void require(bool ok, const std::string& what)
{
    if (!ok) {
        throw std::invalid_argument(what);
    }
}

} // namespace

std::string_view phase_name(Phase phase) noexcept
{
    switch (phase) {
    case Phase::candidate:
        return "candidate";
    case Phase::best:
        return "best";
    case Phase::simulation:
        break;
    }
    return "simulation";
}

Phase parse_phase(std::string_view name)
{
    if (name == "simulation") {
        return Phase::simulation;
    }
    if (name == "candidate") {
        return Phase::candidate;
    }
    if (name == "best") {
        return Phase::best;
    }
    throw std::invalid_argument("unknown phase '" + std::string(name) + "'");
}

std::string_view policy_name(SelectionPolicy policy) noexcept
{
    switch (policy) {
    case SelectionPolicy::local_suboptimal:
        return "local_suboptimal";
    case SelectionPolicy::local_random:
        return "local_random";
    case SelectionPolicy::local_optimal:
        break;
    }
    return "local_optimal";
}

SelectionPolicy parse_policy(std::string_view name)
{
    if (name == "local_optimal") {
        return SelectionPolicy::local_optimal;
    }
    if (name == "local_suboptimal") {
        return SelectionPolicy::local_suboptimal;
    }
    if (name == "local_random") {
        return SelectionPolicy::local_random;
    }
    throw std::invalid_argument("unknown policy '" + std::string(name) +
                                "' (expected local_optimal, local_suboptimal or local_random)");
}

std::string_view sampler_name(Sampler sampler) noexcept
{
    return sampler == Sampler::uniform ? "uniform" : "ucb";
}

Sampler parse_sampler(std::string_view name)
{
    if (name == "ucb") {
        return Sampler::ucb;
    }
    if (name == "uniform") {
        return Sampler::uniform;
    }
    throw std::invalid_argument("unknown sampler '" + std::string(name) + "' (expected ucb or uniform)");
}

void EngineConfig::validate() const
{
    require(epochs >= 1, "epochs must be >= 1");
    require(batch >= 1, "batch must be >= 1");
    require(sim_iterations >= 1, "l_sim must be >= 1");
    require(best_iterations >= 1, "l_best must be >= 1");
    require(alpha0 >= 0.0 && std::isfinite(alpha0), "alpha0 must be finite and >= 0");
    require(alpha_decay > 0.0 && alpha_decay <= 1.0, "alpha_decay must lie in (0, 1]");
    require(top_k >= 1, "top_k must be >= 1");
    require(parallel_width >= 1, "parallel_width must be >= 1");
}

SearchFailure::SearchFailure(const std::string& what, SearchResult partial)
  : std::runtime_error(what)
  , partial_(std::move(partial))
{}

Regrets compute_regrets(const RewardHistory& history, double optimum)
{
    require(!history.empty(), "cannot compute regrets of an empty history");
    require(optimum >= 0.0 && optimum <= 1.0, "optimum must lie in [0, 1]");
    Regrets r;
    std::optional<double> best;
    for (const auto& rec : history.records) {
        if (rec.phase == Phase::best) {
            best = best ? std::max(*best, rec.reward) : rec.reward;
        } else {
            r.cumulative += optimum - rec.reward;
        }
    }
    require(best.has_value(), "history contains no best-phase plays");
    r.simple = optimum - *best;
    return r;
}

NestedSearch::NestedSearch(SearchSpaceConfig space, EngineConfig engine, RewardOracle& oracle)
  : space_(std::move(space))
  , engine_(engine)
  , oracle_(oracle)
  , stateful_(oracle.capabilities().stateful)
  , tree_(space_)
  , rng_(engine.seed)
  , alpha_(engine.alpha0)
{
    engine_.validate();
}

void NestedSearch::begin_epoch(std::size_t epoch, double alpha)
{
    tree_ = SearchTree(space_);
    epoch_ = epoch;
    alpha_ = alpha;
    play_ = 0;
}

double NestedSearch::evaluate_one(const ArchitecturePair& pair, std::uint64_t ticket)
{
    const double r = oracle_.evaluate(pair, ticket);
    if (!(r >= 0.0 && r <= 1.0)) {
        throw OracleError("oracle returned reward " + std::to_string(r) + " outside [0, 1]");
    }
    return r;
}

void NestedSearch::record(const ArchitecturePair& pair, double reward, Phase phase)
{
    history_.records.push_back({epoch_, play_++, pair, genotype_hash(space_, pair), reward, phase});
}

void NestedSearch::simulate(std::size_t iterations, std::span<const std::size_t> prefix)
{
    for (std::size_t i = 0; i < iterations; ++i) {
        SampledPath s = sample_path(tree_, alpha_, rng_, engine_.sampler, prefix);
        if (stateful_) {
            oracle_.train_step(s.pair);
        }
        const double r = evaluate_one(s.pair, ticket_++);
        tree_.backprop(s.path, r);
        record(s.pair, r, Phase::simulation);
    }
}

std::vector<SampledPath> NestedSearch::sample_candidates()
{
    std::vector<SampledPath> out;
    out.reserve(engine_.batch);
    for (std::size_t j = 0; j < engine_.batch; ++j) {
        simulate(engine_.sim_iterations);
        out.push_back(sample_path(tree_, alpha_, rng_, engine_.sampler));
    }
    return out;
}

void NestedSearch::evaluate_candidates(const std::vector<SampledPath>& candidates)
{
    const std::size_t count = candidates.size();
    const std::uint64_t first_ticket = ticket_;
    ticket_ += count;

    std::vector<double> rewards(count, 0.0);
    std::vector<std::exception_ptr> errors(count);
    const std::size_t width =
        oracle_.capabilities().concurrent_evaluate ? std::min(engine_.parallel_width, std::max<std::size_t>(count, 1))
                                                   : 1;
    auto work = [&](std::size_t lane) {
        for (std::size_t i = lane; i < count; i += width) {
            try {
                rewards[i] = evaluate_one(candidates[i].pair, first_ticket + i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> lanes;
        lanes.reserve(width - 1);
        for (std::size_t lane = 1; lane < width; ++lane) {
            lanes.emplace_back(work, lane);
        }
        work(0);
    }
    for (std::size_t i = 0; i < count; ++i) {
        if (errors[i]) {
            std::rethrow_exception(errors[i]);
        }
        tree_.backprop(candidates[i].path, rewards[i]);
        record(candidates[i].pair, rewards[i], Phase::candidate);
    }
}

BestSearch NestedSearch::search_best()
{
    BestSearch out;
    std::vector<std::size_t> prefix;
    prefix.reserve(tree_.depth());
    for (std::size_t level = 1; level <= tree_.depth(); ++level) {
        simulate(engine_.best_iterations, prefix);
        const TreeNode* node = tree_.find(prefix);
        const std::size_t needed =
            std::min<std::size_t>(engine_.policy == SelectionPolicy::local_suboptimal ? 2 : 1,
                                  tree_.arms_at_level(level));
        // Only reachable when L_best is smaller than the arms the policy needs.
        while (node == nullptr || node->played_arm_count() < needed) {
            simulate(1, prefix);
            node = tree_.find(prefix);
        }
        const std::size_t arm = node_best_arm(*node, engine_.policy, rng_);
        out.commits.push_back({level, arm, rank_arms(*node)});
        prefix.push_back(arm);
    }
    out.path.steps.reserve(prefix.size());
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        out.path.steps.push_back({i + 1, prefix[i]});
    }
    out.pair = tree_.to_pair(out.path);
    return out;
}

std::pair<ArchitecturePair, double> NestedSearch::select_top_k(const BestSearch& best)
{
    std::vector<std::vector<std::size_t>> picks{best.path.arm_indices()};

    struct Alternative
    {
        double gap;
        std::size_t level;
        std::size_t arm;
    };
    std::vector<Alternative> alternatives;
    for (const auto& c : best.commits) {
        if (!c.ranking.has_runner_up) {
            continue;
        }
        const std::size_t alt = c.arm == c.ranking.best ? c.ranking.runner_up : c.ranking.best;
        if (alt == c.arm) {
            continue;
        }
        alternatives.push_back({c.ranking.best_mean - c.ranking.runner_up_mean, c.level, alt});
    }
    std::stable_sort(alternatives.begin(), alternatives.end(),
                     [](const Alternative& a, const Alternative& b) { return a.gap < b.gap; });
    for (std::size_t i = 0; i < alternatives.size() && picks.size() < engine_.top_k; ++i) {
        auto idx = picks.front();
        idx[alternatives[i].level - 1] = alternatives[i].arm;
        picks.push_back(std::move(idx));
    }

    std::optional<std::pair<ArchitecturePair, double>> winner;
    for (const auto& idx : picks) {
        ArchitecturePair pair = pair_from_indices(space_, idx);
        const double r = evaluate_one(pair, ticket_++);
        record(pair, r, Phase::best);
        if (!winner || r > winner->second) {
            winner.emplace(std::move(pair), r);
        }
    }
    return *winner;
}

void NestedSearch::warmup()
{
    std::vector<ArchitecturePair> batch;
    std::vector<std::size_t> idx(tree_.depth());
    for (std::size_t w = 0; w < engine_.warmup_epochs; ++w) {
        batch.clear();
        for (std::size_t b = 0; b < engine_.batch; ++b) {
            for (std::size_t l = 0; l < idx.size(); ++l) {
                idx[l] = std::uniform_int_distribution<std::size_t>(0, tree_.arms_at_level(l + 1) - 1)(rng_);
            }
            batch.push_back(pair_from_indices(space_, idx));
        }
        oracle_.train(batch);
    }
}

SearchResult run_search(const EngineConfig& engine, const SearchSpaceConfig& space, RewardOracle& oracle)
{
    NestedSearch search(space, engine, oracle);
    SearchResult result;
    bool have_best = false;
    double alpha = engine.alpha0;
    try {
        search.warmup();
        for (std::size_t epoch = 0; epoch < engine.epochs; ++epoch) {
            search.begin_epoch(epoch, alpha);
            const auto candidates = search.sample_candidates();
            std::vector<ArchitecturePair> batch;
            batch.reserve(candidates.size());
            for (const auto& c : candidates) {
                batch.push_back(c.pair);
            }
            oracle.train(batch);
            search.evaluate_candidates(candidates);

            auto [pair, reward] = search.select_top_k(search.search_best());
            result.per_epoch_best.push_back({epoch, alpha, pair, reward});
            if (!have_best || reward > result.best_reward) {
                result.best_pair = std::move(pair);
                result.best_reward = reward;
                have_best = true;
            }
            alpha *= engine.alpha_decay;
        }
    } catch (const std::exception& e) {
        result.history = search.take_history();
        throw SearchFailure(e.what(), std::move(result));
    }
    result.history = search.take_history();
    return result;
}

} // namespace cmabnas
