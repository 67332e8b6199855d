#include "cmabnas/bandit_tree.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "cmabnas/ucb_kernels.hpp"

namespace cmabnas {

namespace {

constexpr std::uint32_t max_arm_plays = static_cast<std::uint32_t>(std::numeric_limits<std::int32_t>::max());

std::size_t fresh_choice(std::size_t arms, Sampler sampler, Rng& rng)
{
    if (sampler == Sampler::uniform) {
        return std::uniform_int_distribution<std::size_t>(0, arms - 1)(rng);
    }
    return 0;
}

} // namespace

TreeNode::TreeNode(std::size_t level, std::size_t arm_count)
  : level_(level)
  , plays_(arm_count, 0)
  , rewards_(arm_count, 0.0)
{}

std::size_t TreeNode::played_arm_count() const noexcept
{
    std::size_t count = 0;
    for (auto p : plays_) {
        count += p > 0 ? 1 : 0;
    }
    return count;
}

const TreeNode* TreeNode::child(std::size_t j) const noexcept
{
    return j < children_.size() ? children_[j].get() : nullptr;
}

std::vector<std::size_t> Path::arm_indices() const
{
    std::vector<std::size_t> out;
    out.reserve(steps.size());
    for (const auto& s : steps) {
        out.push_back(s.arm);
    }
    return out;
}

SearchTree::SearchTree(SearchSpaceConfig config)
  : config_(std::move(config))
{
    config_.validate();
    level_arms_.reserve(config_.levels());
    for (std::size_t level = 1; level <= config_.levels(); ++level) {
        level_arms_.push_back(arm_count(config_, config_.position_of_level(level)));
    }
    root_ = std::make_unique<TreeNode>(1, level_arms_.front());
}

const TreeNode* SearchTree::find(std::span<const std::size_t> prefix) const
{
    if (prefix.size() >= depth()) {
        throw std::out_of_range("prefix must be shorter than the tree depth");
    }
    const TreeNode* node = root_.get();
    for (std::size_t arm : prefix) {
        if (arm >= node->arm_count()) {
            throw std::out_of_range("arm index out of range in prefix");
        }
        node = node->child(arm);
        if (node == nullptr) {
            return nullptr;
        }
    }
    return node;
}

void SearchTree::validate_path(const Path& path) const
{
    if (path.steps.size() != depth()) {
        throw std::invalid_argument("path has " + std::to_string(path.steps.size()) + " steps, tree depth is " +
                                    std::to_string(depth()));
    }
    for (std::size_t i = 0; i < path.steps.size(); ++i) {
        const auto& step = path.steps[i];
        if (step.level != i + 1 || step.arm >= level_arms_[i]) {
            throw std::invalid_argument("invalid path step at level " + std::to_string(i + 1));
        }
    }
}

void SearchTree::backprop(const Path& path, double reward)
{
    if (!(reward >= 0.0 && reward <= 1.0)) {
        throw std::invalid_argument("reward " + std::to_string(reward) + " outside [0, 1]");
    }
    validate_path(path);
    const double credit = reward / static_cast<double>(depth());

    TreeNode* node = root_.get();
    for (std::size_t i = 0; i < path.steps.size(); ++i) {
        const std::size_t arm = path.steps[i].arm;
        if (node->plays_[arm] >= max_arm_plays) {
            throw std::overflow_error("arm play count overflow");
        }
        node->plays_[arm] += 1;
        node->rewards_[arm] += credit;
        node->total_plays_ += 1;

        if (i + 1 == path.steps.size()) {
            break;
        }
        if (node->children_.empty()) {
            node->children_.resize(node->arm_count());
        }
        auto& next = node->children_[arm];
        if (!next) {
            next = std::make_unique<TreeNode>(i + 2, level_arms_[i + 1]);
            ++node_count_;
        }
        node = next.get();
    }
}

ArchitecturePair SearchTree::to_pair(const Path& path) const
{
    validate_path(path);
    return pair_from_indices(config_, path.arm_indices());
}

void SearchTree::dump_stats(std::ostream& os) const
{
    std::vector<std::size_t> prefix;
    auto visit = [&](auto&& self, const TreeNode& node) -> void {
        std::string label = "-";
        if (!prefix.empty()) {
            label.clear();
            for (std::size_t i = 0; i < prefix.size(); ++i) {
                label += (i ? "." : "") + std::to_string(prefix[i]);
            }
        }
        for (std::size_t j = 0; j < node.arm_count(); ++j) {
            const ArmStats s = node.arm(j);
            os << node.level() << '\t' << label << '\t' << j << '\t' << s.plays << '\t';
            if (s.plays > 0) {
                os << s.mean();
            } else {
                os << '-';
            }
            os << '\n';
        }
        for (std::size_t j = 0; j < node.arm_count(); ++j) {
            if (const TreeNode* c = node.child(j)) {
                prefix.push_back(j);
                self(self, *c);
                prefix.pop_back();
            }
        }
    };
    visit(visit, *root_);
}

std::size_t select_arm_ucb(const TreeNode& node, double alpha)
{
    // n_i >= arm count whenever every arm is played, so the log is finite.
    const double log_term = node.total_plays() > 0 ? 2.0 * std::log(static_cast<double>(node.total_plays())) : 0.0;
    return kernels::ucb_select(node.plays(), node.rewards(), log_term, alpha);
}

SampledPath sample_path(const SearchTree& tree, double alpha, Rng& rng, Sampler sampler,
                        std::span<const std::size_t> prefix)
{
    const std::size_t depth = tree.depth();
    if (prefix.size() > depth) {
        throw std::invalid_argument("prefix longer than the tree depth");
    }
    Path path;
    path.steps.reserve(depth);
    const TreeNode* node = &tree.root();
    for (std::size_t level = 1; level <= depth; ++level) {
        std::size_t arm = 0;
        if (level <= prefix.size()) {
            arm = prefix[level - 1];
            if (arm >= tree.arms_at_level(level)) {
                throw std::out_of_range("arm index out of range in prefix");
            }
        } else if (node == nullptr) {
            arm = fresh_choice(tree.arms_at_level(level), sampler, rng);
        } else if (sampler == Sampler::uniform) {
            arm = std::uniform_int_distribution<std::size_t>(0, node->arm_count() - 1)(rng);
        } else {
            arm = select_arm_ucb(*node, alpha);
        }
        path.steps.push_back({level, arm});
        if (node != nullptr) {
            node = node->child(arm);
        }
    }
    return {tree.to_pair(path), std::move(path)};
}

ArmRanking rank_arms(const TreeNode& node)
{
    std::vector<double> means(node.arm_count());
    kernels::arm_means(node.plays(), node.rewards(), means);

    constexpr double unplayed = -std::numeric_limits<double>::infinity();
    ArmRanking r;
    bool found = false;
    for (std::size_t j = 0; j < means.size(); ++j) {
        if (means[j] == unplayed) {
            continue;
        }
        if (!found || means[j] > r.best_mean) {
            if (found) {
                r.runner_up = r.best;
                r.runner_up_mean = r.best_mean;
                r.has_runner_up = true;
            }
            r.best = j;
            r.best_mean = means[j];
            found = true;
        } else if (!r.has_runner_up || means[j] > r.runner_up_mean) {
            r.runner_up = j;
            r.runner_up_mean = means[j];
            r.has_runner_up = true;
        }
    }
    if (!found) {
        throw InsufficientPlaysError("no arm has been played at level " + std::to_string(node.level()));
    }
    if (!r.has_runner_up) {
        r.runner_up = r.best;
        r.runner_up_mean = r.best_mean;
    }
    return r;
}

std::size_t node_best_arm(const TreeNode& node, SelectionPolicy policy, Rng& rng)
{
    if (node.arm_count() == 1) {
        return 0;
    }
    switch (policy) {
    case SelectionPolicy::local_random:
        return std::uniform_int_distribution<std::size_t>(0, node.arm_count() - 1)(rng);
    case SelectionPolicy::local_optimal:
        return rank_arms(node).best;
    case SelectionPolicy::local_suboptimal: {
        const ArmRanking r = rank_arms(node);
        if (!r.has_runner_up) {
            throw InsufficientPlaysError("local-suboptimal needs two played arms at level " +
                                         std::to_string(node.level()));
        }
        return r.runner_up;
    }
    }
    throw std::invalid_argument("unknown selection policy");
}

} // namespace cmabnas
