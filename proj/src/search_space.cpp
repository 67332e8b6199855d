#include "cmabnas/search_space.hpp"

#include <algorithm>
#include <unordered_set>

namespace cmabnas {

namespace {

void check_position(const SearchSpaceConfig& config, std::size_t position)
{
    if (position < 1 || position > config.nodes) {
        throw SearchSpaceError("node position " + std::to_string(position) + " out of range [1, " +
                               std::to_string(config.nodes) + "]");
    }
}

std::size_t choice_count(const SearchSpaceConfig& config, std::size_t position)
{
    return (position + 1) * config.op_count();
}

std::size_t choice_code(const SearchSpaceConfig& config, const Choice& c)
{
    return c.input.ordinal() * config.op_count() + c.op;
}

Choice choice_from_code(const SearchSpaceConfig& config, std::size_t code)
{
    return Choice{InputRef::from_ordinal(code / config.op_count()), code % config.op_count()};
}

// Index of the first arm whose first choice has code `a`.
std::size_t row_offset(std::size_t choices, std::size_t a)
{
    return a * choices - a * (a - 1) / 2;
}

} // namespace

OperationSet::OperationSet(std::vector<std::string> names)
  : names_(std::move(names))
{
    if (names_.empty()) {
        throw SearchSpaceError("operation set must contain at least one operation");
    }
    std::unordered_set<std::string> seen;
    for (const auto& n : names_) {
        if (n.empty()) {
            throw SearchSpaceError("empty operation name");
        }
        if (!seen.insert(n).second) {
            throw SearchSpaceError("duplicate operation name '" + n + "'");
        }
    }
}

OperationSet OperationSet::standard()
{
    return OperationSet{"skip_connect", "sep_conv_3x3", "sep_conv_5x5", "dil_conv_3x3",
                        "dil_conv_5x5", "max_pool_3x3", "avg_pool_3x3"};
}

OperationSet OperationSet::s2()
{
    return OperationSet{"sep_conv_3x3", "skip_connect"};
}

OperationSet OperationSet::s4()
{
    return OperationSet{"sep_conv_3x3", "noise"};
}

std::size_t OperationSet::index_of(std::string_view name) const
{
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) {
        throw SearchSpaceError("unknown operation '" + std::string(name) + "'");
    }
    return static_cast<std::size_t>(it - names_.begin());
}

SearchSpaceConfig::SearchSpaceConfig(std::size_t n, OperationSet ops)
  : nodes(n)
  , operations(std::move(ops))
{
    validate();
}

void SearchSpaceConfig::validate() const
{
    if (nodes < 1) {
        throw SearchSpaceError("a cell needs at least one node");
    }
}

std::size_t SearchSpaceConfig::position_of_level(std::size_t level) const
{
    if (level < 1 || level > levels()) {
        throw SearchSpaceError("tree level " + std::to_string(level) + " out of range [1, " +
                               std::to_string(levels()) + "]");
    }
    return level <= nodes ? level : level - nodes;
}

InputRef InputRef::node(std::size_t j)
{
    if (j < 1) {
        throw SearchSpaceError("node inputs are numbered from 1");
    }
    return InputRef{j + 1};
}

const Arm& ArchitecturePair::at_level(std::size_t level) const
{
    const std::size_t n = normal.nodes.size();
    return level <= n ? normal.nodes.at(level - 1) : reduction.nodes.at(level - n - 1);
}

std::size_t arm_count(const SearchSpaceConfig& config, std::size_t position)
{
    check_position(config, position);
    const std::size_t k = choice_count(config, position);
    return k * (k - 1) / 2 + k;
}

std::vector<Arm> enumerate_arms(const SearchSpaceConfig& config, std::size_t position)
{
    const std::size_t count = arm_count(config, position);
    std::vector<Arm> arms;
    arms.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        arms.push_back(arm_at(config, position, i));
    }
    return arms;
}

BigInt space_size(const SearchSpaceConfig& config)
{
    config.validate();
    BigInt total = 1;
    for (std::size_t i = 1; i <= config.nodes; ++i) {
        total *= arm_count(config, i);
    }
    return total;
}

Arm canonicalize(const SearchSpaceConfig& config, std::size_t position, const Choice& a, const Choice& b)
{
    check_position(config, position);
    for (const Choice* c : {&a, &b}) {
        if (!c->input.valid_for(position)) {
            throw SearchSpaceError("input ordinal " + std::to_string(c->input.ordinal()) +
                                   " is not available to node " + std::to_string(position));
        }
        if (c->op >= config.op_count()) {
            throw SearchSpaceError("operation index " + std::to_string(c->op) + " out of range");
        }
    }
    return b < a ? Arm{b, a} : Arm{a, b};
}

std::size_t arm_index(const SearchSpaceConfig& config, std::size_t position, const Arm& arm)
{
    const Arm checked = canonicalize(config, position, arm.first(), arm.second());
    const std::size_t k = choice_count(config, position);
    const std::size_t a = choice_code(config, checked.first());
    const std::size_t b = choice_code(config, checked.second());
    return row_offset(k, a) + (b - a);
}

Arm arm_at(const SearchSpaceConfig& config, std::size_t position, std::size_t index)
{
    const std::size_t count = arm_count(config, position);
    if (index >= count) {
        throw SearchSpaceError("arm index " + std::to_string(index) + " out of range for node " +
                               std::to_string(position));
    }
    const std::size_t k = choice_count(config, position);
    std::size_t a = 0;
    while (row_offset(k, a + 1) <= index) {
        ++a;
    }
    const std::size_t b = a + (index - row_offset(k, a));
    return Arm{choice_from_code(config, a), choice_from_code(config, b)};
}

void validate_pair(const SearchSpaceConfig& config, const ArchitecturePair& pair)
{
    config.validate();
    for (const CellGenotype* cell : {&pair.normal, &pair.reduction}) {
        if (cell->nodes.size() != config.nodes) {
            throw SearchSpaceError("cell has " + std::to_string(cell->nodes.size()) + " nodes, expected " +
                                   std::to_string(config.nodes));
        }
        for (std::size_t i = 0; i < cell->nodes.size(); ++i) {
            const Arm& arm = cell->nodes[i];
            const Arm canon = canonicalize(config, i + 1, arm.first(), arm.second());
            if (!(canon == arm)) {
                throw SearchSpaceError("node " + std::to_string(i + 1) + " is not in canonical order");
            }
        }
    }
}

ArchitecturePair pair_from_indices(const SearchSpaceConfig& config, const std::vector<std::size_t>& indices)
{
    if (indices.size() != config.levels()) {
        throw SearchSpaceError("expected " + std::to_string(config.levels()) + " arm indices, got " +
                               std::to_string(indices.size()));
    }
    ArchitecturePair pair;
    pair.normal.nodes.reserve(config.nodes);
    pair.reduction.nodes.reserve(config.nodes);
    for (std::size_t level = 1; level <= config.levels(); ++level) {
        const std::size_t pos = config.position_of_level(level);
        auto& cell = level <= config.nodes ? pair.normal : pair.reduction;
        cell.nodes.push_back(arm_at(config, pos, indices[level - 1]));
    }
    return pair;
}

std::vector<std::size_t> pair_to_indices(const SearchSpaceConfig& config, const ArchitecturePair& pair)
{
    validate_pair(config, pair);
    std::vector<std::size_t> out;
    out.reserve(config.levels());
    for (std::size_t level = 1; level <= config.levels(); ++level) {
        out.push_back(arm_index(config, config.position_of_level(level), pair.at_level(level)));
    }
    return out;
}

} // namespace cmabnas
