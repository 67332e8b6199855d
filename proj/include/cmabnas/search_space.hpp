#pragma once

// Cell / node search space: operation sets, canonical arms, closed-form sizes.

#include <cstddef>
#include <cstdint>
#include <compare>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace cmabnas {

using BigInt = boost::multiprecision::cpp_int;

class SearchSpaceError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Ordered, duplicate-free list of operation names. The position of a name is
/// its operation index.
class OperationSet
{
public:
    OperationSet(std::vector<std::string> names);
    OperationSet(std::initializer_list<std::string> names)
      : OperationSet(std::vector<std::string>(names))
    {}

    /// The seven zero-free operations of the standard DARTS-style cell.
    static OperationSet standard();
    /// Two-operation reduced set (separable conv + skip).
    static OperationSet s2();
    /// Two-operation reduced set (separable conv + noise).
    static OperationSet s4();

    std::size_t size() const noexcept { return names_.size(); }
    const std::string& name(std::size_t op) const { return names_.at(op); }
    const std::vector<std::string>& names() const noexcept { return names_; }

    /// Index of `name`, or throws SearchSpaceError naming the token.
    std::size_t index_of(std::string_view name) const;

    friend bool operator==(const OperationSet&, const OperationSet&) = default;

private:
    std::vector<std::string> names_;
};

struct SearchSpaceConfig
{
    static constexpr std::size_t cell_input_count = 2;

    std::size_t nodes = 4;
    OperationSet operations = OperationSet::standard();

    SearchSpaceConfig() = default;
    SearchSpaceConfig(std::size_t n, OperationSet ops);

    /// Throws SearchSpaceError if N == 0.
    void validate() const;

    std::size_t op_count() const noexcept { return operations.size(); }
    /// Number of tree levels (normal-cell nodes followed by reduction-cell nodes).
    std::size_t levels() const noexcept { return 2 * nodes; }
    /// Node position (1-based) that a tree level (1-based) refers to.
    std::size_t position_of_level(std::size_t level) const;

    friend bool operator==(const SearchSpaceConfig&, const SearchSpaceConfig&) = default;
};

/// One input of a node: a cell input (C_{k-1} / C_{k-2}) or an earlier node.
/// Ordinals: C_{k-1} = 0, C_{k-2} = 1, node j = j + 1.
class InputRef
{
public:
    enum class Kind : std::uint8_t { prev_cell, prev_prev_cell, node };

    static constexpr InputRef prev_cell() noexcept { return InputRef{0}; }
    static constexpr InputRef prev_prev_cell() noexcept { return InputRef{1}; }
    static InputRef node(std::size_t j);
    static constexpr InputRef from_ordinal(std::size_t ordinal) noexcept { return InputRef{ordinal}; }

    constexpr std::size_t ordinal() const noexcept { return ordinal_; }
    constexpr Kind kind() const noexcept
    {
        return ordinal_ == 0 ? Kind::prev_cell : ordinal_ == 1 ? Kind::prev_prev_cell : Kind::node;
    }
    /// Node index j for Kind::node.
    constexpr std::size_t node_index() const noexcept { return ordinal_ - 1; }

    /// Valid inputs of node i are C_{k-1}, C_{k-2} and nodes 1..i-1.
    constexpr bool valid_for(std::size_t position) const noexcept { return ordinal_ <= position; }

    friend constexpr auto operator<=>(const InputRef&, const InputRef&) = default;

private:
    explicit constexpr InputRef(std::size_t ordinal) noexcept
      : ordinal_(ordinal)
    {}

    std::size_t ordinal_ = 0;
};

/// A single (input, operation) choice.
struct Choice
{
    InputRef input;
    std::size_t op = 0;

    friend constexpr auto operator<=>(const Choice&, const Choice&) = default;
};

/// Canonical unordered pair of choices for one node; first <= second.
class Arm
{
public:
    constexpr const Choice& first() const noexcept { return first_; }
    constexpr const Choice& second() const noexcept { return second_; }

    friend constexpr auto operator<=>(const Arm&, const Arm&) = default;
    friend Arm canonicalize(const SearchSpaceConfig&, std::size_t, const Choice&, const Choice&);
    friend Arm arm_at(const SearchSpaceConfig&, std::size_t, std::size_t);

private:
    constexpr Arm(Choice a, Choice b) noexcept
      : first_(a)
      , second_(b)
    {}

    Choice first_;
    Choice second_;
};

struct CellGenotype
{
    std::vector<Arm> nodes;

    friend bool operator==(const CellGenotype&, const CellGenotype&) = default;
};

struct ArchitecturePair
{
    CellGenotype normal;
    CellGenotype reduction;

    /// Arm at tree level (1-based): levels 1..N normal, N+1..2N reduction.
    const Arm& at_level(std::size_t level) const;

    friend bool operator==(const ArchitecturePair&, const ArchitecturePair&) = default;
};

/// Number of canonical arms of node `position`: C((i+1)M, 2) + (i+1)M.
std::size_t arm_count(const SearchSpaceConfig& config, std::size_t position);

/// All canonical arms of node `position`, ordered by (first, second).
std::vector<Arm> enumerate_arms(const SearchSpaceConfig& config, std::size_t position);

/// Product of per-node arm counts (size of one cell's space).
BigInt space_size(const SearchSpaceConfig& config);

/// Order the two choices canonically. Throws SearchSpaceError when either
/// choice is invalid for `position`.
Arm canonicalize(const SearchSpaceConfig& config, std::size_t position, const Choice& a, const Choice& b);

/// Position of `arm` in enumerate_arms(config, position), computed in closed form.
std::size_t arm_index(const SearchSpaceConfig& config, std::size_t position, const Arm& arm);
/// Inverse of arm_index.
Arm arm_at(const SearchSpaceConfig& config, std::size_t position, std::size_t index);

/// Throws SearchSpaceError unless `pair` is valid under `config`.
void validate_pair(const SearchSpaceConfig& config, const ArchitecturePair& pair);

/// Build a pair from per-level arm indices (2N entries).
ArchitecturePair pair_from_indices(const SearchSpaceConfig& config, const std::vector<std::size_t>& indices);
/// Per-level arm indices of `pair` (2N entries).
std::vector<std::size_t> pair_to_indices(const SearchSpaceConfig& config, const ArchitecturePair& pair);

} // namespace cmabnas
