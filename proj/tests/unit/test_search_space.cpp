#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <tuple>
#include <vector>

#include "cmabnas/search_space.hpp"

using namespace cmabnas;

namespace {

using RawChoice = std::pair<std::size_t, std::size_t>;  // (input ordinal, op)
using RawArm = std::pair<RawChoice, RawChoice>;

SearchSpaceConfig space_of(std::size_t n, std::size_t m)
{
    std::vector<std::string> ops;
    for (std::size_t i = 0; i < m; ++i) {
        ops.push_back("op" + std::to_string(i));
    }
    return SearchSpaceConfig(n, OperationSet(ops));
}

// Every ordered pair of raw choices, folded into unordered pairs.
std::set<RawArm> brute_arms(std::size_t position, std::size_t m)
{
    std::set<RawArm> arms;
    for (std::size_t a = 0; a <= position; ++a) {
        for (std::size_t x = 0; x < m; ++x) {
            for (std::size_t b = 0; b <= position; ++b) {
                for (std::size_t y = 0; y < m; ++y) {
                    RawChoice p{a, x}, q{b, y};
                    arms.insert(std::minmax(p, q));
                }
            }
        }
    }
    return arms;
}

RawArm raw(const Arm& arm)
{
    return {{arm.first().input.ordinal(), arm.first().op}, {arm.second().input.ordinal(), arm.second().op}};
}

} // namespace

TEST(SearchSpace, StandardCellCounts)
{
    const SearchSpaceConfig space;
    EXPECT_EQ(space.op_count(), 7u);
    EXPECT_EQ(arm_count(space, 1), 105u);
    EXPECT_EQ(arm_count(space, 2), 231u);
    EXPECT_EQ(arm_count(space, 3), 406u);
    EXPECT_EQ(arm_count(space, 4), 630u);
    EXPECT_EQ(space_size(space), BigInt(6203943900ull));
}

TEST(SearchSpace, StandardCountsMatchBruteForce)
{
    const SearchSpaceConfig space;
    for (std::size_t i = 1; i <= 4; ++i) {
        EXPECT_EQ(arm_count(space, i), brute_arms(i, 7).size()) << "node " << i;
    }
}

TEST(SearchSpace, SingleNodeSingleOp)
{
    const auto space = space_of(1, 1);
    EXPECT_EQ(arm_count(space, 1), 3u);
    EXPECT_EQ(space_size(space), BigInt(3));
}

TEST(SearchSpace, ReducedSetsHaveTwoOps)
{
    EXPECT_EQ(OperationSet::s2().size(), 2u);
    EXPECT_EQ(OperationSet::s4().size(), 2u);
    const SearchSpaceConfig space(4, OperationSet::s2());
    EXPECT_EQ(arm_count(space, 1), brute_arms(1, 2).size());
    EXPECT_EQ(arm_count(space, 4), brute_arms(4, 2).size());
}

TEST(SearchSpace, EnumerationMatchesBruteForceOrderAndIndex)
{
    for (std::size_t m = 1; m <= 3; ++m) {
        for (std::size_t n = 1; n <= 3; ++n) {
            const auto space = space_of(n, m);
            for (std::size_t pos = 1; pos <= n; ++pos) {
                const auto brute = brute_arms(pos, m);
                const auto arms = enumerate_arms(space, pos);
                ASSERT_EQ(arms.size(), brute.size());
                std::size_t idx = 0;
                for (const auto& expected : brute) {
                    EXPECT_EQ(raw(arms[idx]), expected);
                    EXPECT_EQ(arm_index(space, pos, arms[idx]), idx);
                    EXPECT_EQ(arm_at(space, pos, idx), arms[idx]);
                    ++idx;
                }
            }
        }
    }
}

TEST(SearchSpace, ClosedFormEqualsExhaustiveGenotypeCount)
{
    for (std::size_t n = 1; n <= 2; ++n) {
        for (std::size_t m = 1; m <= 2; ++m) {
            // Enumerate every raw assignment of two choices per node and count
            // distinct canonical cells.
            std::set<std::vector<RawArm>> cells;
            std::vector<std::vector<RawChoice>> choices(n);
            for (std::size_t pos = 1; pos <= n; ++pos) {
                for (std::size_t a = 0; a <= pos; ++a) {
                    for (std::size_t x = 0; x < m; ++x) {
                        choices[pos - 1].push_back({a, x});
                    }
                }
            }
            std::vector<RawArm> cell(n);
            auto rec = [&](auto&& self, std::size_t node) -> void {
                if (node == n) {
                    cells.insert(cell);
                    return;
                }
                for (const auto& p : choices[node]) {
                    for (const auto& q : choices[node]) {
                        cell[node] = std::minmax(p, q);
                        self(self, node + 1);
                    }
                }
            };
            rec(rec, 0);
            EXPECT_EQ(space_size(space_of(n, m)), BigInt(cells.size())) << "N=" << n << " M=" << m;
        }
    }
}

TEST(SearchSpace, CanonicalizeIsSymmetricAndIdempotent)
{
    const auto space = space_of(3, 3);
    for (std::size_t pos = 1; pos <= 3; ++pos) {
        for (std::size_t a = 0; a <= pos; ++a) {
            for (std::size_t b = 0; b <= pos; ++b) {
                for (std::size_t x = 0; x < 3; ++x) {
                    for (std::size_t y = 0; y < 3; ++y) {
                        const Choice p{InputRef::from_ordinal(a), x};
                        const Choice q{InputRef::from_ordinal(b), y};
                        const Arm ab = canonicalize(space, pos, p, q);
                        EXPECT_EQ(ab, canonicalize(space, pos, q, p));
                        EXPECT_EQ(ab, canonicalize(space, pos, ab.first(), ab.second()));
                        EXPECT_LE(ab.first(), ab.second());
                    }
                }
            }
        }
    }
}

TEST(SearchSpace, CanonicalizeRejectsForwardInputsAndBadOps)
{
    const auto space = space_of(3, 2);
    const Choice ok{InputRef::prev_cell(), 0};
    EXPECT_THROW(canonicalize(space, 1, ok, Choice{InputRef::node(1), 0}), SearchSpaceError);
    EXPECT_THROW(canonicalize(space, 2, ok, Choice{InputRef::node(2), 0}), SearchSpaceError);
    EXPECT_NO_THROW(canonicalize(space, 2, ok, Choice{InputRef::node(1), 0}));
    EXPECT_THROW(canonicalize(space, 1, ok, Choice{InputRef::prev_cell(), 2}), SearchSpaceError);
    EXPECT_THROW(canonicalize(space, 4, ok, ok), SearchSpaceError);
    EXPECT_THROW(arm_at(space, 1, arm_count(space, 1)), SearchSpaceError);
}

TEST(SearchSpace, OperationSetValidation)
{
    EXPECT_THROW(OperationSet(std::vector<std::string>{}), SearchSpaceError);
    EXPECT_THROW((OperationSet{"a", "a"}), SearchSpaceError);
    EXPECT_THROW((OperationSet{"a", ""}), SearchSpaceError);
    const OperationSet ops{"x", "y"};
    EXPECT_EQ(ops.index_of("y"), 1u);
    try {
        ops.index_of("zz");
        FAIL();
    } catch (const SearchSpaceError& e) {
        EXPECT_NE(std::string(e.what()).find("zz"), std::string::npos);
    }
    EXPECT_THROW(SearchSpaceConfig(0, ops).validate(), SearchSpaceError);
}

TEST(SearchSpace, PairIndicesRoundTrip)
{
    const auto space = space_of(2, 3);
    const std::vector<std::size_t> idx{3, 20, 0, 41};
    const auto pair = pair_from_indices(space, idx);
    EXPECT_EQ(pair_to_indices(space, pair), idx);
    EXPECT_NO_THROW(validate_pair(space, pair));
    EXPECT_EQ(pair.at_level(3), arm_at(space, 1, 0));
    EXPECT_THROW(pair_from_indices(space, {0, 0, 0}), SearchSpaceError);
}
