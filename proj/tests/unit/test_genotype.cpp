#include <gtest/gtest.h>

#include <random>
#include <set>

#include "cmabnas/genotype.hpp"
#include "cmabnas/oracles.hpp"

using namespace cmabnas;

TEST(Genotype, SerializeKnownPair)
{
    const SearchSpaceConfig space(2, OperationSet{"a", "b"});
    const auto pair = pair_from_indices(space, {0, 0, 0, 0});
    EXPECT_EQ(serialize_genotype(space, pair),
              "normal:\n"
              "node1: (c_k-1,a) + (c_k-1,a)\n"
              "node2: (c_k-1,a) + (c_k-1,a)\n"
              "reduction:\n"
              "node1: (c_k-1,a) + (c_k-1,a)\n"
              "node2: (c_k-1,a) + (c_k-1,a)\n");
}

TEST(Genotype, RoundTripExhaustiveSmallSpace)
{
    const SearchSpaceConfig space(1, OperationSet{"a", "b"});
    std::set<std::uint64_t> hashes;
    std::size_t count = 0;
    for_each_pair(space, [&](const std::vector<std::size_t>& idx) {
        const auto pair = pair_from_indices(space, idx);
        const auto text = serialize_genotype(space, pair);
        EXPECT_EQ(parse_genotype(space, text), pair);
        hashes.insert(genotype_hash(space, pair));
        ++count;
    });
    EXPECT_EQ(count, 100u);
    EXPECT_EQ(hashes.size(), count);
}

TEST(Genotype, RoundTripRandomStandardSpace)
{
    const SearchSpaceConfig space;
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::size_t> idx;
        for (std::size_t level = 1; level <= space.levels(); ++level) {
            std::uniform_int_distribution<std::size_t> d(0, arm_count(space, space.position_of_level(level)) - 1);
            idx.push_back(d(rng));
        }
        const auto pair = pair_from_indices(space, idx);
        EXPECT_EQ(parse_genotype(space, serialize_genotype(space, pair)), pair);
    }
}

TEST(Genotype, ParserCanonicalizesAndSkipsComments)
{
    const SearchSpaceConfig space(2, OperationSet{"a", "b"});
    const std::string text = "# comment\n"
                             "normal:\n"
                             "node1: (c_k-2,b) + (c_k-1,a)\n"
                             "\n"
                             "node2: (node1,a) + (c_k-2,b)\n"
                             "reduction:\n"
                             "node1: (c_k-1,a) + (c_k-1,a)\n"
                             "node2: (c_k-1,b) + (node1,b)\n";
    const auto pair = parse_genotype(space, text);
    const auto& n1 = pair.normal.nodes[0];
    EXPECT_EQ(n1.first().input, InputRef::prev_cell());
    EXPECT_EQ(n1.second().input, InputRef::prev_prev_cell());
    EXPECT_EQ(parse_genotype(space, serialize_genotype(space, pair)), pair);
}

namespace {

std::string parse_error(const SearchSpaceConfig& space, const std::string& text, std::size_t* line = nullptr)
{
    try {
        parse_genotype(space, text);
    } catch (const GenotypeParseError& e) {
        if (line) {
            *line = e.line();
        }
        return e.reason();
    }
    return "";
}

} // namespace

TEST(Genotype, ParseErrors)
{
    const SearchSpaceConfig space(2, OperationSet{"a", "b"});
    const std::string tail = "reduction:\nnode1: (c_k-1,a) + (c_k-1,a)\nnode2: (c_k-1,a) + (c_k-1,a)\n";
    std::size_t line = 0;

    auto reason = parse_error(space, "normal:\nnode1: (node1,a) + (c_k-1,a)\nnode2: (c_k-1,a) + (c_k-1,a)\n" + tail,
                              &line);
    EXPECT_NE(reason.find("forward reference"), std::string::npos) << reason;
    EXPECT_EQ(line, 2u);

    reason = parse_error(space, "normal:\nnode1: (c_k-1,zz) + (c_k-1,a)\nnode2: (c_k-1,a) + (c_k-1,a)\n" + tail);
    EXPECT_NE(reason.find("zz"), std::string::npos) << reason;

    reason = parse_error(space, "normal:\nnode1: (c_k-3,a) + (c_k-1,a)\nnode2: (c_k-1,a) + (c_k-1,a)\n" + tail);
    EXPECT_NE(reason.find("input"), std::string::npos) << reason;

    EXPECT_FALSE(parse_error(space, tail).empty());
    EXPECT_FALSE(parse_error(space, "normal:\nnode1 (c_k-1,a)\n").empty());
    EXPECT_FALSE(parse_error(space, "normal:\nnode1: (c_k-1,a) + (c_k-1,a)\n" + tail).empty());
}

TEST(Genotype, HashFormat)
{
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
    EXPECT_EQ(format_hash(0x1ull), "0000000000000001");
    EXPECT_EQ(parse_hash("00ff"), 0xffull);
    EXPECT_EQ(parse_hash(format_hash(0xdeadbeefcafef00dull)), 0xdeadbeefcafef00dull);
    EXPECT_THROW(parse_hash(""), std::invalid_argument);
    EXPECT_THROW(parse_hash("xyz"), std::invalid_argument);
    EXPECT_THROW(parse_hash("00000000000000000"), std::invalid_argument);
}
