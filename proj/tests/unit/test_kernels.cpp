#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <vector>

#include "cmabnas/ucb_kernels.hpp"

using namespace cmabnas;

namespace {

struct Arms
{
    std::vector<std::uint32_t> plays;
    std::vector<double> rewards;
};

Arms random_arms(std::mt19937_64& rng, std::size_t n, double unplayed_prob, bool coarse)
{
    Arms a;
    std::bernoulli_distribution unplayed(unplayed_prob);
    std::uniform_int_distribution<std::uint32_t> count(1, coarse ? 4 : 5000);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t j = 0; j < n; ++j) {
        const std::uint32_t p = unplayed(rng) ? 0 : count(rng);
        a.plays.push_back(p);
        // Coarse values produce many exact ties.
        const double mean = coarse ? std::floor(unit(rng) * 4) / 4 : unit(rng);
        a.rewards.push_back(mean * p);
    }
    return a;
}

} // namespace

TEST(Kernels, ScalarWorkedExample)
{
    // n_i = 10; arm 0 mean 0.6 over 5 plays, arm 1 mean 0.5 over 2 plays.
    const std::vector<std::uint32_t> plays{5, 2};
    const std::vector<double> rewards{3.0, 1.0};
    const double log_term = 2.0 * std::log(10.0);
    EXPECT_NEAR(0.6 + std::sqrt(log_term / 5), 1.5597, 5e-5);
    EXPECT_NEAR(0.5 + std::sqrt(log_term / 2), 2.0174, 5e-5);
    EXPECT_EQ(kernels::scalar::ucb_select(plays, rewards, log_term, 1.0), 1u);
    EXPECT_EQ(kernels::scalar::ucb_select(plays, rewards, log_term, 0.0), 0u);
}

TEST(Kernels, UnplayedFirstAndTies)
{
    const std::vector<std::uint32_t> plays{3, 0, 2, 0};
    const std::vector<double> rewards{3.0, 0.0, 0.0, 0.0};
    EXPECT_EQ(kernels::scalar::ucb_select(plays, rewards, 1.0, 1.0), 1u);
    const std::vector<std::uint32_t> even{2, 2, 2};
    const std::vector<double> same{1.0, 1.0, 1.0};
    EXPECT_EQ(kernels::scalar::ucb_select(even, same, 1.0, 1.0), 0u);
    std::vector<double> out(4);
    kernels::scalar::arm_means(plays, rewards, out);
    EXPECT_EQ(out[0], 1.0);
    EXPECT_EQ(out[1], -std::numeric_limits<double>::infinity());
    EXPECT_EQ(out[2], 0.0);
}

TEST(Kernels, DispatchHonorsDetectedIsa)
{
    const auto isa = kernels::active_isa();
    EXPECT_TRUE(isa == kernels::Isa::scalar || isa == kernels::detected_isa());
    EXPECT_FALSE(kernels::isa_name(isa).empty());
}

#if CMABNAS_HAVE_AVX2_KERNELS
TEST(Kernels, Avx2MatchesScalarBitForBit)
{
    if (kernels::detected_isa() != kernels::Isa::avx2) {
        GTEST_SKIP() << "CPU lacks AVX2";
    }
    std::mt19937_64 rng(2024);
    for (std::size_t n = 1; n <= 70; ++n) {
        for (int trial = 0; trial < 40; ++trial) {
            const bool coarse = trial % 2 == 1;
            const double unplayed = trial % 5 == 0 ? 0.1 : 0.0;
            const auto a = random_arms(rng, n, unplayed, coarse);
            const double log_term = 2.0 * std::log(1.0 + double(trial * 37 + n));
            const double alpha = (trial % 4) * 0.5;
            ASSERT_EQ(kernels::scalar::ucb_select(a.plays, a.rewards, log_term, alpha),
                      kernels::avx2::ucb_select(a.plays, a.rewards, log_term, alpha))
                << "n=" << n << " trial=" << trial;
            std::vector<double> s(n), v(n);
            kernels::scalar::arm_means(a.plays, a.rewards, s);
            kernels::avx2::arm_means(a.plays, a.rewards, v);
            ASSERT_EQ(std::memcmp(s.data(), v.data(), n * sizeof(double)), 0) << "n=" << n;
        }
    }
}

TEST(Kernels, Avx2LargeCounts)
{
    if (kernels::detected_isa() != kernels::Isa::avx2) {
        GTEST_SKIP() << "CPU lacks AVX2";
    }
    const std::vector<std::uint32_t> plays{2147483647u, 1u, 2147483000u, 7u, 9u};
    const std::vector<double> rewards{1e9, 0.5, 2e9, 3.0, 4.5};
    for (double alpha : {0.0, 0.1, 1.0, 10.0}) {
        EXPECT_EQ(kernels::scalar::ucb_select(plays, rewards, 30.0, alpha),
                  kernels::avx2::ucb_select(plays, rewards, 30.0, alpha));
    }
}
#endif
