// Compiled with -mavx2 only; reached through runtime dispatch.
// Play counts must stay below 2^31 (converted as signed 32-bit lanes).

#include "cmabnas/ucb_kernels.hpp"

#include <immintrin.h>

#include <cmath>
#include <limits>

namespace cmabnas::kernels::avx2 {

namespace {

std::size_t first_unplayed(std::span<const std::uint32_t> plays)
{
    const std::size_t n = plays.size();
    const __m256i zero = _mm256_setzero_si256();
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
        const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(plays.data() + j));
        const int mask = _mm256_movemask_ps(_mm256_castsi256_ps(_mm256_cmpeq_epi32(v, zero)));
        if (mask != 0) {
            return j + static_cast<std::size_t>(__builtin_ctz(static_cast<unsigned>(mask)));
        }
    }
    for (; j < n; ++j) {
        if (plays[j] == 0) {
            return j;
        }
    }
    return n;
}

} // namespace

std::size_t ucb_select(std::span<const std::uint32_t> plays, std::span<const double> rewards, double log_term,
                       double alpha)
{
    const std::size_t n = plays.size();
    if (const std::size_t j = first_unplayed(plays); j < n) {
        return j;
    }

    const __m256d log_v = _mm256_set1_pd(log_term);
    const __m256d alpha_v = _mm256_set1_pd(alpha);
    const __m256d step = _mm256_set1_pd(4.0);
    __m256d best = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
    __m256d best_idx = _mm256_setzero_pd();
    __m256d idx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);

    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        const __m128i c32 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(plays.data() + j));
        const __m256d count = _mm256_cvtepi32_pd(c32);
        const __m256d mean = _mm256_div_pd(_mm256_loadu_pd(rewards.data() + j), count);
        const __m256d bonus = _mm256_sqrt_pd(_mm256_div_pd(log_v, count));
        const __m256d score = _mm256_add_pd(mean, _mm256_mul_pd(alpha_v, bonus));
        const __m256d gt = _mm256_cmp_pd(score, best, _CMP_GT_OQ);
        best = _mm256_blendv_pd(best, score, gt);
        best_idx = _mm256_blendv_pd(best_idx, idx, gt);
        idx = _mm256_add_pd(idx, step);
    }

    alignas(32) double lane_score[4];
    alignas(32) double lane_idx[4];
    _mm256_store_pd(lane_score, best);
    _mm256_store_pd(lane_idx, best_idx);

    double best_score = -std::numeric_limits<double>::infinity();
    std::size_t winner = 0;
    for (int lane = 0; lane < 4; ++lane) {
        const auto lane_winner = static_cast<std::size_t>(lane_idx[lane]);
        if (lane_score[lane] > best_score || (lane_score[lane] == best_score && lane_winner < winner)) {
            best_score = lane_score[lane];
            winner = lane_winner;
        }
    }
    for (; j < n; ++j) {
        const double count = static_cast<double>(plays[j]);
        const double mean = rewards[j] / count;
        const double bonus = std::sqrt(log_term / count);
        const double score = mean + alpha * bonus;
        if (score > best_score) {
            best_score = score;
            winner = j;
        }
    }
    return winner;
}

void arm_means(std::span<const std::uint32_t> plays, std::span<const double> rewards, std::span<double> out)
{
    const std::size_t n = plays.size();
    const __m256d neg_inf = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
    const __m256d zero = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        const __m128i c32 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(plays.data() + j));
        const __m256d count = _mm256_cvtepi32_pd(c32);
        const __m256d mean = _mm256_div_pd(_mm256_loadu_pd(rewards.data() + j), count);
        const __m256d unplayed = _mm256_cmp_pd(count, zero, _CMP_EQ_OQ);
        _mm256_storeu_pd(out.data() + j, _mm256_blendv_pd(mean, neg_inf, unplayed));
    }
    for (; j < n; ++j) {
        out[j] = plays[j] == 0 ? -std::numeric_limits<double>::infinity()
                               : rewards[j] / static_cast<double>(plays[j]);
    }
}

} // namespace cmabnas::kernels::avx2
