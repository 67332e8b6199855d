#include "cmabnas/ucb_kernels.hpp"

#include <cmath>
#include <limits>

namespace cmabnas::kernels::scalar {

std::size_t ucb_select(std::span<const std::uint32_t> plays, std::span<const double> rewards, double log_term,
                       double alpha)
{
    const std::size_t n = plays.size();
    for (std::size_t j = 0; j < n; ++j) {
        if (plays[j] == 0) {
            return j;
        }
    }
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
        const double count = static_cast<double>(plays[j]);
        const double mean = rewards[j] / count;
        const double bonus = std::sqrt(log_term / count);
        const double score = mean + alpha * bonus;
        if (score > best_score) {
            best_score = score;
            best = j;
        }
    }
    return best;
}

void arm_means(std::span<const std::uint32_t> plays, std::span<const double> rewards, std::span<double> out)
{
    for (std::size_t j = 0; j < plays.size(); ++j) {
        out[j] = plays[j] == 0 ? -std::numeric_limits<double>::infinity()
                               : rewards[j] / static_cast<double>(plays[j]);
    }
}

} // namespace cmabnas::kernels::scalar
