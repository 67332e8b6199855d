#pragma once

// Inner loops of arm selection over structure-of-arrays arm statistics.
//
// Every variant computes, per arm j with n_j > 0,
//     mean_j  = reward_j / n_j
//     score_j = mean_j + alpha * sqrt(log_term / n_j)
// with the same operation order and no fused multiply-add, so all variants
// return bit-identical results. Callers pass log_term = 2 ln(n_i).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace cmabnas::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;

/// Best variant supported by the running CPU.
Isa detected_isa() noexcept;
/// Variant used by the dispatching entry points. Honors CMABNAS_ISA=scalar|avx2
/// (an unsupported request falls back to detected_isa()).
Isa active_isa() noexcept;

/// Index of the first unplayed arm if any; otherwise the argmax of the UCB
/// score, lowest index on ties. `plays` and `rewards` must have equal,
/// nonzero length.
std::size_t ucb_select(std::span<const std::uint32_t> plays, std::span<const double> rewards, double log_term,
                       double alpha);

/// out_j = reward_j / n_j, or -infinity for unplayed arms.
void arm_means(std::span<const std::uint32_t> plays, std::span<const double> rewards, std::span<double> out);

namespace scalar {
std::size_t ucb_select(std::span<const std::uint32_t> plays, std::span<const double> rewards, double log_term,
                       double alpha);
void arm_means(std::span<const std::uint32_t> plays, std::span<const double> rewards, std::span<double> out);
} // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define CMABNAS_HAVE_AVX2_KERNELS 1
namespace avx2 {
std::size_t ucb_select(std::span<const std::uint32_t> plays, std::span<const double> rewards, double log_term,
                       double alpha);
void arm_means(std::span<const std::uint32_t> plays, std::span<const double> rewards, std::span<double> out);
} // namespace avx2
#else
#define CMABNAS_HAVE_AVX2_KERNELS 0
#endif

} // namespace cmabnas::kernels
