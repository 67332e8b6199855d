#include "cmabnas/ucb_kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace cmabnas::kernels {

namespace {

Isa resolve_isa() noexcept
{
    const Isa detected = detected_isa();
    if (const char* env = std::getenv("CMABNAS_ISA")) {
        const std::string_view want(env);
        if (want == "scalar") {
            return Isa::scalar;
        }
        if (want == "avx2" && detected == Isa::avx2) {
            return Isa::avx2;
        }
    }
    return detected;
}

} // namespace

std::string_view isa_name(Isa isa) noexcept
{
    switch (isa) {
    case Isa::avx2:
        return "avx2";
    case Isa::scalar:
        break;
    }
    return "scalar";
}

Isa detected_isa() noexcept
{
#if CMABNAS_HAVE_AVX2_KERNELS && (defined(__GNUC__) || defined(__clang__))
    if (__builtin_cpu_supports("avx2")) {
        return Isa::avx2;
    }
#endif
    return Isa::scalar;
}

Isa active_isa() noexcept
{
    static const Isa isa = resolve_isa();
    return isa;
}

std::size_t ucb_select(std::span<const std::uint32_t> plays, std::span<const double> rewards, double log_term,
                       double alpha)
{
#if CMABNAS_HAVE_AVX2_KERNELS
    if (active_isa() == Isa::avx2) {
        return avx2::ucb_select(plays, rewards, log_term, alpha);
    }
#endif
    return scalar::ucb_select(plays, rewards, log_term, alpha);
}

void arm_means(std::span<const std::uint32_t> plays, std::span<const double> rewards, std::span<double> out)
{
#if CMABNAS_HAVE_AVX2_KERNELS
    if (active_isa() == Isa::avx2) {
        avx2::arm_means(plays, rewards, out);
        return;
    }
#endif
    scalar::arm_means(plays, rewards, out);
}

} // namespace cmabnas::kernels
