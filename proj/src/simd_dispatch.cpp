#include "ncd/simd.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "ncd/error.hpp"
#include "simd_variants.hpp"

namespace ncd::simd {
namespace {

constexpr KernelTable kScalar{&scalar::dot, &scalar::squared_l2, &scalar::accumulate};
#if NCD_HAVE_AVX2_KERNELS
constexpr KernelTable kAvx2{&avx2::dot, &avx2::squared_l2, &avx2::accumulate};
#endif
#if NCD_HAVE_NEON_KERNELS
constexpr KernelTable kNeon{&neon::dot, &neon::squared_l2, &neon::accumulate};
#endif

Level initial_level() {
    const char* env = std::getenv("NCD_SIMD");
    if (env != nullptr) {
        const std::string want(env);
        if (want == "scalar") return Level::Scalar;
        if (want == "avx2" && is_supported(Level::Avx2)) return Level::Avx2;
        if (want == "neon" && is_supported(Level::Neon)) return Level::Neon;
    }
    return detected_level();
}

std::atomic<const KernelTable*>& active_table() {
    static std::atomic<const KernelTable*> table{&kernels(initial_level())};
    return table;
}

std::atomic<Level>& active() {
    static std::atomic<Level> level{initial_level()};
    return level;
}

}  // namespace

std::string_view to_string(Level level) noexcept {
    switch (level) {
        case Level::Scalar: return "scalar";
        case Level::Avx2: return "avx2";
        case Level::Neon: return "neon";
    }
    return "unknown";
}

bool is_supported(Level level) noexcept {
    switch (level) {
        case Level::Scalar: return true;
        case Level::Avx2:
#if NCD_HAVE_AVX2_KERNELS && (defined(__GNUC__) || defined(__clang__))
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Level::Neon: return NCD_HAVE_NEON_KERNELS != 0;
    }
    return false;
}

Level detected_level() noexcept {
    if (is_supported(Level::Avx2)) return Level::Avx2;
    if (is_supported(Level::Neon)) return Level::Neon;
    return Level::Scalar;
}

const KernelTable& kernels(Level level) {
    if (!is_supported(level)) {
        throw Error(ErrorCode::InvalidArgument,
                    "SIMD level " + std::string(to_string(level)) + " not available on this CPU");
    }
    switch (level) {
#if NCD_HAVE_AVX2_KERNELS
        case Level::Avx2: return kAvx2;
#endif
#if NCD_HAVE_NEON_KERNELS
        case Level::Neon: return kNeon;
#endif
        default: return kScalar;
    }
}

Level active_level() noexcept { return active().load(std::memory_order_relaxed); }

void set_active_level(Level level) {
    const KernelTable& table = kernels(level);
    active_table().store(&table, std::memory_order_relaxed);
    active().store(level, std::memory_order_relaxed);
}

double dot(std::span<const float> x, std::span<const float> y) {
    return active_table().load(std::memory_order_relaxed)->dot(x.data(), y.data(), x.size());
}

double squared_l2(std::span<const float> x, std::span<const float> y) {
    return active_table().load(std::memory_order_relaxed)->squared_l2(x.data(), y.data(), x.size());
}

void accumulate(std::span<double> acc, std::span<const float> x) {
    active_table().load(std::memory_order_relaxed)->accumulate(acc.data(), x.data(), x.size());
}

}  // namespace ncd::simd
