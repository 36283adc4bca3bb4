#pragma once

// Distance kernels over float32 feature vectors with float64 accumulation.
//
// Every variant uses the same reduction order so results are bit-identical
// across instruction sets: element i is accumulated into lane (i mod 8),
// missing tail elements count as +0.0, and the eight lanes are folded as
//
//     s[j] = lane[j] + lane[j + 4]      (j = 0..3)
//     result = (s[0] + s[2]) + (s[1] + s[3])
//
// Products of two float32 values are exact in float64, so fused and
// unfused multiply-add give the same dot product. Squared differences are
// not exact, so kernels must be built with -ffp-contract=off.

#include <cstddef>
#include <span>
#include <string_view>

namespace ncd::simd {

enum class Level { Scalar, Avx2, Neon };

std::string_view to_string(Level level) noexcept;

struct KernelTable {
    double (*dot)(const float* x, const float* y, std::size_t n);
    double (*squared_l2)(const float* x, const float* y, std::size_t n);
    /// acc[i] += x[i] for i < n.
    void (*accumulate)(double* acc, const float* x, std::size_t n);
};

/// Best level supported by the running CPU.
Level detected_level() noexcept;

/// Level currently used by the dispatching entry points. Initialised from
/// detected_level(), or from NCD_SIMD=scalar|avx2|neon when set.
Level active_level() noexcept;

/// Throws ncd::Error(InvalidArgument) if the CPU or build lacks `level`.
void set_active_level(Level level);

bool is_supported(Level level) noexcept;

/// Kernel table for a specific level. Throws if unsupported.
const KernelTable& kernels(Level level);

namespace scalar {
double dot(const float* x, const float* y, std::size_t n);
double squared_l2(const float* x, const float* y, std::size_t n);
void accumulate(double* acc, const float* x, std::size_t n);
}  // namespace scalar

double dot(std::span<const float> x, std::span<const float> y);
double squared_l2(std::span<const float> x, std::span<const float> y);
void accumulate(std::span<double> acc, std::span<const float> x);

}  // namespace ncd::simd
