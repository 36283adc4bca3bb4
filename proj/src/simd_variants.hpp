#pragma once

#include <cstddef>

#if defined(__x86_64__) || defined(_M_X64)
#define NCD_HAVE_AVX2_KERNELS 1
#else
#define NCD_HAVE_AVX2_KERNELS 0
#endif

#if defined(__aarch64__)
#define NCD_HAVE_NEON_KERNELS 1
#else
#define NCD_HAVE_NEON_KERNELS 0
#endif

namespace ncd::simd {

#if NCD_HAVE_AVX2_KERNELS
namespace avx2 {
double dot(const float* x, const float* y, std::size_t n);
double squared_l2(const float* x, const float* y, std::size_t n);
void accumulate(double* acc, const float* x, std::size_t n);
}  // namespace avx2
#endif

#if NCD_HAVE_NEON_KERNELS
namespace neon {
double dot(const float* x, const float* y, std::size_t n);
double squared_l2(const float* x, const float* y, std::size_t n);
void accumulate(double* acc, const float* x, std::size_t n);
}  // namespace neon
#endif

}  // namespace ncd::simd
