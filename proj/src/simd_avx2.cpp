// Compiled with -mavx2; only entered after a runtime CPU check.
#include "simd_variants.hpp"

#if NCD_HAVE_AVX2_KERNELS

#include <immintrin.h>

namespace ncd::simd::avx2 {
namespace {

// Loads 0 <= n < 8 floats, zero-filling the rest.
inline __m256 masked_load(const float* x, std::size_t n) {
    alignas(32) float buf[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) buf[i] = x[i];
    return _mm256_load_ps(buf);
}

inline double fold(__m256d lo, __m256d hi) {
    const __m256d s = _mm256_add_pd(lo, hi);  // s0..s3
    const __m128d t = _mm_add_pd(_mm256_castpd256_pd128(s), _mm256_extractf128_pd(s, 1));
    return _mm_cvtsd_f64(t) + _mm_cvtsd_f64(_mm_unpackhi_pd(t, t));
}

inline void dot_step(__m256 vx, __m256 vy, __m256d& lo, __m256d& hi) {
    const __m256d xl = _mm256_cvtps_pd(_mm256_castps256_ps128(vx));
    const __m256d xh = _mm256_cvtps_pd(_mm256_extractf128_ps(vx, 1));
    const __m256d yl = _mm256_cvtps_pd(_mm256_castps256_ps128(vy));
    const __m256d yh = _mm256_cvtps_pd(_mm256_extractf128_ps(vy, 1));
    lo = _mm256_add_pd(lo, _mm256_mul_pd(xl, yl));
    hi = _mm256_add_pd(hi, _mm256_mul_pd(xh, yh));
}

inline void l2_step(__m256 vx, __m256 vy, __m256d& lo, __m256d& hi) {
    const __m256d dl = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(vx)),
                                     _mm256_cvtps_pd(_mm256_castps256_ps128(vy)));
    const __m256d dh = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(vx, 1)),
                                     _mm256_cvtps_pd(_mm256_extractf128_ps(vy, 1)));
    lo = _mm256_add_pd(lo, _mm256_mul_pd(dl, dl));
    hi = _mm256_add_pd(hi, _mm256_mul_pd(dh, dh));
}

}  // namespace

double dot(const float* x, const float* y, std::size_t n) {
    __m256d lo = _mm256_setzero_pd();
    __m256d hi = _mm256_setzero_pd();
    while (n >= 8) {
        dot_step(_mm256_loadu_ps(x), _mm256_loadu_ps(y), lo, hi);
        x += 8;
        y += 8;
        n -= 8;
    }
    if (n > 0) dot_step(masked_load(x, n), masked_load(y, n), lo, hi);
    return fold(lo, hi);
}

double squared_l2(const float* x, const float* y, std::size_t n) {
    __m256d lo = _mm256_setzero_pd();
    __m256d hi = _mm256_setzero_pd();
    while (n >= 8) {
        l2_step(_mm256_loadu_ps(x), _mm256_loadu_ps(y), lo, hi);
        x += 8;
        y += 8;
        n -= 8;
    }
    if (n > 0) l2_step(masked_load(x, n), masked_load(y, n), lo, hi);
    return fold(lo, hi);
}

void accumulate(double* acc, const float* x, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
        _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), v));
    }
    for (; i < n; ++i) acc[i] += static_cast<double>(x[i]);
}

}  // namespace ncd::simd::avx2

#endif
