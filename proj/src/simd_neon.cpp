#include "simd_variants.hpp"

#if NCD_HAVE_NEON_KERNELS

#include <arm_neon.h>

namespace ncd::simd::neon {
namespace {

// Lane pairs: a = (0,1), b = (2,3), c = (4,5), d = (6,7).
struct Lanes {
    float64x2_t a = vdupq_n_f64(0.0);
    float64x2_t b = vdupq_n_f64(0.0);
    float64x2_t c = vdupq_n_f64(0.0);
    float64x2_t d = vdupq_n_f64(0.0);
};

inline float32x4x2_t load8(const float* x, std::size_t n) {
    if (n >= 8) return {vld1q_f32(x), vld1q_f32(x + 4)};
    float buf[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) buf[i] = x[i];
    return {vld1q_f32(buf), vld1q_f32(buf + 4)};
}

inline double fold(const Lanes& l) {
    const float64x2_t s01 = vaddq_f64(l.a, l.c);
    const float64x2_t s23 = vaddq_f64(l.b, l.d);
    const float64x2_t t = vaddq_f64(s01, s23);
    return vgetq_lane_f64(t, 0) + vgetq_lane_f64(t, 1);
}

template <bool Diff>
inline void step(float32x4x2_t vx, float32x4x2_t vy, Lanes& l) {
    auto term = [](float32x2_t x, float32x2_t y) {
        const float64x2_t dx = vcvt_f64_f32(x);
        const float64x2_t dy = vcvt_f64_f32(y);
        if constexpr (Diff) {
            const float64x2_t d = vsubq_f64(dx, dy);
            return vmulq_f64(d, d);
        } else {
            return vmulq_f64(dx, dy);
        }
    };
    l.a = vaddq_f64(l.a, term(vget_low_f32(vx.val[0]), vget_low_f32(vy.val[0])));
    l.b = vaddq_f64(l.b, term(vget_high_f32(vx.val[0]), vget_high_f32(vy.val[0])));
    l.c = vaddq_f64(l.c, term(vget_low_f32(vx.val[1]), vget_low_f32(vy.val[1])));
    l.d = vaddq_f64(l.d, term(vget_high_f32(vx.val[1]), vget_high_f32(vy.val[1])));
}

template <bool Diff>
double reduce(const float* x, const float* y, std::size_t n) {
    Lanes l;
    for (std::size_t i = 0; i < n; i += 8) step<Diff>(load8(x + i, n - i), load8(y + i, n - i), l);
    return fold(l);
}

}  // namespace

double dot(const float* x, const float* y, std::size_t n) { return reduce<false>(x, y, n); }

double squared_l2(const float* x, const float* y, std::size_t n) { return reduce<true>(x, y, n); }

void accumulate(double* acc, const float* x, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t v = vcvt_f64_f32(vld1_f32(x + i));
        vst1q_f64(acc + i, vaddq_f64(vld1q_f64(acc + i), v));
    }
    for (; i < n; ++i) acc[i] += static_cast<double>(x[i]);
}

}  // namespace ncd::simd::neon

#endif
