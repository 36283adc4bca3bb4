#include "ncd/simd.hpp"

namespace ncd::simd::scalar {
namespace {

constexpr std::size_t kLanes = 8;

inline double fold(const double (&lane)[kLanes]) {
    const double s0 = lane[0] + lane[4];
    const double s1 = lane[1] + lane[5];
    const double s2 = lane[2] + lane[6];
    const double s3 = lane[3] + lane[7];
    return (s0 + s2) + (s1 + s3);
}

}  // namespace

double dot(const float* x, const float* y, std::size_t n) {
    double lane[kLanes] = {};
    for (std::size_t base = 0; base < n; base += kLanes) {
        for (std::size_t j = 0; j < kLanes; ++j) {
            const std::size_t i = base + j;
            const double p = i < n ? static_cast<double>(x[i]) * static_cast<double>(y[i]) : 0.0;
            lane[j] += p;
        }
    }
    return fold(lane);
}

double squared_l2(const float* x, const float* y, std::size_t n) {
    double lane[kLanes] = {};
    for (std::size_t base = 0; base < n; base += kLanes) {
        for (std::size_t j = 0; j < kLanes; ++j) {
            const std::size_t i = base + j;
            const double diff = i < n ? static_cast<double>(x[i]) - static_cast<double>(y[i]) : 0.0;
            lane[j] += diff * diff;
        }
    }
    return fold(lane);
}

void accumulate(double* acc, const float* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += static_cast<double>(x[i]);
}

}  // namespace ncd::simd::scalar
