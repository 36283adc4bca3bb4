#include "ncd/synthetic_generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "ncd/error.hpp"
#include "ncd/forgetting_calibrator.hpp"
#include "ncd/rng.hpp"

namespace ncd {
namespace {

constexpr int kMaxPlacementAttempts = 10000;

std::vector<double> unit_direction(std::uint32_t dim, SplitMix64& rng) {
    std::vector<double> v(dim);
    for (;;) {
        double norm2 = 0.0;
        for (auto& x : v) {
            x = rng.gaussian();
            norm2 += x * x;
        }
        if (norm2 > 0.0) {
            const double inv = 1.0 / std::sqrt(norm2);
            for (auto& x : v) x *= inv;
            return v;
        }
    }
}

double angle_between_units(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return std::acos(std::clamp(dot, -1.0, 1.0));
}

}  // namespace

void validate(const SynthConfig& c) {
    if (c.dim == 0 || c.n_base == 0 || c.n_novel_pool == 0 || c.train_per_class == 0 || c.test_per_class == 0 ||
        c.pool_per_class == 0) {
        throw Error(ErrorCode::InvalidArgument, "synthetic config counts must all be at least 1");
    }
    if (!(c.sigma > 0.0) || !std::isfinite(c.sigma)) throw Error(ErrorCode::InvalidArgument, "sigma must be > 0");
    if (!(c.novel_offset >= 0.0) || !std::isfinite(c.novel_offset)) {
        throw Error(ErrorCode::InvalidArgument, "novel_offset must be >= 0");
    }
}

double novel_margin(double novel_offset) noexcept {
    return std::numbers::pi / 2.0 * novel_offset / (1.0 + novel_offset);
}

EmbeddingSet generate(const SynthConfig& config) {
    validate(config);
    SplitMix64 rng(config.seed);
    const std::uint32_t dim = config.dim;

    std::vector<std::vector<double>> base_means;
    base_means.reserve(config.n_base);
    for (std::uint32_t c = 0; c < config.n_base; ++c) base_means.push_back(unit_direction(dim, rng));

    const double margin = novel_margin(config.novel_offset);
    std::vector<std::vector<double>> novel_means;
    novel_means.reserve(config.n_novel_pool);
    for (std::uint32_t c = 0; c < config.n_novel_pool; ++c) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
            auto dir = unit_direction(dim, rng);
            bool ok = true;
            if (config.novel_offset > 0.0) {
                for (const auto& b : base_means) {
                    if (angle_between_units(dir, b) < margin) {
                        ok = false;
                        break;
                    }
                }
            }
            if (ok) {
                for (auto& x : dir) x *= 1.0 + config.novel_offset;
                novel_means.push_back(std::move(dir));
                placed = true;
            }
        }
        if (!placed) {
            throw Error(ErrorCode::RejectionFailure,
                        "could not place novel mean " + std::to_string(c) + " at margin " + std::to_string(margin) +
                            " rad from " + std::to_string(config.n_base) + " base means in " + std::to_string(dim) +
                            " dims");
        }
    }

    const std::size_t total = std::size_t{config.n_base} * (config.train_per_class + config.test_per_class) +
                              std::size_t{config.n_novel_pool} * config.pool_per_class;
    std::vector<RecordTag> records;
    std::vector<float> features;
    records.reserve(total);
    features.reserve(total * dim);
    auto emit = [&](ClassId id, Split split, const std::vector<double>& mean, std::uint32_t count) {
        for (std::uint32_t s = 0; s < count; ++s) {
            records.push_back({id, split});
            for (std::uint32_t k = 0; k < dim; ++k) {
                features.push_back(static_cast<float>(mean[k] + config.sigma * rng.gaussian()));
            }
        }
    };
    for (std::uint32_t c = 0; c < config.n_base; ++c) {
        emit(c, Split::BaseTrain, base_means[c], config.train_per_class);
        emit(c, Split::BaseTest, base_means[c], config.test_per_class);
    }
    for (std::uint32_t c = 0; c < config.n_novel_pool; ++c) {
        emit(config.n_base + c, Split::NovelPool, novel_means[c], config.pool_per_class);
    }
    return EmbeddingSet(dim, std::move(records), std::move(features));
}

double tune_sigma(double target_bcr, const SynthConfig& config, Metric metric, double tolerance) {
    if (!(target_bcr > 0.0 && target_bcr < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "target BCR must lie in (0, 1)");
    }
    auto bcr_at = [&](double sigma) {
        SynthConfig c = config;
        c.sigma = sigma;
        const EmbeddingSet set = generate(c);
        const PrototypeBank bank = compute_prototypes(set, Split::BaseTrain, BankKind::Base);
        return nearest_base_accuracy(select(set, Split::BaseTest), bank, metric);
    };

    double lo = 1e-4;
    const double bcr_lo = bcr_at(lo);
    if (std::abs(bcr_lo - target_bcr) <= tolerance) return lo;
    if (bcr_lo < target_bcr) {
        throw Error(ErrorCode::NoConvergence, "BCR " + std::to_string(bcr_lo) + " at the smallest sigma is below target");
    }
    double hi = 1.0;
    int doublings = 0;
    for (double b = bcr_at(hi); b >= target_bcr; b = bcr_at(hi)) {
        if (std::abs(b - target_bcr) <= tolerance) return hi;
        lo = hi;
        hi *= 2.0;
        if (++doublings > 30) throw Error(ErrorCode::NoConvergence, "BCR never drops below target");
    }
    for (int it = 0; it < 60; ++it) {
        const double mid = std::sqrt(lo * hi);
        const double b = bcr_at(mid);
        if (std::abs(b - target_bcr) <= tolerance) return mid;
        (b > target_bcr ? lo : hi) = mid;
    }
    throw Error(ErrorCode::NoConvergence, "sigma bisection did not reach the target BCR");
}

}  // namespace ncd
