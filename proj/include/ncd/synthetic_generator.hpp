#pragma once

#include <cstdint>

#include "ncd/embedding_store.hpp"
#include "ncd/prototype_engine.hpp"

namespace ncd {

/// Gaussian-cluster embedding sets. Base classes get ids 0..n_base-1 and
/// novel classes n_base..n_base+n_novel_pool-1.
struct SynthConfig {
    std::uint32_t dim = 64;
    std::uint32_t n_base = 50;
    std::uint32_t n_novel_pool = 50;
    std::uint32_t train_per_class = 500;
    std::uint32_t test_per_class = 100;
    std::uint32_t pool_per_class = 100;
    double sigma = 0.1;
    double novel_offset = 0.0;
    std::uint64_t seed = 0;
};

void validate(const SynthConfig& config);

/// Minimum angle (radians) kept between each novel mean and every base
/// mean: (pi / 2) * offset / (1 + offset). Strictly increasing in offset.
double novel_margin(double novel_offset) noexcept;

/// Draw order from SplitMix64(seed):
///   1. base means: dim Gaussians each, normalised to the unit sphere;
///   2. novel means: unit directions redrawn (up to 10000 times each) until
///      at least novel_margin() away from every base mean, then scaled to
///      radius 1 + novel_offset;
///   3. samples: per base class its train rows then test rows, then per
///      novel class its pool rows; each is mean + sigma * N(0, I).
/// Throws RejectionFailure when a novel direction cannot be placed.
EmbeddingSet generate(const SynthConfig& config);

/// Bisection (in log sigma) for the sigma whose nearest-base accuracy on
/// BaseTest lies within `tolerance` of target_bcr. config.sigma is ignored.
double tune_sigma(double target_bcr, const SynthConfig& config, Metric metric = Metric::Cosine,
                  double tolerance = 0.02);

}  // namespace ncd
