#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ncd/embedding_store.hpp"
#include "ncd/forgetting_calibrator.hpp"
#include "ncd/prototype_engine.hpp"

namespace ncd {

struct EpisodeSpec {
    std::uint32_t n_novel = 1;  // N1
    std::uint32_t shots = 1;    // K
    std::uint64_t seed = 0;
    /// nullopt: every non-support pool record of a sampled class is a query.
    std::optional<std::uint32_t> query_per_class;
};

struct EpisodeRow {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::vector<ClassId> classes;          // in draw order
    std::vector<std::size_t> support_rows;  // grouped by class, draw order
    std::size_t n_queries = 0;
    double v_ncr = 0.0;
    std::vector<double> ncr;               // one per alpha
    std::vector<double> novel_route_rate;  // one per alpha (OOD detection rate)

    bool operator==(const EpisodeRow&) const = default;
};

/// Sampled support and query rows for one episode.
struct EpisodeDraw {
    std::vector<ClassId> classes;
    std::vector<std::size_t> support_rows;
    std::vector<std::size_t> query_rows;  // ascending
};

/// Throws InfeasibleSpec unless every novel-pool class can supply
/// shots + max(1, query_per_class) records and n_novel classes exist.
void check_feasible(const EmbeddingSet& set, const EpisodeSpec& spec);

/// Classes: partial Fisher-Yates over the ascending novel class list.
/// Then for each drawn class in draw order: partial Fisher-Yates over its
/// ascending pool rows for the K shots; with query_per_class set, a second
/// partial Fisher-Yates over the remainder picks the queries. All draws
/// come from one SplitMix64 stream seeded with spec.seed.
EpisodeDraw draw_episode(const EmbeddingSet& set, const EpisodeSpec& spec);

EpisodeRow run_episode(const EmbeddingSet& set, const PrototypeBank& base_bank, const EpisodeSpec& spec,
                       std::span<const double> alphas, Metric metric);

struct Aggregate {
    double mean = 0.0;
    double std = 0.0;  // sample std, 0 for a single episode
    double min = 0.0;
    double max = 0.0;

    bool operator==(const Aggregate&) const = default;
};

Aggregate aggregate(std::span<const double> values);

struct EvalConfig {
    std::size_t episodes = 25;
    std::uint32_t n_novel = 1;
    std::uint32_t shots = 1;
    std::optional<std::uint32_t> query_per_class;
    std::vector<double> budgets{0.02, 0.05};
    /// Extra operating points evaluated at a given alpha instead of a budget.
    std::vector<double> fixed_alphas;
    Metric metric = Metric::Cosine;
    std::uint64_t master_seed = 0;
    unsigned threads = 1;
    /// Fraction of BaseTest held out for calibration; 0 calibrates and
    /// reports on the whole BaseTest split.
    double calibration_fraction = 0.0;
};

struct BudgetResult {
    double budget = 0.0;
    std::string label;  // e.g. NCR@2FOR
    CalibrationResult calibration;
    double reporting_for = 0.0;  // FOR measured on the reporting split at alpha_star
    Aggregate ncr;
    OodRates ood;  // fpr on the reporting split, tpr averaged over episodes

    bool operator==(const BudgetResult&) const = default;
};

struct AlphaResult {
    double alpha = 0.0;
    double reporting_for = 0.0;
    Aggregate ncr;
    OodRates ood;

    bool operator==(const AlphaResult&) const = default;
};

struct Protocol {
    std::uint32_t n_novel = 0;
    std::uint32_t shots = 0;
    std::optional<std::uint32_t> query_per_class;
    std::size_t episodes = 0;
    Metric metric = Metric::Cosine;
    std::uint64_t master_seed = 0;
    std::uint64_t dataset_fingerprint = 0;
    double calibration_fraction = 0.0;
    std::size_t n_base_classes = 0;
    std::size_t n_calibration_samples = 0;
    std::size_t n_reporting_samples = 0;

    bool operator==(const Protocol&) const = default;
};

struct EvalReport {
    double bcr = 0.0;
    Aggregate v_ncr;
    std::vector<BudgetResult> ncr_at_budget;
    std::vector<AlphaResult> ncr_at_alpha;
    std::vector<EpisodeRow> per_episode;
    Protocol protocol;

    bool operator==(const EvalReport&) const = default;
};

/// "NCR@2FOR" for 0.02, "NCR@0.5FOR" for 0.005.
std::string budget_label(double budget);

/// Calibrates one alpha per budget from base data only, then runs the
/// episodes. Episode i uses seed derive_seed(master_seed, i).
EvalReport run_evaluation(const EmbeddingSet& set, const EvalConfig& config);

enum class SweepAxis { N1, K, Alpha };

std::string_view to_string(SweepAxis axis) noexcept;
std::optional<SweepAxis> parse_sweep_axis(std::string_view text) noexcept;

struct SweepResult {
    double value = 0.0;
    EvalReport report;
};

/// One evaluation per value with the same master seed (paired episodes).
/// N1 and K values must be positive integers. The alpha axis appends the
/// value to the fixed alphas.
std::vector<SweepResult> run_sweep(const EmbeddingSet& set, SweepAxis axis, std::span<const double> values,
                                   const EvalConfig& base);

}  // namespace ncd
