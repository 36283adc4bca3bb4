#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "ncd/embedding_store.hpp"
#include "ncd/prototype_engine.hpp"

namespace ncd {

/// What the calibrator needs to know about one base-class sample.
struct BaseScore {
    double min_base_dist = 0.0;
    /// Nearest base prototype is the true class.
    bool correct = false;
};

/// Base accuracy, forgetting and novel-routing rate as step functions of
/// alpha. Values change only at the stored thresholds; between consecutive
/// thresholds the value at the lower one holds.
///
/// FOR is stored as (baseline-correct minus accepted-correct) / n rather
/// than bcr - base_acc so that budget comparisons are exact.
struct ForCurve {
    std::vector<double> thresholds;
    std::vector<double> base_acc_at;
    std::vector<double> for_at;
    std::vector<double> novel_route_rate_at;
    double bcr = 0.0;
    std::size_t n_samples = 0;
    Metric metric = Metric::Cosine;

    std::size_t size() const noexcept { return thresholds.size(); }
    /// Index of the step containing alpha (largest threshold <= alpha).
    std::size_t step_index(double alpha) const;
    double base_acc(double alpha) const { return base_acc_at[step_index(alpha)]; }
    double forgetting(double alpha) const { return for_at[step_index(alpha)]; }
    double novel_route_rate(double alpha) const { return novel_route_rate_at[step_index(alpha)]; }
};

struct CalibrationResult {
    double alpha_star = 0.0;
    double achieved_for = 0.0;
    double budget = 0.0;
    std::size_t n_calibration_samples = 0;

    bool operator==(const CalibrationResult&) const = default;
};

struct OodRates {
    double fpr = 0.0;  // base samples routed novel
    double tpr = 0.0;  // novel queries routed novel

    bool operator==(const OodRates&) const = default;
};

/// Min base distance and nearest-base correctness for each row. Rows must
/// be base-class rows whose class has a prototype in `base_bank`.
std::vector<BaseScore> score_base_samples(const RowView& base_rows, const PrototypeBank& base_bank, Metric metric,
                                          unsigned threads = 1);

/// Nearest-base-prototype accuracy, the BCR reference.
double nearest_base_accuracy(const RowView& base_rows, const PrototypeBank& base_bank, Metric metric);

/// Fraction of samples both kept on the base branch at alpha and correctly
/// classified there. Needs no novel data.
double base_accuracy_under_ncd(const RowView& base_rows, const PrototypeBank& base_bank, double alpha, Metric metric);

ForCurve build_for_curve(const RowView& base_rows, const PrototypeBank& base_bank, Metric metric, unsigned threads = 1);
ForCurve curve_from_scores(std::span<const BaseScore> scores, Metric metric);

/// Smallest candidate alpha with FOR <= budget.
CalibrationResult calibrate_alpha(const ForCurve& curve, double budget);

OodRates ood_rates(const RowView& base_rows, const RowView& novel_queries, const PrototypeBank& base_bank, double alpha,
                   Metric metric);

/// Writes `alpha,base_acc,for,novel_route_rate` rows with round-trip precision.
void write_curve_csv(const ForCurve& curve, std::ostream& out);

}  // namespace ncd
