#include "ncd/forgetting_calibrator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "ncd/error.hpp"
#include "ncd/parallel.hpp"

namespace ncd {

std::size_t ForCurve::step_index(double alpha) const {
    if (thresholds.empty()) throw Error(ErrorCode::EmptySplit, "empty curve");
    const auto it = std::upper_bound(thresholds.begin(), thresholds.end(), alpha);
    if (it == thresholds.begin()) throw Error(ErrorCode::InvalidArgument, "alpha below the first threshold");
    return static_cast<std::size_t>(it - thresholds.begin()) - 1;
}

std::vector<BaseScore> score_base_samples(const RowView& base_rows, const PrototypeBank& base_bank, Metric metric,
                                          unsigned threads) {
    if (base_rows.empty()) throw Error(ErrorCode::EmptySplit, "no base samples to score");
    if (base_bank.empty()) throw Error(ErrorCode::EmptyBanks, "base bank is empty");
    if (base_rows.set->dim() != base_bank.dim()) {
        throw Error(ErrorCode::DimMismatch, "set dim " + std::to_string(base_rows.set->dim()) + ", bank dim " +
                                                std::to_string(base_bank.dim()));
    }
    for (std::size_t k = 0; k < base_rows.size(); ++k) {
        if (!is_base(base_rows.split(k))) {
            throw Error(ErrorCode::InvalidArgument, "calibration rows must come from base splits");
        }
        if (!base_bank.find(base_rows.label(k))) {
            throw Error(ErrorCode::MissingPrototype, "class " + std::to_string(base_rows.label(k)) +
                                                         " has no base prototype");
        }
    }
    std::vector<BaseScore> scores(base_rows.size());
    parallel_for(base_rows.size(), threads, [&](std::size_t k) {
        const Query q(base_rows.feature(k), metric);
        const Nearest n = q.nearest(base_bank);
        scores[k] = {n.distance, n.class_id == base_rows.label(k)};
    });
    return scores;
}

double nearest_base_accuracy(const RowView& base_rows, const PrototypeBank& base_bank, Metric metric) {
    const auto scores = score_base_samples(base_rows, base_bank, metric);
    const auto correct = std::count_if(scores.begin(), scores.end(), [](const BaseScore& s) { return s.correct; });
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double base_accuracy_under_ncd(const RowView& base_rows, const PrototypeBank& base_bank, double alpha, Metric metric) {
    validate(DecisionConfig{metric, alpha});
    const auto scores = score_base_samples(base_rows, base_bank, metric);
    const auto kept = std::count_if(scores.begin(), scores.end(),
                                    [&](const BaseScore& s) { return s.correct && !(s.min_base_dist > alpha); });
    return static_cast<double>(kept) / static_cast<double>(scores.size());
}

ForCurve curve_from_scores(std::span<const BaseScore> scores, Metric metric) {
    if (scores.empty()) throw Error(ErrorCode::EmptySplit, "no base samples");
    std::vector<BaseScore> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const BaseScore& a, const BaseScore& b) { return a.min_base_dist < b.min_base_dist; });

    ForCurve curve;
    curve.metric = metric;
    curve.n_samples = sorted.size();
    const double n = static_cast<double>(sorted.size());
    const auto correct_total = static_cast<std::size_t>(
        std::count_if(sorted.begin(), sorted.end(), [](const BaseScore& s) { return s.correct; }));
    curve.bcr = static_cast<double>(correct_total) / n;

    std::vector<double> candidates{0.0};
    for (const auto& s : sorted) {
        if (s.min_base_dist > candidates.back()) candidates.push_back(s.min_base_dist);
    }
    const double bound = max_distance(metric);
    if (std::isfinite(bound) && bound > candidates.back()) candidates.push_back(bound);

    // A sample stays on the base branch at alpha iff min_base_dist <= alpha.
    std::size_t accepted = 0;
    std::size_t correct_accepted = 0;
    for (double t : candidates) {
        while (accepted < sorted.size() && sorted[accepted].min_base_dist <= t) {
            if (sorted[accepted].correct) ++correct_accepted;
            ++accepted;
        }
        curve.thresholds.push_back(t);
        curve.base_acc_at.push_back(static_cast<double>(correct_accepted) / n);
        curve.for_at.push_back(static_cast<double>(correct_total - correct_accepted) / n);
        curve.novel_route_rate_at.push_back(static_cast<double>(sorted.size() - accepted) / n);
    }
    return curve;
}

ForCurve build_for_curve(const RowView& base_rows, const PrototypeBank& base_bank, Metric metric, unsigned threads) {
    const auto scores = score_base_samples(base_rows, base_bank, metric, threads);
    return curve_from_scores(scores, metric);
}

CalibrationResult calibrate_alpha(const ForCurve& curve, double budget) {
    if (!(budget >= 0.0 && budget <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "budget must lie in [0, 1], got " + std::to_string(budget));
    }
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (curve.for_at[i] <= budget) {
            return {curve.thresholds[i], curve.for_at[i], budget, curve.n_samples};
        }
    }
    throw Error(ErrorCode::InfeasibleBudget, "no threshold meets budget " + std::to_string(budget));
}

OodRates ood_rates(const RowView& base_rows, const RowView& novel_queries, const PrototypeBank& base_bank, double alpha,
                   Metric metric) {
    validate(DecisionConfig{metric, alpha});
    if (base_rows.empty() || novel_queries.empty()) throw Error(ErrorCode::EmptySplit, "OOD rates need both sets");
    if (base_bank.empty()) throw Error(ErrorCode::EmptyBanks, "base bank is empty");
    auto routed_fraction = [&](const RowView& rows) {
        std::size_t routed = 0;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (rows.set->dim() != base_bank.dim()) throw Error(ErrorCode::DimMismatch, "query dim");
            const Query q(rows.feature(k), metric);
            if (q.nearest(base_bank).distance > alpha) ++routed;
        }
        return static_cast<double>(routed) / static_cast<double>(rows.size());
    };
    return {routed_fraction(base_rows), routed_fraction(novel_queries)};
}

void write_curve_csv(const ForCurve& curve, std::ostream& out) {
    out << "alpha,base_acc,for,novel_route_rate\n";
    char line[160];
    for (std::size_t i = 0; i < curve.size(); ++i) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", curve.thresholds[i], curve.base_acc_at[i],
                      curve.for_at[i], curve.novel_route_rate_at[i]);
        out << line;
    }
}

}  // namespace ncd
