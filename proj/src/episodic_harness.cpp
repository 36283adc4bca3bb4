#include "ncd/episodic_harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

#include "ncd/error.hpp"
#include "ncd/parallel.hpp"
#include "ncd/rng.hpp"

namespace ncd {

void check_feasible(const EmbeddingSet& set, const EpisodeSpec& spec) {
    if (spec.n_novel == 0) throw Error(ErrorCode::InfeasibleSpec, "n_novel must be at least 1");
    if (spec.shots == 0) throw Error(ErrorCode::InfeasibleSpec, "shots must be at least 1");
    if (spec.query_per_class && *spec.query_per_class == 0) {
        throw Error(ErrorCode::InfeasibleSpec, "query_per_class must be at least 1");
    }
    const auto classes = set.classes(Split::NovelPool);
    if (spec.n_novel > classes.size()) {
        throw Error(ErrorCode::InfeasibleSpec, "n_novel " + std::to_string(spec.n_novel) + " exceeds the " +
                                                   std::to_string(classes.size()) + " novel classes in the pool");
    }
    const std::size_t demand = std::size_t{spec.shots} + spec.query_per_class.value_or(1);
    for (ClassId id : classes) {
        const std::size_t have = set.rows(Split::NovelPool, id).size();
        if (have < demand) {
            throw Error(ErrorCode::InfeasibleSpec, "novel class " + std::to_string(id) + " has " +
                                                       std::to_string(have) + " records, episode needs " +
                                                       std::to_string(demand));
        }
    }
}

EpisodeDraw draw_episode(const EmbeddingSet& set, const EpisodeSpec& spec) {
    check_feasible(set, spec);
    SplitMix64 rng(spec.seed);
    EpisodeDraw draw;
    auto classes = set.classes(Split::NovelPool);
    partial_shuffle(classes, spec.n_novel, rng);
    draw.classes.assign(classes.begin(), classes.begin() + spec.n_novel);

    for (ClassId id : draw.classes) {
        auto rows = set.rows(Split::NovelPool, id);
        partial_shuffle(rows, spec.shots, rng);
        draw.support_rows.insert(draw.support_rows.end(), rows.begin(), rows.begin() + spec.shots);
        std::vector<std::size_t> rest(rows.begin() + spec.shots, rows.end());
        if (spec.query_per_class) {
            std::sort(rest.begin(), rest.end());
            partial_shuffle(rest, *spec.query_per_class, rng);
            rest.resize(*spec.query_per_class);
        }
        draw.query_rows.insert(draw.query_rows.end(), rest.begin(), rest.end());
    }
    std::sort(draw.query_rows.begin(), draw.query_rows.end());
    return draw;
}

EpisodeRow run_episode(const EmbeddingSet& set, const PrototypeBank& base_bank, const EpisodeSpec& spec,
                       std::span<const double> alphas, Metric metric) {
    if (base_bank.empty()) throw Error(ErrorCode::EmptyBanks, "base bank is empty");
    if (base_bank.dim() != set.dim()) throw Error(ErrorCode::DimMismatch, "base bank dim differs from set dim");
    for (double a : alphas) validate(DecisionConfig{metric, a});

    const EpisodeDraw draw = draw_episode(set, spec);
    if (draw.query_rows.empty()) throw Error(ErrorCode::EmptyQuerySet, "episode has no queries");
    const PrototypeBank novel_bank = compute_prototypes(set, draw.support_rows, BankKind::Novel);

    EpisodeRow row;
    row.seed = spec.seed;
    row.classes = draw.classes;
    row.support_rows = draw.support_rows;
    row.n_queries = draw.query_rows.size();

    std::size_t vanilla_correct = 0;
    std::vector<std::size_t> ncd_correct(alphas.size(), 0);
    std::vector<std::size_t> routed(alphas.size(), 0);
    for (std::size_t r : draw.query_rows) {
        const ClassId truth = set.record(r).class_id;
        const Query q(set.feature(r), metric);
        const Nearest nb = q.nearest(base_bank);
        const Nearest nn = q.nearest(novel_bank);

        // Union argmin with lowest-id tie breaking.
        const bool vanilla_novel =
            nn.distance < nb.distance || (nn.distance == nb.distance && nn.class_id < nb.class_id);
        if ((vanilla_novel ? nn.class_id : nb.class_id) == truth) ++vanilla_correct;

        for (std::size_t a = 0; a < alphas.size(); ++a) {
            const bool to_novel = nb.distance > alphas[a];
            if (to_novel) ++routed[a];
            if ((to_novel ? nn.class_id : nb.class_id) == truth) ++ncd_correct[a];
        }
    }
    const double n = static_cast<double>(row.n_queries);
    row.v_ncr = static_cast<double>(vanilla_correct) / n;
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        row.ncr.push_back(static_cast<double>(ncd_correct[a]) / n);
        row.novel_route_rate.push_back(static_cast<double>(routed[a]) / n);
    }
    return row;
}

Aggregate aggregate(std::span<const double> values) {
    Aggregate out;
    if (values.empty()) return out;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    out.min = *lo;
    out.max = *hi;
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    out.mean = std::clamp(mean, out.min, out.max);
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        out.std = std::sqrt(ss / (n - 1.0));
    }
    return out;
}

std::string budget_label(double budget) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "NCR@%gFOR", budget * 100.0);
    return buf;
}

namespace {

struct BaseSplits {
    RowView calibration;
    RowView reporting;
};

BaseSplits split_base_test(const EmbeddingSet& set, const EvalConfig& config) {
    RowView all = select(set, Split::BaseTest);
    if (all.empty()) throw Error(ErrorCode::EmptySplit, "no base_test records");
    const double f = config.calibration_fraction;
    if (!(f >= 0.0 && f < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "calibration_fraction must lie in [0, 1)");
    }
    if (f == 0.0) return {all, all};

    // Held-out calibration rows: a seeded shuffle of BaseTest, first part calibrates.
    SplitMix64 rng(derive_seed(config.master_seed ^ 0x63616c6962726174ULL, 0));
    auto rows = all.rows;
    partial_shuffle(rows, rows.size(), rng);
    const auto n_cal = static_cast<std::size_t>(std::llround(f * static_cast<double>(rows.size())));
    if (n_cal == 0 || n_cal == rows.size()) {
        throw Error(ErrorCode::InfeasibleSpec, "calibration_fraction leaves an empty calibration or reporting split");
    }
    std::vector<std::size_t> cal(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_cal));
    std::vector<std::size_t> rep(rows.begin() + static_cast<std::ptrdiff_t>(n_cal), rows.end());
    std::sort(cal.begin(), cal.end());
    std::sort(rep.begin(), rep.end());
    return {RowView{&set, std::move(cal)}, RowView{&set, std::move(rep)}};
}

}  // namespace

EvalReport run_evaluation(const EmbeddingSet& set, const EvalConfig& config) {
    if (config.episodes == 0) throw Error(ErrorCode::InvalidArgument, "episodes must be at least 1");
    for (double b : config.budgets) {
        if (!(b >= 0.0 && b <= 1.0)) throw Error(ErrorCode::InvalidArgument, "budget outside [0, 1]");
    }
    const EpisodeSpec template_spec{config.n_novel, config.shots, 0, config.query_per_class};
    check_feasible(set, template_spec);

    const PrototypeBank base_bank = compute_prototypes(set, Split::BaseTrain, BankKind::Base);
    if (base_bank.empty()) throw Error(ErrorCode::EmptySplit, "no base_train records");
    const BaseSplits splits = split_base_test(set, config);

    // Everything up to the alphas uses base data only.
    const ForCurve cal_curve = build_for_curve(splits.calibration, base_bank, config.metric, config.threads);
    const ForCurve rep_curve = splits.calibration.rows == splits.reporting.rows
                                   ? cal_curve
                                   : build_for_curve(splits.reporting, base_bank, config.metric, config.threads);

    EvalReport report;
    report.bcr = rep_curve.bcr;
    std::vector<double> alphas;
    for (double b : config.budgets) {
        BudgetResult br;
        br.budget = b;
        br.label = budget_label(b);
        br.calibration = calibrate_alpha(cal_curve, b);
        br.reporting_for = rep_curve.forgetting(br.calibration.alpha_star);
        br.ood.fpr = rep_curve.novel_route_rate(br.calibration.alpha_star);
        alphas.push_back(br.calibration.alpha_star);
        report.ncr_at_budget.push_back(std::move(br));
    }
    for (double a : config.fixed_alphas) {
        validate(DecisionConfig{config.metric, a});
        AlphaResult ar;
        ar.alpha = a;
        ar.reporting_for = rep_curve.forgetting(a);
        ar.ood.fpr = rep_curve.novel_route_rate(a);
        alphas.push_back(a);
        report.ncr_at_alpha.push_back(ar);
    }

    report.per_episode.resize(config.episodes);
    parallel_for(config.episodes, config.threads, [&](std::size_t i) {
        EpisodeSpec spec = template_spec;
        spec.seed = derive_seed(config.master_seed, i);
        report.per_episode[i] = run_episode(set, base_bank, spec, alphas, config.metric);
        report.per_episode[i].index = i;
    });

    auto column = [&](auto pick) {
        std::vector<double> v;
        v.reserve(report.per_episode.size());
        for (const auto& row : report.per_episode) v.push_back(pick(row));
        return v;
    };
    const auto v_ncr = column([](const EpisodeRow& r) { return r.v_ncr; });
    report.v_ncr = aggregate(v_ncr);
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        const auto ncr = column([a](const EpisodeRow& r) { return r.ncr[a]; });
        const auto tpr = column([a](const EpisodeRow& r) { return r.novel_route_rate[a]; });
        const Aggregate ncr_agg = aggregate(ncr);
        const double tpr_mean = aggregate(tpr).mean;
        if (a < config.budgets.size()) {
            report.ncr_at_budget[a].ncr = ncr_agg;
            report.ncr_at_budget[a].ood.tpr = tpr_mean;
        } else {
            auto& ar = report.ncr_at_alpha[a - config.budgets.size()];
            ar.ncr = ncr_agg;
            ar.ood.tpr = tpr_mean;
        }
    }

    Protocol& p = report.protocol;
    p.n_novel = config.n_novel;
    p.shots = config.shots;
    p.query_per_class = config.query_per_class;
    p.episodes = config.episodes;
    p.metric = config.metric;
    p.master_seed = config.master_seed;
    p.dataset_fingerprint = fingerprint(set);
    p.calibration_fraction = config.calibration_fraction;
    p.n_base_classes = base_bank.size();
    p.n_calibration_samples = splits.calibration.size();
    p.n_reporting_samples = splits.reporting.size();
    return report;
}

std::string_view to_string(SweepAxis axis) noexcept {
    switch (axis) {
        case SweepAxis::N1: return "N1";
        case SweepAxis::K: return "K";
        case SweepAxis::Alpha: return "alpha";
    }
    return "unknown";
}

std::optional<SweepAxis> parse_sweep_axis(std::string_view text) noexcept {
    if (text == "N1" || text == "n1") return SweepAxis::N1;
    if (text == "K" || text == "k") return SweepAxis::K;
    if (text == "alpha") return SweepAxis::Alpha;
    return std::nullopt;
}

std::vector<SweepResult> run_sweep(const EmbeddingSet& set, SweepAxis axis, std::span<const double> values,
                                   const EvalConfig& base) {
    std::vector<SweepResult> out;
    out.reserve(values.size());
    for (double v : values) {
        char shown[64];
        std::snprintf(shown, sizeof shown, "%g", v);
        EvalConfig cfg = base;
        if (axis == SweepAxis::Alpha) {
            cfg.fixed_alphas.push_back(v);
        } else {
            if (!(v >= 1.0) || v != std::floor(v) || v > 4294967295.0) {
                throw Error(ErrorCode::InfeasibleSpec,
                            std::string("sweep value ") + shown + " for axis " + std::string(to_string(axis)) +
                                " is not a positive integer");
            }
            (axis == SweepAxis::N1 ? cfg.n_novel : cfg.shots) = static_cast<std::uint32_t>(v);
        }
        try {
            out.push_back({v, run_evaluation(set, cfg)});
        } catch (const Error& e) {
            throw Error(e.code(), std::string("sweep value ") + shown + ": " + e.what());
        }
    }
    return out;
}

}  // namespace ncd
