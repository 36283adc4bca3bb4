#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "naive_oracle.hpp"
#include "ncd/episodic_harness.hpp"
#include "ncd/error.hpp"
#include "ncd/rng.hpp"
#include "ncd/simd.hpp"
#include "ncd/synthetic_generator.hpp"

using namespace ncd;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected ncd::Error");
    return ErrorCode::InvalidArgument;
}

std::string message_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

SynthConfig small_config(std::uint64_t seed) {
    SynthConfig c;
    c.dim = 16;
    c.n_base = 8;
    c.n_novel_pool = 8;
    c.train_per_class = 20;
    c.test_per_class = 15;
    c.pool_per_class = 12;
    c.sigma = 0.35;
    c.novel_offset = 0.5;
    c.seed = seed;
    return c;
}

// Two base classes on the axes, one novel class whose two pool records
// are identical and far from both.
EmbeddingSet twin_novel_set() {
    return EmbeddingSet(2,
                        {{0, Split::BaseTrain},
                         {1, Split::BaseTrain},
                         {0, Split::BaseTest},
                         {1, Split::BaseTest},
                         {5, Split::NovelPool},
                         {5, Split::NovelPool}},
                        {1, 0, 0, 1, 1, 0.1f, 0.1f, 1, -1, -1, -1, -1});
}

}  // namespace

TEST_CASE("single novel class with an identical query") {
    const auto set = twin_novel_set();
    const auto base = compute_prototypes(set, Split::BaseTrain, BankKind::Base);
    const std::vector<double> alphas{0.0, 2.0};
    const auto row = run_episode(set, base, EpisodeSpec{1, 1, 42, std::nullopt}, alphas, Metric::Cosine);
    CHECK(row.n_queries == 1);
    CHECK(row.classes == std::vector<ClassId>{5});
    CHECK(row.ncr[0] == 1.0);
    CHECK(row.ncr[1] == 0.0);
    CHECK(row.novel_route_rate[0] == 1.0);
    CHECK(row.novel_route_rate[1] == 0.0);
    CHECK(row.v_ncr == 1.0);
}

TEST_CASE("episode draws are deterministic and match the oracle") {
    const auto set = generate(small_config(3));
    const auto base = compute_prototypes(set, Split::BaseTrain, BankKind::Base);
    const std::vector<double> alphas{0.0, 0.1, 0.25, 0.5, 2.0};
    for (std::uint32_t n1 : {1u, 3u, 8u}) {
        for (std::uint32_t k : {1u, 2u, 5u}) {
            for (std::uint64_t seed : {0ull, 42ull, 0xdeadbeefull}) {
                for (Metric m : {Metric::Cosine, Metric::Euclidean}) {
                    const EpisodeSpec spec{n1, k, seed, std::nullopt};
                    const auto a = run_episode(set, base, spec, alphas, m);
                    const auto b = run_episode(set, base, spec, alphas, m);
                    CHECK(a == b);
                    const auto o = oracle::episode(set, base, seed, n1, k, alphas, m);
                    CHECK(a.classes == o.classes);
                    CHECK(a.support_rows == o.support);
                    CHECK(a.v_ncr == o.v_ncr);
                    CHECK(a.ncr == o.ncr);
                }
            }
        }
    }
}

TEST_CASE("support and query rows are disjoint and well formed") {
    const auto set = generate(small_config(4));
    SplitMix64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n1 = static_cast<std::uint32_t>(1 + rng.uniform_below(8));
        const auto k = static_cast<std::uint32_t>(1 + rng.uniform_below(6));
        std::optional<std::uint32_t> q;
        if (rng.uniform_below(2) == 1) q = static_cast<std::uint32_t>(1 + rng.uniform_below(12 - k));
        const auto d = draw_episode(set, EpisodeSpec{n1, k, rng.next(), q});
        CHECK(d.classes.size() == n1);
        CHECK(std::set<ClassId>(d.classes.begin(), d.classes.end()).size() == n1);
        CHECK(d.support_rows.size() == std::size_t{n1} * k);
        const std::size_t per = q ? *q : 12 - k;
        CHECK(d.query_rows.size() == n1 * per);
        CHECK(std::is_sorted(d.query_rows.begin(), d.query_rows.end()));
        std::set<std::size_t> s(d.support_rows.begin(), d.support_rows.end());
        CHECK(s.size() == d.support_rows.size());
        for (std::size_t r : d.query_rows) CHECK(s.count(r) == 0);
        for (std::size_t i = 0; i < d.support_rows.size(); ++i) {
            const auto& rec = set.record(d.support_rows[i]);
            CHECK(rec.split == Split::NovelPool);
            CHECK(rec.class_id == d.classes[i / k]);
        }
        const std::set<ClassId> drawn(d.classes.begin(), d.classes.end());
        for (std::size_t r : d.query_rows) {
            CHECK(set.record(r).split == Split::NovelPool);
            CHECK(drawn.count(set.record(r).class_id) == 1);
        }
    }
}

TEST_CASE("feasibility errors") {
    const auto set = generate(small_config(5));
    CHECK(code_of([&] { check_feasible(set, EpisodeSpec{9, 1, 0, std::nullopt}); }) == ErrorCode::InfeasibleSpec);
    CHECK(code_of([&] { check_feasible(set, EpisodeSpec{1, 12, 0, std::nullopt}); }) == ErrorCode::InfeasibleSpec);
    CHECK(code_of([&] { check_feasible(set, EpisodeSpec{1, 10, 0, 3u}); }) == ErrorCode::InfeasibleSpec);
    CHECK(code_of([&] { check_feasible(set, EpisodeSpec{0, 1, 0, std::nullopt}); }) == ErrorCode::InfeasibleSpec);
    CHECK(code_of([&] { check_feasible(set, EpisodeSpec{1, 0, 0, std::nullopt}); }) == ErrorCode::InfeasibleSpec);
    check_feasible(set, EpisodeSpec{8, 11, 0, std::nullopt});
    check_feasible(set, EpisodeSpec{8, 10, 2u, std::nullopt});
    const auto base = compute_prototypes(set, Split::BaseTrain, BankKind::Base);
    const std::vector<double> bad{-0.1};
    CHECK(code_of([&] { run_episode(set, base, EpisodeSpec{}, bad, Metric::Cosine); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("aggregate") {
    const std::vector<double> one{0.4};
    const auto a = aggregate(one);
    CHECK(a.mean == 0.4);
    CHECK(a.std == 0.0);
    CHECK(a.min == 0.4);
    CHECK(a.max == 0.4);
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const auto b = aggregate(v);
    CHECK(b.mean == 2.5);
    CHECK(b.std == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
    CHECK(b.min == 1.0);
    CHECK(b.max == 4.0);
    const std::vector<double> same(7, 0.1);
    const auto c = aggregate(same);
    CHECK(c.mean >= c.min);
    CHECK(c.mean <= c.max);
}

TEST_CASE("budget labels") {
    CHECK(budget_label(0.02) == "NCR@2FOR");
    CHECK(budget_label(0.05) == "NCR@5FOR");
    CHECK(budget_label(0.005) == "NCR@0.5FOR");
    CHECK(budget_label(0.1) == "NCR@10FOR");
}

TEST_CASE("one episode: aggregate equals the episode row") {
    const auto set = generate(small_config(6));
    EvalConfig cfg;
    cfg.episodes = 1;
    cfg.n_novel = 3;
    cfg.master_seed = 11;
    const auto r = run_evaluation(set, cfg);
    REQUIRE(r.per_episode.size() == 1);
    const auto& row = r.per_episode[0];
    CHECK(row.seed == derive_seed(11, 0));
    CHECK(r.v_ncr.mean == row.v_ncr);
    CHECK(r.v_ncr.std == 0.0);
    for (std::size_t b = 0; b < r.ncr_at_budget.size(); ++b) {
        CHECK(r.ncr_at_budget[b].ncr.mean == row.ncr[b]);
        CHECK(r.ncr_at_budget[b].ncr.min == row.ncr[b]);
        CHECK(r.ncr_at_budget[b].ncr.max == row.ncr[b]);
    }
}

TEST_CASE("evaluation invariants") {
    const auto set = generate(small_config(7));
    EvalConfig cfg;
    cfg.episodes = 20;
    cfg.n_novel = 4;
    cfg.shots = 2;
    cfg.master_seed = 2024;
    cfg.fixed_alphas = {0.0, 2.0};
    const auto r = run_evaluation(set, cfg);
    REQUIRE(r.ncr_at_budget.size() == 2);
    const auto& b2 = r.ncr_at_budget[0];
    const auto& b5 = r.ncr_at_budget[1];
    CHECK(b2.label == "NCR@2FOR");
    CHECK(b5.label == "NCR@5FOR");
    CHECK(b2.calibration.alpha_star >= b5.calibration.alpha_star);
    // Without a held-out split the reported FOR is the calibrated one.
    CHECK(b2.reporting_for == b2.calibration.achieved_for);
    CHECK(b5.reporting_for == b5.calibration.achieved_for);
    CHECK(b2.reporting_for <= 0.02);
    CHECK(b5.reporting_for <= 0.05);
    for (const auto& row : r.per_episode) {
        CHECK(row.ncr[1] >= row.ncr[0]);
        CHECK(row.ncr[3] == 0.0);  // alpha = 2 never routes novel
    }
    CHECK(r.ncr_at_alpha[0].ood.fpr == 1.0);
    CHECK(r.ncr_at_alpha[0].ood.tpr == 1.0);
    CHECK(r.ncr_at_alpha[1].ood.fpr == 0.0);
    CHECK(r.ncr_at_alpha[1].ncr.max == 0.0);
    CHECK(r.protocol.n_base_classes == 8);
    CHECK(r.protocol.n_calibration_samples == 8 * 15);
    CHECK(r.protocol.dataset_fingerprint == fingerprint(set));

    // V-NCR does not depend on the operating points.
    EvalConfig other = cfg;
    other.budgets = {0.3};
    other.fixed_alphas = {0.7};
    const auto r2 = run_evaluation(set, other);
    CHECK(r2.v_ncr == r.v_ncr);
    for (std::size_t i = 0; i < r.per_episode.size(); ++i) CHECK(r2.per_episode[i].v_ncr == r.per_episode[i].v_ncr);
}

TEST_CASE("evaluation is independent of thread count and SIMD level") {
    const auto set = generate(small_config(8));
    EvalConfig cfg;
    cfg.episodes = 12;
    cfg.n_novel = 5;
    cfg.master_seed = 99;
    cfg.threads = 1;
    const auto ref = run_evaluation(set, cfg);
    for (unsigned t : {2u, 4u, 7u}) {
        cfg.threads = t;
        CHECK(run_evaluation(set, cfg) == ref);
    }
    const auto saved = simd::active_level();
    for (auto level : {simd::Level::Scalar, simd::Level::Avx2, simd::Level::Neon}) {
        if (!simd::is_supported(level)) continue;
        simd::set_active_level(level);
        CHECK(run_evaluation(set, cfg) == ref);
    }
    simd::set_active_level(saved);
}

TEST_CASE("held-out calibration split") {
    const auto set = generate(small_config(9));
    EvalConfig cfg;
    cfg.episodes = 5;
    cfg.master_seed = 1;
    cfg.calibration_fraction = 0.5;
    const auto r = run_evaluation(set, cfg);
    CHECK(r.protocol.n_calibration_samples == 60);
    CHECK(r.protocol.n_reporting_samples == 60);
    CHECK(r.protocol.calibration_fraction == 0.5);
    for (const auto& b : r.ncr_at_budget) CHECK(b.calibration.achieved_for <= b.budget);
    CHECK(run_evaluation(set, cfg) == r);
    cfg.calibration_fraction = 1.0;
    CHECK(code_of([&] { run_evaluation(set, cfg); }) == ErrorCode::InvalidArgument);
    cfg.calibration_fraction = 0.001;
    CHECK(code_of([&] { run_evaluation(set, cfg); }) == ErrorCode::InfeasibleSpec);
}

TEST_CASE("evaluation errors") {
    const auto set = generate(small_config(10));
    EvalConfig cfg;
    cfg.episodes = 0;
    CHECK(code_of([&] { run_evaluation(set, cfg); }) == ErrorCode::InvalidArgument);
    cfg.episodes = 2;
    cfg.budgets = {1.5};
    CHECK(code_of([&] { run_evaluation(set, cfg); }) == ErrorCode::InvalidArgument);
    cfg.budgets = {0.02};
    cfg.n_novel = 20;
    CHECK(code_of([&] { run_evaluation(set, cfg); }) == ErrorCode::InfeasibleSpec);
}

TEST_CASE("sweeps") {
    const auto set = generate(small_config(11));
    EvalConfig cfg;
    cfg.episodes = 6;
    cfg.n_novel = 2;
    cfg.master_seed = 5;

    SUBCASE("a singleton sweep equals a plain evaluation") {
        const std::vector<double> v{2.0};
        const auto s = run_sweep(set, SweepAxis::N1, v, cfg);
        REQUIRE(s.size() == 1);
        CHECK(s[0].report == run_evaluation(set, cfg));
    }
    SUBCASE("an infeasible value is named in the error") {
        const std::vector<double> v{1.0, 3.0, 99.0};
        const auto msg = message_of([&] { run_sweep(set, SweepAxis::N1, v, cfg); });
        CHECK(msg.find("sweep value 99") != std::string::npos);
        CHECK(code_of([&] { run_sweep(set, SweepAxis::K, v, cfg); }) == ErrorCode::InfeasibleSpec);
    }
    SUBCASE("non-integer counts are rejected") {
        const std::vector<double> v{1.5};
        CHECK(code_of([&] { run_sweep(set, SweepAxis::K, v, cfg); }) == ErrorCode::InfeasibleSpec);
        const std::vector<double> z{0.0};
        CHECK(code_of([&] { run_sweep(set, SweepAxis::N1, z, cfg); }) == ErrorCode::InfeasibleSpec);
    }
    SUBCASE("alpha sweeps reuse the same episodes") {
        const std::vector<double> v{0.1, 0.3, 0.6};
        const auto s = run_sweep(set, SweepAxis::Alpha, v, cfg);
        REQUIRE(s.size() == 3);
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(s[i].report.ncr_at_alpha.back().alpha == v[i]);
            for (std::size_t e = 0; e < cfg.episodes; ++e) {
                CHECK(s[i].report.per_episode[e].classes == s[0].report.per_episode[e].classes);
                CHECK(s[i].report.per_episode[e].support_rows == s[0].report.per_episode[e].support_rows);
            }
        }
    }
    CHECK(parse_sweep_axis("N1") == SweepAxis::N1);
    CHECK(parse_sweep_axis("K") == SweepAxis::K);
    CHECK(parse_sweep_axis("alpha") == SweepAxis::Alpha);
    CHECK_FALSE(parse_sweep_axis("beta").has_value());
}

TEST_CASE("more shots help vanilla classification on average") {
    auto c = small_config(12);
    c.pool_per_class = 20;
    c.sigma = 0.5;
    const auto set = generate(c);
    EvalConfig cfg;
    cfg.episodes = 40;
    cfg.n_novel = 5;
    cfg.master_seed = 3;
    const std::vector<double> ks{1.0, 5.0};
    const auto s = run_sweep(set, SweepAxis::K, ks, cfg);
    CHECK(s[1].report.v_ncr.mean > s[0].report.v_ncr.mean);
}
