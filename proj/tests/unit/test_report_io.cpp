#include <doctest.h>

#include <limits>
#include <sstream>

#include "ncd/error.hpp"
#include "ncd/report_io.hpp"
#include "ncd/synthetic_generator.hpp"

using namespace ncd;
using ojson = nlohmann::ordered_json;

namespace {

EvalReport sample_report(std::optional<std::uint32_t> q = std::nullopt) {
    SynthConfig c;
    c.dim = 8;
    c.n_base = 5;
    c.n_novel_pool = 4;
    c.train_per_class = 10;
    c.test_per_class = 10;
    c.pool_per_class = 6;
    c.sigma = 0.4;
    c.novel_offset = 0.3;
    c.seed = 17;
    const auto set = generate(c);
    EvalConfig cfg;
    cfg.episodes = 4;
    cfg.n_novel = 2;
    cfg.query_per_class = q;
    cfg.budgets = {0.02, 0.05, 0.1};
    cfg.fixed_alphas = {0.25};
    cfg.master_seed = 0xfeedfacecafebeefULL;
    return run_evaluation(set, cfg);
}

bool mentions(const std::vector<std::string>& errors, const std::string& path) {
    for (const auto& e : errors) {
        if (e.rfind(path, 0) == 0) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("report JSON round trip") {
    for (auto q : {std::optional<std::uint32_t>{}, std::optional<std::uint32_t>{3}}) {
        const auto r = sample_report(q);
        const auto doc = to_json(r);
        CHECK(validate_report_json(doc).empty());
        const auto text = doc.dump(2);
        const auto back = report_from_json(ojson::parse(text));
        CHECK(back == r);
    }
}

TEST_CASE("report JSON layout") {
    const auto doc = to_json(sample_report());
    CHECK(doc["schema_version"] == 1);
    CHECK(doc["ncr_at_budget"].contains("0.02"));
    CHECK(doc["ncr_at_budget"].contains("0.05"));
    CHECK(doc["ncr_at_budget"]["0.05"]["label"] == "NCR@5FOR");
    CHECK(doc["ood"].contains("0.1"));
    CHECK(doc["protocol"]["query_per_class"] == "all-remaining");
    CHECK(doc["protocol"]["master_seed"].get<std::uint64_t>() == 0xfeedfacecafebeefULL);
    CHECK(doc["protocol"]["dataset_fingerprint"].get<std::string>().rfind("0x", 0) == 0);
    CHECK(doc["per_episode"].size() == 4);
    CHECK(doc["per_episode"][0]["ncr"].size() == 4);
}

TEST_CASE("infinite alphas survive as null") {
    auto r = sample_report();
    r.ncr_at_alpha[0].alpha = std::numeric_limits<double>::infinity();
    const auto doc = to_json(r);
    CHECK(doc["ncr_at_alpha"][0]["alpha"].is_null());
    CHECK(validate_report_json(doc).empty());
    CHECK(report_from_json(doc) == r);
}

TEST_CASE("validator names the offending path") {
    const auto good = to_json(sample_report());

    auto d = good;
    d["bcr"] = 1.5;
    CHECK(mentions(validate_report_json(d), "$.bcr"));

    d = good;
    d.erase("protocol");
    CHECK(mentions(validate_report_json(d), "$.protocol"));

    d = good;
    d["schema_version"] = 2;
    CHECK(mentions(validate_report_json(d), "$.schema_version"));

    d = good;
    d["v_ncr"]["mean"] = d["v_ncr"]["max"].get<double>() + 0.01;
    CHECK(mentions(validate_report_json(d), "$.v_ncr"));

    d = good;
    d["per_episode"][1]["ncr"].erase(0);
    CHECK(mentions(validate_report_json(d), "$.per_episode[1].ncr"));

    d = good;
    d["ood"].erase("0.05");
    CHECK(mentions(validate_report_json(d), "$.ood.0.05"));

    d = good;
    d["protocol"]["metric"] = "manhattan";
    CHECK(mentions(validate_report_json(d), "$.protocol.metric"));

    d = good;
    d["per_episode"].erase(0);
    CHECK(mentions(validate_report_json(d), "$.per_episode"));

    CHECK(!validate_report_json(ojson::array()).empty());

    try {
        report_from_json(d);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ParseError);
    }
}

TEST_CASE("per-episode CSV") {
    const auto r = sample_report();
    std::stringstream out;
    write_per_episode_csv(r, out);
    std::string line;
    std::getline(out, line);
    CHECK(line ==
          "index,seed,classes,n_queries,v_ncr,ncr_budget_0.02,ncr_budget_0.05,ncr_budget_0.1,ncr_alpha_0.25,"
          "tpr_budget_0.02,tpr_budget_0.05,tpr_budget_0.1,tpr_alpha_0.25");
    std::size_t rows = 0;
    while (std::getline(out, line)) ++rows;
    CHECK(rows == 4);
}

TEST_CASE("sweep CSV") {
    const std::vector<SweepResult> results{{1.0, sample_report()}, {2.0, sample_report()}};
    std::stringstream out;
    write_sweep_csv(SweepAxis::N1, results, out);
    std::string line;
    std::getline(out, line);
    CHECK(line ==
          "axis,value,bcr,v_ncr_mean,v_ncr_std,point,budget,alpha,achieved_for,reporting_for,ncr_mean,ncr_std,fpr,tpr");
    std::size_t rows = 0;
    while (std::getline(out, line)) {
        CHECK(line.rfind("N1,", 0) == 0);
        ++rows;
    }
    CHECK(rows == 2 * 4);
}

TEST_CASE("terminal table") {
    const auto r = sample_report();
    std::stringstream out;
    print_report_table(r, out);
    const auto s = out.str();
    for (const char* col : {"BCR", "V-NCR", "NCR@2FOR", "NCR@5FOR", "NCR@10FOR"}) {
        CHECK(s.find(col) != std::string::npos);
    }
}
