#include "ncd/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "ncd/error.hpp"

namespace ncd {
namespace {

using ojson = nlohmann::ordered_json;

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string fmt_exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_hex(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// JSON has no infinity; +inf alphas are written as null.
ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

double number_or_inf(const nlohmann::ordered_json& j) {
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

ojson to_json(const Aggregate& a) { return {{"mean", a.mean}, {"std", a.std}, {"min", a.min}, {"max", a.max}}; }

Aggregate aggregate_from_json(const nlohmann::ordered_json& j) {
    return {j.at("mean").get<double>(), j.at("std").get<double>(), j.at("min").get<double>(),
            j.at("max").get<double>()};
}

}  // namespace

ojson to_json(const EvalReport& report) {
    ojson doc;
    doc["schema_version"] = kReportSchemaVersion;
    doc["bcr"] = report.bcr;
    doc["v_ncr"] = to_json(report.v_ncr);

    ojson budgets = ojson::object();
    ojson ood = ojson::object();
    for (const auto& b : report.ncr_at_budget) {
        const std::string key = fmt_g(b.budget);
        budgets[key] = {{"budget", b.budget},
                        {"label", b.label},
                        {"alpha_star", b.calibration.alpha_star},
                        {"achieved_for", b.calibration.achieved_for},
                        {"n_calibration_samples", b.calibration.n_calibration_samples},
                        {"reporting_for", b.reporting_for},
                        {"ncr", to_json(b.ncr)}};
        ood[key] = {{"fpr", b.ood.fpr}, {"tpr", b.ood.tpr}};
    }
    doc["ncr_at_budget"] = std::move(budgets);
    doc["ood"] = std::move(ood);

    ojson alphas = ojson::array();
    for (const auto& a : report.ncr_at_alpha) {
        alphas.push_back({{"alpha", number_or_null(a.alpha)},
                          {"reporting_for", a.reporting_for},
                          {"ncr", to_json(a.ncr)},
                          {"fpr", a.ood.fpr},
                          {"tpr", a.ood.tpr}});
    }
    doc["ncr_at_alpha"] = std::move(alphas);

    ojson rows = ojson::array();
    for (const auto& r : report.per_episode) {
        rows.push_back({{"index", r.index},
                        {"seed", r.seed},
                        {"classes", r.classes},
                        {"support_rows", r.support_rows},
                        {"n_queries", r.n_queries},
                        {"v_ncr", r.v_ncr},
                        {"ncr", r.ncr},
                        {"novel_route_rate", r.novel_route_rate}});
    }
    doc["per_episode"] = std::move(rows);

    const Protocol& p = report.protocol;
    doc["protocol"] = {{"n_novel", p.n_novel},
                       {"shots", p.shots},
                       {"query_per_class", p.query_per_class ? ojson(*p.query_per_class) : ojson("all-remaining")},
                       {"episodes", p.episodes},
                       {"metric", std::string(to_string(p.metric))},
                       {"master_seed", p.master_seed},
                       {"dataset_fingerprint", fmt_hex(p.dataset_fingerprint)},
                       {"calibration_fraction", p.calibration_fraction},
                       {"n_base_classes", p.n_base_classes},
                       {"n_calibration_samples", p.n_calibration_samples},
                       {"n_reporting_samples", p.n_reporting_samples}};
    return doc;
}

std::vector<std::string> validate_report_json(const nlohmann::ordered_json& doc) {
    std::vector<std::string> errors;
    auto fail = [&](const std::string& path, const std::string& what) { errors.push_back(path + ": " + what); };
    auto rate = [&](const nlohmann::ordered_json& parent, const std::string& path, const char* key) {
        if (!parent.contains(key)) return fail(path + "." + key, "missing");
        const auto& v = parent[key];
        if (!v.is_number()) return fail(path + "." + key, "not a number");
        const double x = v.get<double>();
        if (!(x >= 0.0 && x <= 1.0)) fail(path + "." + key, "outside [0, 1]");
    };
    auto number = [&](const nlohmann::ordered_json& parent, const std::string& path, const char* key, bool nullable = false) {
        if (!parent.contains(key)) return fail(path + "." + key, "missing");
        const auto& v = parent[key];
        if (!(v.is_number() || (nullable && v.is_null()))) fail(path + "." + key, "not a number");
    };
    auto unsigned_int = [&](const nlohmann::ordered_json& parent, const std::string& path, const char* key) {
        if (!parent.contains(key)) return fail(path + "." + key, "missing");
        if (!parent[key].is_number_unsigned()) fail(path + "." + key, "not a non-negative integer");
    };
    auto agg = [&](const nlohmann::ordered_json& parent, const std::string& path, const char* key) {
        if (!parent.contains(key) || !parent[key].is_object()) return fail(path + "." + key, "missing object");
        const auto& a = parent[key];
        const std::string p = path + "." + key;
        const std::size_t before = errors.size();
        rate(a, p, "mean");
        number(a, p, "std");
        rate(a, p, "min");
        rate(a, p, "max");
        if (errors.size() == before && !(a["min"].get<double>() <= a["mean"].get<double>() &&
                                a["mean"].get<double>() <= a["max"].get<double>())) {
            fail(p, "mean outside [min, max]");
        }
    };

    if (!doc.is_object()) return {"$: not an object"};
    if (!doc.contains("schema_version") || doc["schema_version"] != kReportSchemaVersion) {
        fail("$.schema_version", "expected " + std::to_string(kReportSchemaVersion));
    }
    rate(doc, "$", "bcr");
    agg(doc, "$", "v_ncr");

    if (!doc.contains("ncr_at_budget") || !doc["ncr_at_budget"].is_object()) {
        fail("$.ncr_at_budget", "missing object");
    } else {
        for (const auto& [key, b] : doc["ncr_at_budget"].items()) {
            const std::string p = "$.ncr_at_budget." + key;
            if (!b.is_object()) {
                fail(p, "not an object");
                continue;
            }
            rate(b, p, "budget");
            if (!b.contains("label") || !b["label"].is_string()) fail(p + ".label", "missing string");
            number(b, p, "alpha_star");
            rate(b, p, "achieved_for");
            unsigned_int(b, p, "n_calibration_samples");
            rate(b, p, "reporting_for");
            agg(b, p, "ncr");
            if (!doc.contains("ood") || !doc["ood"].contains(key)) fail("$.ood." + key, "missing");
        }
    }
    if (!doc.contains("ood") || !doc["ood"].is_object()) {
        fail("$.ood", "missing object");
    } else {
        for (const auto& [key, o] : doc["ood"].items()) {
            rate(o, "$.ood." + key, "fpr");
            rate(o, "$.ood." + key, "tpr");
        }
    }
    if (!doc.contains("ncr_at_alpha") || !doc["ncr_at_alpha"].is_array()) {
        fail("$.ncr_at_alpha", "missing array");
    } else {
        for (std::size_t i = 0; i < doc["ncr_at_alpha"].size(); ++i) {
            const auto& a = doc["ncr_at_alpha"][i];
            const std::string p = "$.ncr_at_alpha[" + std::to_string(i) + "]";
            number(a, p, "alpha", true);
            rate(a, p, "reporting_for");
            agg(a, p, "ncr");
            rate(a, p, "fpr");
            rate(a, p, "tpr");
        }
    }
    const std::size_t n_points = (doc.contains("ncr_at_budget") && doc["ncr_at_budget"].is_object()
                                      ? doc["ncr_at_budget"].size()
                                      : 0) +
                                 (doc.contains("ncr_at_alpha") && doc["ncr_at_alpha"].is_array()
                                      ? doc["ncr_at_alpha"].size()
                                      : 0);
    if (!doc.contains("per_episode") || !doc["per_episode"].is_array()) {
        fail("$.per_episode", "missing array");
    } else {
        for (std::size_t i = 0; i < doc["per_episode"].size(); ++i) {
            const auto& r = doc["per_episode"][i];
            const std::string p = "$.per_episode[" + std::to_string(i) + "]";
            unsigned_int(r, p, "index");
            unsigned_int(r, p, "seed");
            unsigned_int(r, p, "n_queries");
            rate(r, p, "v_ncr");
            for (const char* key : {"classes", "support_rows"}) {
                if (!r.contains(key) || !r[key].is_array()) fail(p + "." + key, "missing array");
            }
            for (const char* key : {"ncr", "novel_route_rate"}) {
                if (!r.contains(key) || !r[key].is_array() || r[key].size() != n_points) {
                    fail(p + "." + key, "expected an array of " + std::to_string(n_points) + " rates");
                    continue;
                }
                for (const auto& v : r[key]) {
                    if (!v.is_number() || v.get<double>() < 0.0 || v.get<double>() > 1.0) {
                        fail(p + "." + key, "rate outside [0, 1]");
                    }
                }
            }
        }
    }
    if (!doc.contains("protocol") || !doc["protocol"].is_object()) {
        fail("$.protocol", "missing object");
    } else {
        const auto& p = doc["protocol"];
        for (const char* key : {"n_novel", "shots", "episodes", "master_seed", "n_base_classes",
                                "n_calibration_samples", "n_reporting_samples"}) {
            unsigned_int(p, "$.protocol", key);
        }
        if (!p.contains("query_per_class") ||
            !(p["query_per_class"].is_number_unsigned() || p["query_per_class"] == "all-remaining")) {
            fail("$.protocol.query_per_class", "expected an integer or \"all-remaining\"");
        }
        if (!p.contains("metric") || !p["metric"].is_string() || !parse_metric(p["metric"].get<std::string>())) {
            fail("$.protocol.metric", "expected \"cosine\" or \"euclidean\"");
        }
        if (!p.contains("dataset_fingerprint") || !p["dataset_fingerprint"].is_string()) {
            fail("$.protocol.dataset_fingerprint", "missing string");
        }
        number(p, "$.protocol", "calibration_fraction");
        if (p.contains("episodes") && p["episodes"].is_number_unsigned() && doc.contains("per_episode") &&
            doc["per_episode"].is_array() && doc["per_episode"].size() != p["episodes"].get<std::size_t>()) {
            fail("$.per_episode", "length differs from protocol.episodes");
        }
    }
    return errors;
}

EvalReport report_from_json(const nlohmann::ordered_json& doc) {
    const auto errors = validate_report_json(doc);
    if (!errors.empty()) throw Error(ErrorCode::ParseError, "report.json: " + errors.front());

    EvalReport r;
    r.bcr = doc["bcr"].get<double>();
    r.v_ncr = aggregate_from_json(doc["v_ncr"]);
    for (const auto& [key, b] : doc["ncr_at_budget"].items()) {
        BudgetResult br;
        br.budget = b["budget"].get<double>();
        br.label = b["label"].get<std::string>();
        br.calibration = {b["alpha_star"].get<double>(), b["achieved_for"].get<double>(), br.budget,
                          b["n_calibration_samples"].get<std::size_t>()};
        br.reporting_for = b["reporting_for"].get<double>();
        br.ncr = aggregate_from_json(b["ncr"]);
        br.ood = {doc["ood"][key]["fpr"].get<double>(), doc["ood"][key]["tpr"].get<double>()};
        r.ncr_at_budget.push_back(std::move(br));
    }
    for (const auto& a : doc["ncr_at_alpha"]) {
        r.ncr_at_alpha.push_back({number_or_inf(a["alpha"]), a["reporting_for"].get<double>(),
                                  aggregate_from_json(a["ncr"]), {a["fpr"].get<double>(), a["tpr"].get<double>()}});
    }
    for (const auto& row : doc["per_episode"]) {
        EpisodeRow e;
        e.index = row["index"].get<std::size_t>();
        e.seed = row["seed"].get<std::uint64_t>();
        e.classes = row["classes"].get<std::vector<ClassId>>();
        e.support_rows = row["support_rows"].get<std::vector<std::size_t>>();
        e.n_queries = row["n_queries"].get<std::size_t>();
        e.v_ncr = row["v_ncr"].get<double>();
        e.ncr = row["ncr"].get<std::vector<double>>();
        e.novel_route_rate = row["novel_route_rate"].get<std::vector<double>>();
        r.per_episode.push_back(std::move(e));
    }
    const auto& p = doc["protocol"];
    Protocol& out = r.protocol;
    out.n_novel = p["n_novel"].get<std::uint32_t>();
    out.shots = p["shots"].get<std::uint32_t>();
    if (p["query_per_class"].is_number()) out.query_per_class = p["query_per_class"].get<std::uint32_t>();
    out.episodes = p["episodes"].get<std::size_t>();
    out.metric = *parse_metric(p["metric"].get<std::string>());
    out.master_seed = p["master_seed"].get<std::uint64_t>();
    out.dataset_fingerprint = std::stoull(p["dataset_fingerprint"].get<std::string>(), nullptr, 16);
    out.calibration_fraction = p["calibration_fraction"].get<double>();
    out.n_base_classes = p["n_base_classes"].get<std::size_t>();
    out.n_calibration_samples = p["n_calibration_samples"].get<std::size_t>();
    out.n_reporting_samples = p["n_reporting_samples"].get<std::size_t>();
    return r;
}

void write_per_episode_csv(const EvalReport& report, std::ostream& out) {
    out << "index,seed,classes,n_queries,v_ncr";
    for (const auto& b : report.ncr_at_budget) out << ",ncr_budget_" << fmt_g(b.budget);
    for (const auto& a : report.ncr_at_alpha) out << ",ncr_alpha_" << fmt_g(a.alpha);
    for (const auto& b : report.ncr_at_budget) out << ",tpr_budget_" << fmt_g(b.budget);
    for (const auto& a : report.ncr_at_alpha) out << ",tpr_alpha_" << fmt_g(a.alpha);
    out << "\n";
    for (const auto& r : report.per_episode) {
        out << r.index << ',' << r.seed << ',';
        for (std::size_t i = 0; i < r.classes.size(); ++i) out << (i ? ";" : "") << r.classes[i];
        out << ',' << r.n_queries << ',' << fmt_exact(r.v_ncr);
        for (double v : r.ncr) out << ',' << fmt_exact(v);
        for (double v : r.novel_route_rate) out << ',' << fmt_exact(v);
        out << "\n";
    }
}

void write_sweep_csv(SweepAxis axis, std::span<const SweepResult> results, std::ostream& out) {
    out << "axis,value,bcr,v_ncr_mean,v_ncr_std,point,budget,alpha,achieved_for,reporting_for,ncr_mean,ncr_std,fpr,"
           "tpr\n";
    for (const auto& s : results) {
        const auto& r = s.report;
        const std::string prefix = std::string(to_string(axis)) + ',' + fmt_g(s.value) + ',' + fmt_exact(r.bcr) + ',' +
                                   fmt_exact(r.v_ncr.mean) + ',' + fmt_exact(r.v_ncr.std) + ',';
        for (const auto& b : r.ncr_at_budget) {
            out << prefix << b.label << ',' << fmt_exact(b.budget) << ',' << fmt_exact(b.calibration.alpha_star) << ','
                << fmt_exact(b.calibration.achieved_for) << ',' << fmt_exact(b.reporting_for) << ','
                << fmt_exact(b.ncr.mean) << ',' << fmt_exact(b.ncr.std) << ',' << fmt_exact(b.ood.fpr) << ','
                << fmt_exact(b.ood.tpr) << "\n";
        }
        for (const auto& a : r.ncr_at_alpha) {
            out << prefix << "alpha,," << fmt_exact(a.alpha) << ",," << fmt_exact(a.reporting_for) << ','
                << fmt_exact(a.ncr.mean) << ',' << fmt_exact(a.ncr.std) << ',' << fmt_exact(a.ood.fpr) << ','
                << fmt_exact(a.ood.tpr) << "\n";
        }
    }
}

namespace {

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
    return buf;
}

std::string pct_pm(const Aggregate& a) { return pct(a.mean) + " +- " + pct(a.std); }

void row(std::ostream& out, const std::vector<std::string>& cells, const std::vector<std::size_t>& widths) {
    out << '|';
    for (std::size_t i = 0; i < cells.size(); ++i) {
        out << ' ' << cells[i] << std::string(widths[i] - cells[i].size(), ' ') << " |";
    }
    out << "\n";
}

void table(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> widths(rows.front().size(), 0);
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) widths[i] = std::max(widths[i], r[i].size());
    }
    std::string rule = "+";
    for (auto w : widths) rule += std::string(w + 2, '-') + "+";
    out << rule << "\n";
    row(out, rows.front(), widths);
    out << rule << "\n";
    for (std::size_t i = 1; i < rows.size(); ++i) row(out, rows[i], widths);
    out << rule << "\n";
}

}  // namespace

void print_report_table(const EvalReport& report, std::ostream& out) {
    const Protocol& p = report.protocol;
    out << "episodes " << p.episodes << ", N1=" << p.n_novel << ", K=" << p.shots << ", metric " << to_string(p.metric)
        << ", master seed " << p.master_seed << "\n";

    std::vector<std::string> head{"BCR", "V-NCR"};
    std::vector<std::string> vals{pct(report.bcr), pct_pm(report.v_ncr)};
    for (const auto& b : report.ncr_at_budget) {
        head.push_back(b.label);
        vals.push_back(pct_pm(b.ncr));
    }
    table(out, {head, vals});

    if (!report.ncr_at_budget.empty()) {
        std::vector<std::vector<std::string>> rows{
            {"budget", "alpha*", "FOR (calib)", "FOR (report)", "OOD fpr", "OOD tpr"}};
        for (const auto& b : report.ncr_at_budget) {
            rows.push_back({pct(b.budget) + "%", fmt_g(b.calibration.alpha_star), pct(b.calibration.achieved_for),
                            pct(b.reporting_for), pct(b.ood.fpr), pct(b.ood.tpr)});
        }
        table(out, rows);
    }
    if (!report.ncr_at_alpha.empty()) {
        std::vector<std::vector<std::string>> rows{{"alpha", "NCR", "FOR", "OOD fpr", "OOD tpr"}};
        for (const auto& a : report.ncr_at_alpha) {
            rows.push_back({fmt_g(a.alpha), pct_pm(a.ncr), pct(a.reporting_for), pct(a.ood.fpr), pct(a.ood.tpr)});
        }
        table(out, rows);
    }
}

ojson calibration_to_json(const ForCurve& curve, std::span<const CalibrationResult> results) {
    ojson doc;
    doc["metric"] = std::string(to_string(curve.metric));
    doc["bcr"] = curve.bcr;
    doc["n_calibration_samples"] = curve.n_samples;
    ojson list = ojson::array();
    for (const auto& c : results) {
        list.push_back({{"budget", c.budget}, {"alpha_star", c.alpha_star}, {"achieved_for", c.achieved_for}});
    }
    doc["results"] = std::move(list);
    return doc;
}

void print_calibration_table(const ForCurve& curve, std::span<const CalibrationResult> results, std::ostream& out) {
    std::vector<std::vector<std::string>> rows{{"budget", "alpha_star", "achieved_for", "BCR"}};
    for (const auto& c : results) {
        rows.push_back({pct(c.budget) + "%", fmt_exact(c.alpha_star), pct(c.achieved_for) + "%", pct(curve.bcr) + "%"});
    }
    table(out, rows);
}

}  // namespace ncd
