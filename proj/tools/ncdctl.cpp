// ncdctl: synthetic data generation, threshold calibration, episodic
// evaluation and sweeps for novel-class-detection inference.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ncd/embedding_store.hpp"
#include "ncd/episodic_harness.hpp"
#include "ncd/error.hpp"
#include "ncd/forgetting_calibrator.hpp"
#include "ncd/parallel.hpp"
#include "ncd/report_io.hpp"
#include "ncd/synthetic_generator.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInfeasible = 4;

struct InputOptions {
    std::string input;
    std::optional<std::uint32_t> csv_dim;
    std::string metric = "cosine";
};

struct EvalOptions {
    InputOptions in;
    std::vector<double> budgets{0.02, 0.05};
    std::vector<double> alphas;
    std::size_t episodes = 25;
    std::uint32_t n_novel = 1;
    std::uint32_t shots = 1;
    std::uint32_t query_per_class = 0;
    std::uint64_t master_seed = 0;
    double calibration_fraction = 0.0;
};

void add_input_options(CLI::App* cmd, InputOptions& o) {
    cmd->add_option("-i,--input", o.input, "EMB1 file, or CSV with --dim")->required()->check(CLI::ExistingFile);
    cmd->add_option("--dim", o.csv_dim, "Feature dimension of a CSV input");
    cmd->add_option("--metric", o.metric, "Distance metric")
        ->check(CLI::IsMember({"cosine", "euclidean"}))
        ->capture_default_str();
}

void add_budget_option(CLI::App* cmd, std::vector<double>& budgets) {
    cmd->add_option("--budgets", budgets, "Forgetting budgets as fractions (0.02 = 2%)")
        ->delimiter(',')
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
}

void add_eval_options(CLI::App* cmd, EvalOptions& o) {
    add_input_options(cmd, o.in);
    add_budget_option(cmd, o.budgets);
    cmd->add_option("--alphas", o.alphas, "Extra fixed thresholds to evaluate")->delimiter(',')->check(CLI::NonNegativeNumber);
    cmd->add_option("--episodes", o.episodes, "Number of episodes")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--n-novel", o.n_novel, "Novel classes per episode (N1)")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--shots", o.shots, "Support samples per novel class (K)")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--query-per-class", o.query_per_class, "Queries per class; 0 uses all remaining")->capture_default_str();
    cmd->add_option("--master-seed", o.master_seed, "Master seed for episode sampling")->capture_default_str();
    cmd->add_option("--calibration-fraction", o.calibration_fraction,
                    "Fraction of base_test held out for calibration; 0 calibrates on all of it")
        ->check(CLI::Range(0.0, 0.99))
        ->capture_default_str();
}

ncd::Metric metric_of(const InputOptions& o) { return *ncd::parse_metric(o.metric); }

ncd::EmbeddingSet load_input(const InputOptions& o) { return ncd::load_embeddings(o.input, o.csv_dim); }

ncd::EvalConfig eval_config(const EvalOptions& o, unsigned threads) {
    ncd::EvalConfig c;
    c.episodes = o.episodes;
    c.n_novel = o.n_novel;
    c.shots = o.shots;
    if (o.query_per_class > 0) c.query_per_class = o.query_per_class;
    c.budgets = o.budgets;
    c.fixed_alphas = o.alphas;
    c.metric = metric_of(o.in);
    c.master_seed = o.master_seed;
    c.threads = threads;
    c.calibration_fraction = o.calibration_fraction;
    return c;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ncd::Error(ncd::ErrorCode::IoError, "cannot write " + path.string());
    out << text;
}

template <typename Writer>
void write_with(const fs::path& path, Writer&& writer) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ncd::Error(ncd::ErrorCode::IoError, "cannot write " + path.string());
    writer(out);
}

// Keeps global keys and those of `command`, drops unset values.
std::string config_echo(const std::string& full, const std::string& command) {
    std::istringstream in(full);
    std::string out, line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos || line.substr(eq + 1) == "\"\"") continue;
        const auto dot = line.find('.');
        if (dot < eq && line.compare(0, dot + 1, command + ".") != 0) continue;
        out += line + "\n";
    }
    return out;
}

void prepare_output_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ncd::Error(ncd::ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Novel class detection with controllable forgetting"};
    app.require_subcommand(1);
    app.set_config("--config", "", "INI/TOML config file; command-line flags take precedence");

    std::string output_dir = ".";
    unsigned threads = ncd::default_threads();
    app.add_option("-o,--output-dir", output_dir, "Directory for output files")
        ->envname("NCD_OUTPUT_DIR")
        ->capture_default_str();
    app.add_option("--threads", threads, "Worker threads (results do not depend on this)")->check(CLI::PositiveNumber);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic Gaussian-cluster embedding set");
    ncd::SynthConfig synth;
    std::optional<double> target_bcr;
    synth.novel_offset = 0.5;
    gen->add_option("--dim", synth.dim, "Feature dimension")->required()->check(CLI::PositiveNumber);
    gen->add_option("--n-base", synth.n_base, "Base classes (N0)")->required()->check(CLI::PositiveNumber);
    gen->add_option("--n-novel", synth.n_novel_pool, "Novel classes in the pool")->required()->check(CLI::PositiveNumber);
    gen->add_option("--train-per-class", synth.train_per_class)->check(CLI::PositiveNumber)->capture_default_str();
    gen->add_option("--test-per-class", synth.test_per_class)->check(CLI::PositiveNumber)->capture_default_str();
    gen->add_option("--pool-per-class", synth.pool_per_class)->check(CLI::PositiveNumber)->capture_default_str();
    gen->add_option("--sigma", synth.sigma, "Isotropic cluster std")->check(CLI::PositiveNumber)->capture_default_str();
    gen->add_option("--target-bcr", target_bcr, "Tune sigma to reach this base accuracy (overrides --sigma)")
        ->check(CLI::Range(0.0, 1.0));
    gen->add_option("--novel-offset", synth.novel_offset, "Radial offset of novel means")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    gen->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();

    // calibrate
    auto* calibrate = app.add_subcommand("calibrate", "Build the forgetting curve and pick alpha per budget");
    InputOptions cal_in;
    std::vector<double> cal_budgets{0.02, 0.05};
    std::string cal_split = "base_test";
    add_input_options(calibrate, cal_in);
    add_budget_option(calibrate, cal_budgets);
    calibrate->add_option("--split", cal_split, "Base split to calibrate on")
        ->check(CLI::IsMember({"base_test", "base_train"}))
        ->capture_default_str();

    // eval
    auto* eval = app.add_subcommand("eval", "Run the episodic evaluation");
    EvalOptions eval_opts;
    add_eval_options(eval, eval_opts);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Repeat the evaluation over N1, K or alpha");
    EvalOptions sweep_opts;
    std::string axis_name;
    std::vector<double> sweep_values;
    add_eval_options(sweep, sweep_opts);
    sweep->add_option("--axis", axis_name, "Sweep axis")->required()->check(CLI::IsMember({"N1", "K", "alpha"}));
    sweep->add_option("--values", sweep_values, "Comma-separated values")->required()->delimiter(',');

    // report
    auto* report_cmd = app.add_subcommand("report", "Validate and print a saved report.json");
    std::string report_path;
    report_cmd->add_option("report", report_path, "Path to report.json (default: <output-dir>/report.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        const fs::path out_dir(output_dir);
        auto echo_config = [&](const char* name) {
            write_text(out_dir / (std::string(name) + "_config.ini"), config_echo(app.config_to_str(true, false), name));
        };

        if (*gen) {
            prepare_output_dir(out_dir);
            if (target_bcr) {
                synth.sigma = ncd::tune_sigma(*target_bcr, synth);
                std::cout << "tuned sigma " << synth.sigma << " for target BCR " << *target_bcr << "\n";
            }
            const ncd::EmbeddingSet set = ncd::generate(synth);
            ncd::save_emb1(set, out_dir / "embeddings.emb1");
            const std::string summary = ncd::format_summary(ncd::summarize(set), set.dim());
            write_text(out_dir / "summary.txt", "sigma " + std::to_string(synth.sigma) + "\n" + summary);
            echo_config("gen");
            std::cout << "wrote " << (out_dir / "embeddings.emb1").string() << " (" << set.size() << " records)\n";
            return 0;
        }

        if (*calibrate) {
            prepare_output_dir(out_dir);
            const ncd::EmbeddingSet set = load_input(cal_in);
            const ncd::Metric metric = metric_of(cal_in);
            const auto bank = ncd::compute_prototypes(set, ncd::Split::BaseTrain, ncd::BankKind::Base);
            const auto split = *ncd::parse_split(cal_split);
            const ncd::ForCurve curve = ncd::build_for_curve(ncd::select(set, split), bank, metric, threads);
            std::vector<ncd::CalibrationResult> results;
            for (double b : cal_budgets) results.push_back(ncd::calibrate_alpha(curve, b));
            write_with(out_dir / "for_curve.csv", [&](std::ostream& os) { ncd::write_curve_csv(curve, os); });
            write_text(out_dir / "calibration.json", ncd::calibration_to_json(curve, results).dump(2) + "\n");
            echo_config("calibrate");
            ncd::print_calibration_table(curve, results, std::cout);
            return 0;
        }

        if (*eval) {
            prepare_output_dir(out_dir);
            const ncd::EmbeddingSet set = load_input(eval_opts.in);
            const ncd::EvalReport report = ncd::run_evaluation(set, eval_config(eval_opts, threads));
            write_text(out_dir / "report.json", ncd::to_json(report).dump(2) + "\n");
            write_with(out_dir / "per_episode.csv", [&](std::ostream& os) { ncd::write_per_episode_csv(report, os); });
            echo_config("eval");
            ncd::print_report_table(report, std::cout);
            return 0;
        }

        if (*sweep) {
            prepare_output_dir(out_dir);
            const ncd::EmbeddingSet set = load_input(sweep_opts.in);
            const ncd::SweepAxis axis = *ncd::parse_sweep_axis(axis_name);
            const auto results = ncd::run_sweep(set, axis, sweep_values, eval_config(sweep_opts, threads));
            write_with(out_dir / "sweep.csv", [&](std::ostream& os) { ncd::write_sweep_csv(axis, results, os); });
            nlohmann::ordered_json all = nlohmann::ordered_json::array();
            for (const auto& r : results) all.push_back({{"value", r.value}, {"report", ncd::to_json(r.report)}});
            write_text(out_dir / "sweep_reports.json", all.dump(2) + "\n");
            echo_config("sweep");
            for (const auto& r : results) {
                std::cout << axis_name << " = " << r.value << "\n";
                ncd::print_report_table(r.report, std::cout);
            }
            return 0;
        }

        if (*report_cmd) {
            const fs::path path = report_path.empty() ? out_dir / "report.json" : fs::path(report_path);
            std::ifstream in(path);
            if (!in) throw ncd::Error(ncd::ErrorCode::IoError, "cannot open " + path.string());
            nlohmann::ordered_json doc;
            try {
                doc = nlohmann::ordered_json::parse(in);
            } catch (const nlohmann::json::exception& e) {
                throw ncd::Error(ncd::ErrorCode::ParseError, path.string() + ": " + e.what());
            }
            const auto problems = ncd::validate_report_json(doc);
            if (!problems.empty()) {
                for (const auto& p : problems) std::cerr << "schema: " << p << "\n";
                return kExitData;
            }
            ncd::print_report_table(ncd::report_from_json(doc), std::cout);
            return 0;
        }
    } catch (const ncd::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        if (e.code() == ncd::ErrorCode::InvalidArgument) return kExitUsage;
        return ncd::is_infeasible(e.code()) ? kExitInfeasible : kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
