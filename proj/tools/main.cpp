// Experiment CLI: seeded multi-trial runs of (weighted) split conformal
// predictive systems on the synthetic and airfoil setups, writing
// records.csv, aggregates.json, pit_<method>.csv and ranks.json.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wscps/experiment.hpp"

namespace {

Eigen::VectorXd parse_vector(const std::string& csv) {
    std::vector<double> vals;
    std::istringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) vals.push_back(std::stod(tok));
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) out(static_cast<Eigen::Index>(i)) = vals[i];
    return out;
}

wscps::SplitFractions parse_fractions(const std::string& csv) {
    Eigen::VectorXd v = parse_vector(csv);
    if (v.size() != 3) throw CLI::ValidationError("--fractions", "expected three comma-separated values");
    return {v(0), v(1), v(2)};
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config file: expected key=value at line " +
                                     std::to_string(line_no));
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

struct SubcommandState {
    CLI::App* cmd = nullptr;
    wscps::ExperimentConfig cfg;
    std::string methods_csv;
    std::string beta_csv;
    std::string fractions_csv;
    std::string predictor = "knn";
    std::string measure = "residual";
    std::string config_path;
    std::map<std::string, CLI::Option*> opts;
};

void add_common_options(SubcommandState& s) {
    auto& cfg = s.cfg;
    auto* cmd = s.cmd;
    s.opts["trials"] = cmd->add_option("--trials", cfg.trials, "number of experimental trials");
    s.opts["seed"] = cmd->add_option("--seed", cfg.seed, "master RNG seed");
    s.opts["coverage"] =
        cmd->add_option("--coverage", cfg.coverage_level, "nominal interval coverage");
    s.opts["methods"] = cmd->add_option("--methods", s.methods_csv,
                                        "comma list of scps-iid, scps-shift, wscps-oracle, "
                                        "wscps-estimated, scps-reduced");
    s.opts["tau"] = cmd->add_option("--tau", cfg.tau_fixed, "fixed tau for de-fuzzed scoring");
    s.opts["out-dir"] = cmd->add_option("--out-dir", cfg.out_dir, "directory for result files");
    s.opts["beta"] = cmd->add_option("--beta", s.beta_csv, "comma list: covariate tilt");
    s.opts["predictor"] = cmd->add_option("--predictor", s.predictor, "knn or linear");
    s.opts["knn-k"] = cmd->add_option("--knn-k", cfg.knn_k, "neighbor count for knn");
    s.opts["measure"] = cmd->add_option("--measure", s.measure, "residual or normalized");
    s.opts["est-pool"] = cmd->add_option("--est-pool", cfg.estimation_pool,
                                         "unlabeled shifted pool size for ratio estimation "
                                         "(0 = calibration size)");
    s.opts["bins"] = cmd->add_option("--bins", cfg.pit_bins, "PIT histogram bins");
    s.opts["threads"] = cmd->add_option("--threads", cfg.threads, "worker threads (0 = auto)");
    s.opts["ks-alpha"] = cmd->add_option("--ks-alpha", cfg.ks_alpha, "KS significance level");
    s.opts["rank-alpha"] = cmd->add_option("--rank-alpha", cfg.rank_alpha,
                                           "Friedman-Nemenyi significance level");
    cmd->add_option("--config", s.config_path, "key=value file; command-line flags override");
}

// config-file values fill in everything the command line left at defaults
void apply_config_file(SubcommandState& s) {
    if (s.config_path.empty()) return;
    auto kv = read_config_file(s.config_path);
    for (const auto& [key, value] : kv) {
        auto it = s.opts.find(key);
        if (it == s.opts.end()) throw std::runtime_error("config file: unknown key '" + key + "'");
        if (it->second->count() > 0) continue; // flag given, wins
        it->second->add_result(value);
        it->second->run_callback();
    }
}

void finalize_config(SubcommandState& s) {
    if (!s.methods_csv.empty()) s.cfg.methods = wscps::parse_method_list(s.methods_csv);
    if (!s.beta_csv.empty()) s.cfg.tilt.beta = parse_vector(s.beta_csv);
    if (!s.fractions_csv.empty()) s.cfg.fractions = parse_fractions(s.fractions_csv);
    if (s.predictor == "knn")
        s.cfg.predictor = wscps::ExperimentConfig::PredictorKind::Knn;
    else if (s.predictor == "linear")
        s.cfg.predictor = wscps::ExperimentConfig::PredictorKind::Linear;
    else
        throw std::runtime_error("unknown predictor '" + s.predictor + "'");
    if (s.measure == "residual")
        s.cfg.measure = wscps::ExperimentConfig::MeasureKind::SignedResidual;
    else if (s.measure == "normalized")
        s.cfg.measure = wscps::ExperimentConfig::MeasureKind::NormalizedResidual;
    else
        throw std::runtime_error("unknown measure '" + s.measure + "'");
}

void print_summary(const wscps::ExperimentReport& report) {
    std::printf("%-16s %9s %9s %12s %10s %10s %6s\n", "method", "coverage", "sd", "crps",
                "eff-n", "KS-D", "pass");
    for (const auto& agg : report.aggregates)
        std::printf("%-16s %9.4f %9.4f %12.4f %10.1f %10.4f %6s\n", agg.method.c_str(),
                    agg.mean_coverage, agg.sd_coverage, agg.mean_crps, agg.mean_effective_n,
                    agg.ks.statistic, agg.ks.pass ? "yes" : "no");
    if (!report.ranks.mean_ranks.empty()) {
        std::printf("mean CRPS ranks:");
        for (std::size_t i = 0; i < report.rank_methods.size(); ++i)
            std::printf(" %s=%.3f", report.rank_methods[i].c_str(), report.ranks.mean_ranks[i]);
        std::printf("  (CD %.3f at alpha %.2f)\n", report.ranks.critical_difference,
                    report.ranks.alpha);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"weighted split conformal predictive systems under covariate shift"};
    app.require_subcommand(1);

    SubcommandState synthetic;
    synthetic.cmd = app.add_subcommand("synthetic", "shifted linear-Gaussian experiment");
    add_common_options(synthetic);
    synthetic.opts["n-train"] =
        synthetic.cmd->add_option("--n-train", synthetic.cfg.n_train, "proper training size");
    synthetic.opts["n-cal"] =
        synthetic.cmd->add_option("--n-cal", synthetic.cfg.n_cal, "calibration size");
    synthetic.opts["n-test"] =
        synthetic.cmd->add_option("--n-test", synthetic.cfg.n_test, "test size");

    SubcommandState airfoil;
    airfoil.cmd = app.add_subcommand("airfoil", "tilt-resampled airfoil experiment");
    add_common_options(airfoil);
    airfoil.opts["data-path"] = airfoil.cmd
                                    ->add_option("--data-path", airfoil.cfg.airfoil_path,
                                                 "whitespace-separated 6-column data file")
                                    ->check(CLI::ExistingFile);
    airfoil.opts["fractions"] = airfoil.cmd->add_option(
        "--fractions", airfoil.fractions_csv, "train,cal,test fractions (default 0.25,0.25,0.5)");

    SubcommandState pit;
    pit.cmd = app.add_subcommand("pit", "probabilistic-calibration check (pooled PIT values)");
    add_common_options(pit);
    pit.opts["n-train"] = pit.cmd->add_option("--n-train", pit.cfg.n_train, "proper training size");
    pit.opts["n-cal"] = pit.cmd->add_option("--n-cal", pit.cfg.n_cal, "calibration size");
    pit.opts["n-test"] = pit.cmd->add_option("--n-test", pit.cfg.n_test, "test size");
    pit.cfg.methods = {wscps::Method::ScpsIid, wscps::Method::ScpsShift,
                       wscps::Method::WscpsOracle};

    CLI11_PARSE(app, argc, argv);

    try {
        SubcommandState* active = nullptr;
        if (synthetic.cmd->parsed()) active = &synthetic;
        if (airfoil.cmd->parsed()) {
            active = &airfoil;
            active->cfg.dataset = wscps::ExperimentConfig::DatasetKind::Airfoil;
        }
        if (pit.cmd->parsed()) active = &pit;
        if (active == nullptr) throw std::runtime_error("no subcommand selected");

        apply_config_file(*active);
        finalize_config(*active);

        auto report = wscps::run_experiment(active->cfg);
        print_summary(report);
        if (!active->cfg.out_dir.empty())
            std::printf("results written to %s\n", active->cfg.out_dir.c_str());
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
