#ifndef WSCPS_EXPERIMENT_HPP
#define WSCPS_EXPERIMENT_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wscps/dataset.hpp"
#include "wscps/scoring.hpp"

namespace wscps {

enum class Method { ScpsIid, ScpsShift, WscpsOracle, WscpsEstimated, ScpsReduced };

std::string method_name(Method m);
Method parse_method(const std::string& name);
std::vector<Method> parse_method_list(const std::string& comma_separated);

struct ExperimentConfig {
    enum class DatasetKind { Synthetic, Airfoil };
    enum class PredictorKind { Knn, Linear };
    enum class MeasureKind { SignedResidual, NormalizedResidual };

    DatasetKind dataset = DatasetKind::Synthetic;
    std::string airfoil_path;

    std::size_t trials = 1000;
    double coverage_level = 0.8;
    std::vector<Method> methods = {Method::ScpsIid, Method::ScpsShift, Method::WscpsOracle,
                                   Method::WscpsEstimated, Method::ScpsReduced};
    std::uint64_t seed = 1;

    std::size_t n_train = 1000; // synthetic sizes
    std::size_t n_cal = 1000;
    std::size_t n_test = 1000;
    SplitFractions fractions;   // airfoil split

    // Empty beta means the dataset default: the synthetic generator's shift
    // location, or (-1, 0, 0, 0, 1) on the post-log airfoil covariates.
    TiltSpec tilt;

    double tau_fixed = 0.5;
    PredictorKind predictor = PredictorKind::Knn;
    std::size_t knn_k = 25;
    MeasureKind measure = MeasureKind::SignedResidual;
    std::size_t estimation_pool = 0; // unlabeled shifted pool size; 0 = |calibration|

    std::size_t pit_bins = 20;
    double ks_alpha = 0.01;
    double rank_alpha = 0.05;
    std::size_t threads = 0; // 0 = hardware concurrency
    std::string out_dir;     // empty = no files written

    Eigen::VectorXd resolved_tilt() const;
    void validate() const;
};

// Everything a single trial produces: one record per configured method plus
// the per-test-point PIT values for each (methods indexed as in the config).
struct TrialOutput {
    std::vector<TrialRecord> records;
    std::vector<std::vector<double>> pit;
    std::size_t sampled_index = 0; // test point whose PIT joins the pooled stream
};

TrialOutput run_trial(const ExperimentConfig& config, std::size_t trial_id);
TrialOutput run_trial(const ExperimentConfig& config, std::size_t trial_id,
                      const Dataset* airfoil);

struct MethodAggregate {
    std::string method;
    double mean_coverage = 0.0;
    double median_coverage = 0.0;
    double sd_coverage = 0.0;
    double mean_crps = 0.0;
    double mean_effective_n = 0.0;
    KsResult ks; // on the pooled PIT values
};

struct ExperimentReport {
    std::vector<TrialRecord> records;             // ordered by trial, then method
    std::vector<MethodAggregate> aggregates;      // per configured method
    std::map<std::string, std::vector<double>> pooled_pit; // one value per trial
    RankSummary ranks;                            // over the per-trial CRPS matrix
    std::vector<std::string> rank_methods;
};

// Runs all trials (concurrently when configured), merges by trial id, and
// writes records.csv, aggregates.json, pit_<method>.csv, ranks.json when the
// config names an output directory.
ExperimentReport run_experiment(const ExperimentConfig& config);

// Record-derived side of the aggregates (KS left empty); run_experiment uses
// exactly this, so aggregates are recomputable from a parsed records.csv.
std::vector<MethodAggregate> aggregate_records(const std::vector<TrialRecord>& records,
                                               const std::vector<std::string>& methods);

void write_report_files(const ExperimentReport& report, const ExperimentConfig& config);

std::vector<TrialRecord> read_records_csv(const std::string& path);

} // namespace wscps

#endif
