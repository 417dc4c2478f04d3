#include "wscps/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "wscps/likelihood_ratio.hpp"
#include "wscps/predictive_system.hpp"
#include "wscps/predictor.hpp"
#include "wscps/rng.hpp"
#include "wscps/serialization.hpp"

namespace wscps {

namespace {

// substream salts within a trial
enum Stream : std::uint64_t {
    kStreamData = 1,
    kStreamTau = 2,
    kStreamPitIndex = 3,
    kStreamSubsample = 4,
    kStreamShiftResample = 5,
    kStreamEstimationPool = 6,
};

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

} // namespace

std::string method_name(Method m) {
    switch (m) {
    case Method::ScpsIid: return "scps-iid";
    case Method::ScpsShift: return "scps-shift";
    case Method::WscpsOracle: return "wscps-oracle";
    case Method::WscpsEstimated: return "wscps-estimated";
    case Method::ScpsReduced: return "scps-reduced";
    }
    throw std::logic_error("method_name: unknown method");
}

Method parse_method(const std::string& name) {
    if (name == "scps-iid") return Method::ScpsIid;
    if (name == "scps-shift") return Method::ScpsShift;
    if (name == "wscps-oracle") return Method::WscpsOracle;
    if (name == "wscps-estimated") return Method::WscpsEstimated;
    if (name == "scps-reduced") return Method::ScpsReduced;
    throw std::invalid_argument("unknown method '" + name + "'");
}

std::vector<Method> parse_method_list(const std::string& comma_separated) {
    std::vector<Method> out;
    std::istringstream ss(comma_separated);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(parse_method(tok));
    }
    if (out.empty()) throw std::invalid_argument("empty method list");
    return out;
}

Eigen::VectorXd ExperimentConfig::resolved_tilt() const {
    if (tilt.beta.size() > 0) return tilt.beta;
    if (dataset == DatasetKind::Synthetic) return synthetic_shift_location();
    Eigen::VectorXd beta(5);
    beta << -1.0, 0.0, 0.0, 0.0, 1.0;
    return beta;
}

void ExperimentConfig::validate() const {
    if (trials == 0) throw std::invalid_argument("config: trials must be >= 1");
    if (!(coverage_level > 0.0 && coverage_level < 1.0))
        throw std::invalid_argument("config: coverage_level outside (0,1)");
    if (!(tau_fixed >= 0.0 && tau_fixed <= 1.0))
        throw std::invalid_argument("config: tau outside [0,1]");
    if (methods.empty()) throw std::invalid_argument("config: no methods selected");
    if (dataset == DatasetKind::Airfoil && airfoil_path.empty())
        throw std::invalid_argument("config: airfoil dataset needs a data path");
    if (dataset == DatasetKind::Synthetic && (n_train == 0 || n_cal == 0 || n_test == 0))
        throw std::invalid_argument("config: synthetic sizes must be >= 1");
    const Eigen::Index want = dataset == DatasetKind::Synthetic ? 4 : 5;
    if (tilt.beta.size() > 0 && tilt.beta.size() != want)
        throw std::invalid_argument("config: beta dimension does not match the dataset");
}

namespace {

struct TrialData {
    SplitData split;
    Predictor model;
    ConformityMeasure measure;
    std::vector<double> scores_sorted;  // ascending calibration scores
    std::vector<std::size_t> order;     // scores_sorted[i] = scores[order[i]]
    Eigen::VectorXd mu_test;            // predictions on the unshifted test set
    Eigen::VectorXd mu_shift;           // predictions on the shifted test set
};

ConformityMeasure make_measure(const ExperimentConfig& cfg, const Predictor& model,
                               const Dataset& proper_train) {
    if (cfg.measure == ExperimentConfig::MeasureKind::SignedResidual)
        return ConformityMeasure::signed_residual();
    Eigen::VectorXd fitted = model.predict_all(proper_train.x());
    Eigen::VectorXd abs_res = (proper_train.y() - fitted).cwiseAbs();
    const double sd = std::sqrt((proper_train.y().array() - proper_train.y().mean()).square().sum() /
                                std::max<double>(1.0, static_cast<double>(proper_train.size()) - 1.0));
    const double floor = std::max(1e-6 * sd, 1e-12);
    const std::size_t k = std::min<std::size_t>(25, proper_train.size());
    return ConformityMeasure::normalized_residual(
        DifficultyEstimator::fit(proper_train.x(), std::move(abs_res), k, floor));
}

TrialData prepare_trial(const ExperimentConfig& cfg, std::uint64_t trial_base,
                        const Dataset* airfoil) {
    TrialData td;
    const Eigen::VectorXd beta = cfg.resolved_tilt();

    if (cfg.dataset == ExperimentConfig::DatasetKind::Synthetic) {
        const bool shifted = !beta.isZero(0.0);
        td.split = generate_synthetic(cfg.n_train, cfg.n_cal, cfg.n_test, shifted,
                                      derive_seed(trial_base, kStreamData), beta);
    } else {
        if (airfoil == nullptr) throw std::logic_error("prepare_trial: airfoil data missing");
        td.split = split_dataset(*airfoil, cfg.fractions, derive_seed(trial_base, kStreamData));
        td.split.shifted_test = tilt_resample(td.split.test, TiltSpec{beta}, td.split.test.size(),
                                              derive_seed(trial_base, kStreamShiftResample));
    }

    td.model = cfg.predictor == ExperimentConfig::PredictorKind::Linear
                   ? fit_linear(td.split.proper_train)
                   : fit_knn(td.split.proper_train, std::min(cfg.knn_k, td.split.proper_train.size()));
    td.measure = make_measure(cfg, td.model, td.split.proper_train);

    std::vector<double> scores = calibrate(td.model, td.measure, td.split.calibration);
    td.order.resize(scores.size());
    std::iota(td.order.begin(), td.order.end(), std::size_t{0});
    std::sort(td.order.begin(), td.order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    td.scores_sorted.resize(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) td.scores_sorted[i] = scores[td.order[i]];

    td.mu_test = td.model.predict_all(td.split.test.x());
    td.mu_shift = td.model.predict_all(td.split.shifted_test.x());
    return td;
}

// Scores a single method over its evaluation set; shared tau draws keep the
// methods paired within the trial.
TrialRecord score_method(const ExperimentConfig& cfg, const TrialData& td, Method method,
                         std::uint64_t trial_base, std::size_t trial_id,
                         const std::vector<double>& taus, std::vector<double>& pit_out) {
    const Eigen::VectorXd beta = cfg.resolved_tilt();
    const std::size_t n_cal = td.split.calibration.size();

    const bool on_shifted = method == Method::ScpsShift || method == Method::WscpsOracle ||
                            method == Method::WscpsEstimated;
    const Dataset& eval = on_shifted ? td.split.shifted_test : td.split.test;
    const Eigen::VectorXd& mu_eval = on_shifted ? td.mu_shift : td.mu_test;

    // calibration-side raw weights (aligned with the sorted scores) and the
    // provider used for the test-point weight
    LikelihoodRatioProvider provider = LikelihoodRatioProvider::unit();
    std::vector<double> cal_scores;
    Eigen::VectorXd w_cal;
    double effective_n = static_cast<double>(n_cal);

    switch (method) {
    case Method::ScpsIid:
    case Method::ScpsShift: {
        cal_scores = td.scores_sorted;
        w_cal = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n_cal));
        break;
    }
    case Method::WscpsOracle:
    case Method::WscpsEstimated: {
        if (method == Method::WscpsOracle) {
            provider = LikelihoodRatioProvider::oracle(beta);
        } else {
            // held-out shifted covariate pool, one per trial, never labeled
            const std::size_t pool_n = cfg.estimation_pool == 0 ? n_cal : cfg.estimation_pool;
            Eigen::MatrixXd pool;
            if (cfg.dataset == ExperimentConfig::DatasetKind::Synthetic) {
                pool = generate_synthetic(1, 1, pool_n, true,
                                          derive_seed(trial_base, kStreamEstimationPool), beta)
                           .shifted_test.x();
            } else {
                pool = tilt_resample(td.split.test, TiltSpec{beta}, pool_n,
                                     derive_seed(trial_base, kStreamEstimationPool))
                           .x();
            }
            provider = estimate_ratio(td.split.calibration.x(), pool);
        }
        cal_scores = td.scores_sorted;
        Eigen::VectorXd w_unsorted = provider.evaluate_all(td.split.calibration.x());
        w_cal.resize(w_unsorted.size());
        for (std::size_t i = 0; i < td.order.size(); ++i)
            w_cal(static_cast<Eigen::Index>(i)) = w_unsorted(static_cast<Eigen::Index>(td.order[i]));
        effective_n = effective_sample_size(w_unsorted);
        break;
    }
    case Method::ScpsReduced: {
        // subsample the calibration scores to the effective size the oracle
        // weights would leave, then proceed unweighted
        Eigen::VectorXd w_oracle =
            LikelihoodRatioProvider::oracle(beta).evaluate_all(td.split.calibration.x());
        const double ess = effective_sample_size(w_oracle);
        const auto r = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::llround(ess)), 1, n_cal);
        std::vector<std::size_t> all(n_cal);
        std::iota(all.begin(), all.end(), std::size_t{0});
        std::vector<std::size_t> keep;
        keep.reserve(r);
        std::mt19937_64 rng(make_engine(trial_base, kStreamSubsample));
        std::sample(all.begin(), all.end(), std::back_inserter(keep), r, rng);
        cal_scores.reserve(r);
        for (std::size_t i : keep) cal_scores.push_back(td.scores_sorted[i]); // stays sorted
        w_cal = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(r));
        effective_n = static_cast<double>(r);
        break;
    }
    }

    const std::size_t n_eval = eval.size();
    std::vector<PredictionInterval> intervals(n_eval);
    std::vector<double> labels(n_eval), widths(n_eval), crps_values(n_eval);
    pit_out.resize(n_eval);

    for (std::size_t j = 0; j < n_eval; ++j) {
        Eigen::VectorXd x = eval.covariates(j);
        NormalizedWeights nw = normalize_weights(w_cal, provider(x));
        PredictiveDistribution dist = build_distribution(
            cal_scores, nw, mu_eval(static_cast<Eigen::Index>(j)), td.measure.scale(x));

        intervals[j] = dist.interval(cfg.coverage_level, cfg.tau_fixed);
        labels[j] = eval.label(j);
        widths[j] = intervals[j].width();
        crps_values[j] = crps(dist, labels[j], cfg.tau_fixed);
        pit_out[j] = dist.cdf(labels[j], taus[j]);
    }

    TrialRecord rec;
    rec.trial_id = trial_id;
    rec.method = method_name(method);
    rec.covered = coverage(intervals, labels);
    rec.width = median_of(widths);
    rec.crps = std::accumulate(crps_values.begin(), crps_values.end(), 0.0) /
               static_cast<double>(n_eval);
    rec.effective_n = effective_n;
    return rec;
}

TrialOutput run_trial_impl(const ExperimentConfig& cfg, std::size_t trial_id,
                           const Dataset* airfoil) {
    const std::uint64_t trial_base = derive_seed(cfg.seed, trial_id);
    TrialData td = prepare_trial(cfg, trial_base, airfoil);

    const std::size_t n_eval = td.split.test.size(); // == shifted_test.size()
    std::mt19937_64 tau_rng(make_engine(trial_base, kStreamTau));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> taus(n_eval);
    for (auto& t : taus) t = unif(tau_rng);

    std::mt19937_64 pit_rng(make_engine(trial_base, kStreamPitIndex));
    const std::size_t sampled =
        std::uniform_int_distribution<std::size_t>(0, n_eval - 1)(pit_rng);

    TrialOutput out;
    out.sampled_index = sampled;
    out.records.reserve(cfg.methods.size());
    out.pit.resize(cfg.methods.size());
    for (std::size_t m = 0; m < cfg.methods.size(); ++m)
        out.records.push_back(
            score_method(cfg, td, cfg.methods[m], trial_base, trial_id, taus, out.pit[m]));
    return out;
}

} // namespace

TrialOutput run_trial(const ExperimentConfig& config, std::size_t trial_id,
                      const Dataset* airfoil) {
    config.validate();
    try {
        return run_trial_impl(config, trial_id, airfoil);
    } catch (const std::exception& e) {
        throw std::runtime_error("trial " + std::to_string(trial_id) + ": " + e.what());
    }
}

TrialOutput run_trial(const ExperimentConfig& config, std::size_t trial_id) {
    config.validate();
    if (config.dataset == ExperimentConfig::DatasetKind::Airfoil) {
        Dataset airfoil = load_airfoil(config.airfoil_path);
        return run_trial(config, trial_id, &airfoil);
    }
    return run_trial(config, trial_id, nullptr);
}

std::vector<MethodAggregate> aggregate_records(const std::vector<TrialRecord>& records,
                                               const std::vector<std::string>& methods) {
    std::vector<MethodAggregate> out;
    for (const auto& name : methods) {
        std::vector<double> cov, crps_v, eff;
        for (const auto& r : records) {
            if (r.method != name) continue;
            cov.push_back(r.covered);
            crps_v.push_back(r.crps);
            eff.push_back(r.effective_n);
        }
        if (cov.empty()) throw std::invalid_argument("aggregate_records: no records for " + name);
        MethodAggregate agg;
        agg.method = name;
        const auto n = static_cast<double>(cov.size());
        agg.mean_coverage = std::accumulate(cov.begin(), cov.end(), 0.0) / n;
        agg.median_coverage = median_of(cov);
        double ss = 0.0;
        for (double c : cov) ss += (c - agg.mean_coverage) * (c - agg.mean_coverage);
        agg.sd_coverage = cov.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        agg.mean_crps = std::accumulate(crps_v.begin(), crps_v.end(), 0.0) / n;
        agg.mean_effective_n = std::accumulate(eff.begin(), eff.end(), 0.0) / n;
        out.push_back(std::move(agg));
    }
    return out;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.validate();

    Dataset airfoil;
    const Dataset* airfoil_ptr = nullptr;
    if (config.dataset == ExperimentConfig::DatasetKind::Airfoil) {
        airfoil = load_airfoil(config.airfoil_path);
        airfoil_ptr = &airfoil;
    }

    struct Slot {
        std::vector<TrialRecord> records;
        std::vector<double> sampled_pit; // one per method
    };
    std::vector<Slot> slots(config.trials);

    std::size_t workers = config.threads == 0
                              ? std::max<std::size_t>(1, std::thread::hardware_concurrency())
                              : config.threads;
    workers = std::min(workers, config.trials);

    std::atomic<std::size_t> next_trial{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto work = [&]() {
        while (true) {
            const std::size_t t = next_trial.fetch_add(1);
            if (t >= config.trials) return;
            try {
                TrialOutput to = run_trial_impl(config, t, airfoil_ptr);
                Slot& slot = slots[t];
                slot.records = std::move(to.records);
                slot.sampled_pit.resize(config.methods.size());
                for (std::size_t m = 0; m < config.methods.size(); ++m)
                    slot.sampled_pit[m] = to.pit[m][to.sampled_index];
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next_trial.store(config.trials); // stop scheduling further trials
            }
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    ExperimentReport report;
    report.records.reserve(config.trials * config.methods.size());
    for (std::size_t m = 0; m < config.methods.size(); ++m)
        report.pooled_pit[method_name(config.methods[m])].reserve(config.trials);
    for (std::size_t t = 0; t < config.trials; ++t) {
        for (auto& rec : slots[t].records) report.records.push_back(rec);
        for (std::size_t m = 0; m < config.methods.size(); ++m)
            report.pooled_pit[method_name(config.methods[m])].push_back(slots[t].sampled_pit[m]);
    }

    std::vector<std::string> names;
    for (Method m : config.methods) names.push_back(method_name(m));
    report.aggregates = aggregate_records(report.records, names);
    for (auto& agg : report.aggregates)
        agg.ks = ks_uniformity(report.pooled_pit.at(agg.method), config.ks_alpha);

    report.rank_methods = names;
    if (names.size() >= 2 && config.trials >= 2) {
        std::vector<std::vector<double>> crps_matrix(config.trials,
                                                     std::vector<double>(names.size()));
        for (std::size_t t = 0; t < config.trials; ++t)
            for (std::size_t m = 0; m < names.size(); ++m)
                crps_matrix[t][m] = slots[t].records[m].crps;
        report.ranks = friedman_nemenyi(crps_matrix, config.rank_alpha);
    }

    if (!config.out_dir.empty()) write_report_files(report, config);
    return report;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    return out;
}

} // namespace

void write_report_files(const ExperimentReport& report, const ExperimentConfig& config) {
    namespace fs = std::filesystem;
    const fs::path dir(config.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "'");

    {
        auto out = open_out(dir / "records.csv");
        out << "trial,method,covered,width,crps,effective_n\n";
        for (const auto& r : report.records)
            out << r.trial_id << ',' << r.method << ',' << format_double(r.covered) << ','
                << format_double(r.width) << ',' << format_double(r.crps) << ','
                << format_double(r.effective_n) << '\n';
    }

    {
        nlohmann::json j;
        j["trials"] = config.trials;
        j["coverage_level"] = config.coverage_level;
        j["tau_fixed"] = config.tau_fixed;
        j["seed"] = config.seed;
        nlohmann::json methods = nlohmann::json::object();
        for (const auto& agg : report.aggregates) {
            nlohmann::json ks = agg.ks;
            ks["alpha"] = config.ks_alpha;
            methods[agg.method] = {
                {"mean_coverage", agg.mean_coverage},
                {"median_coverage", agg.median_coverage},
                {"sd_coverage", agg.sd_coverage},
                {"mean_crps", agg.mean_crps},
                {"mean_effective_n", agg.mean_effective_n},
                {"ks", std::move(ks)},
            };
        }
        j["methods"] = std::move(methods);
        auto out = open_out(dir / "aggregates.json");
        out << j.dump(2) << '\n';
    }

    for (const auto& [name, pit] : report.pooled_pit) {
        auto out = open_out(dir / ("pit_" + name + ".csv"));
        out << "bin_low,bin_high,count\n";
        for (const auto& bin : pit_histogram(pit, config.pit_bins))
            out << format_double(bin.low) << ',' << format_double(bin.high) << ',' << bin.count
                << '\n';
    }

    {
        nlohmann::json j = report.ranks;
        j["methods"] = report.rank_methods;
        auto out = open_out(dir / "ranks.json");
        out << j.dump(2) << '\n';
    }
}

std::vector<TrialRecord> read_records_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != "trial,method,covered,width,crps,effective_n")
        throw std::runtime_error("records csv: unexpected header in '" + path + "'");
    std::vector<TrialRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        TrialRecord r;
        std::getline(ss, cell, ',');
        r.trial_id = static_cast<std::size_t>(std::stoull(cell));
        std::getline(ss, r.method, ',');
        std::getline(ss, cell, ',');
        r.covered = std::stod(cell);
        std::getline(ss, cell, ',');
        r.width = std::stod(cell);
        std::getline(ss, cell, ',');
        r.crps = std::stod(cell);
        std::getline(ss, cell, ',');
        r.effective_n = std::stod(cell);
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace wscps
