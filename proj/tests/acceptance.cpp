// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Heavy experiment runs are shared across the criteria that
// consume them.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "support.hpp"
#include "wscps/dataset.hpp"
#include "wscps/experiment.hpp"
#include "wscps/likelihood_ratio.hpp"
#include "wscps/predictive_system.hpp"
#include "wscps/scoring.hpp"

using namespace wscps;

namespace {

int g_failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void report(const std::string& id, bool pass, const std::string& detail) {
    std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str());
    if (!pass) ++g_failures;
}

void report_skip(const std::string& id, const std::string& reason) {
    std::printf("[SKIP] %s: %s\n", id.c_str(), reason.c_str());
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

const MethodAggregate& find(const ExperimentReport& r, const std::string& name) {
    for (const auto& a : r.aggregates)
        if (a.method == name) return a;
    throw std::runtime_error("aggregate missing: " + name);
}

double mean_rank(const ExperimentReport& r, const std::string& name) {
    for (std::size_t i = 0; i < r.rank_methods.size(); ++i)
        if (r.rank_methods[i] == name) return r.ranks.mean_ranks[i];
    throw std::runtime_error("rank missing: " + name);
}

// ---- criterion 1: weighted transducer with unit ratios == unweighted ----

void criterion_1() {
    Timer timer;
    std::mt19937_64 rng(101);
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);

    bool ok = true;
    std::string why = "identical to the unweighted split transducer on 200 random sets";
    for (int rep = 0; rep < 200 && ok; ++rep) {
        const std::size_t n = 1 + rng() % 200;
        std::vector<double> scores(n);
        for (auto& s : scores) s = g(rng) * 3.0;
        if (n > 3 && u(rng) < 0.3) scores[2] = scores[1]; // exact tie

        const double mu = g(rng);
        Eigen::MatrixXd tx = Eigen::MatrixXd::Zero(1, 1);
        Eigen::VectorXd ty(1);
        ty << mu;
        Predictor model = fit_knn(Dataset{tx, ty}, 1);
        auto nw = normalize_weights(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)), 1.0);
        Eigen::VectorXd x(1);
        x << 0.0;
        auto dist = build_distribution(scores, nw, model, ConformityMeasure::signed_residual(), x);

        // atoms: sorted scores + mu with masses 1/(n+1), ties merged; tail 1/(n+1)
        std::vector<double> sorted(scores);
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> evalues, emasses;
        for (double s : sorted) {
            const double v = mu + s;
            if (!evalues.empty() && v - evalues.back() <= 1e-12)
                emasses.back() += 1.0 / (n + 1.0);
            else {
                evalues.push_back(v);
                emasses.push_back(1.0 / (n + 1.0));
            }
        }
        if (dist.values().size() != evalues.size() ||
            std::abs(dist.tail_mass() - 1.0 / (n + 1.0)) > 1e-12)
            ok = false;
        for (std::size_t i = 0; ok && i < evalues.size(); ++i)
            if (std::abs(dist.values()[i] - evalues[i]) > 1e-12 ||
                std::abs(dist.masses()[i] - emasses[i]) > 1e-12)
                ok = false;

        for (int q = 0; ok && q < 25; ++q) {
            const double y = g(rng) * 4.0 + mu;
            const double tau = u(rng);
            const double direct = testsupport::split_transducer_oracle(scores, y - mu, tau);
            if (std::abs(dist.cdf(y, tau) - direct) > 1e-12) ok = false;
        }
        if (!ok) why = fmt("mismatch at set %d", rep);
    }
    const double secs = timer.seconds();
    if (secs >= 1.0) {
        ok = false;
        why += fmt(" (runtime %.2fs exceeds 1s)", secs);
    }
    report("criterion 1 (weight degeneracy)", ok, why + fmt(" [%.2fs]", secs));
}

// ---- criterion 2: calibration under shift, KS on pooled PIT ----

void criterion_2() {
    Timer timer;
    ExperimentConfig cfg;
    cfg.trials = 2000;
    cfg.n_train = 1000;
    cfg.n_cal = 1000;
    cfg.n_test = 200;
    cfg.methods = {Method::WscpsOracle, Method::ScpsShift};
    cfg.seed = 20260810;
    auto rep = run_experiment(cfg);

    const double threshold = 1.628 / std::sqrt(2000.0);
    const double d_oracle = ks_uniformity(rep.pooled_pit.at("wscps-oracle"), 0.01).statistic;
    const double d_shift = ks_uniformity(rep.pooled_pit.at("scps-shift"), 0.01).statistic;
    const bool ok_oracle = d_oracle < threshold;
    const bool ok_shift = d_shift > threshold;
    const double secs = timer.seconds();
    const bool ok_time = secs < 120.0;
    report("criterion 2 (calibration under shift)", ok_oracle && ok_shift && ok_time,
           fmt("oracle D=%.4f %s 0.0364 passes, unweighted-on-shift D=%.4f fails [%.1fs]",
               d_oracle, ok_oracle ? "<" : ">=", d_shift, secs));
}

// ---- criteria 3/4/5b/8 share the 1000-trial synthetic run ----

ExperimentReport synthetic_run() {
    ExperimentConfig cfg;
    cfg.trials = 1000;
    cfg.n_train = 1000;
    cfg.n_cal = 1000;
    cfg.n_test = 1000;
    cfg.seed = 424242;
    return run_experiment(cfg);
}

void criterion_3_synthetic(const ExperimentReport& rep, double secs) {
    const double oracle = find(rep, "wscps-oracle").mean_coverage;
    const double shift = find(rep, "scps-shift").mean_coverage;
    const double iid = find(rep, "scps-iid").mean_coverage;
    const bool ok = oracle >= 0.78 && oracle <= 0.82 && shift <= oracle - 0.02 && iid >= 0.79 &&
                    iid <= 0.81;
    report("criterion 3 (coverage, synthetic)", ok,
           fmt("wscps-oracle %.4f in [0.78,0.82], scps-shift %.4f <= %.4f-0.02, scps-iid %.4f in "
               "[0.79,0.81] [%.1fs]",
               oracle, shift, oracle, iid, secs));
}

void criterion_3_airfoil(double synthetic_secs) {
    std::string path;
    if (const char* env = std::getenv("WSCPS_AIRFOIL_DATA")) path = env;
    if (path.empty())
        for (const char* candidate :
             {"data/airfoil_self_noise.dat", "../data/airfoil_self_noise.dat"})
            if (std::filesystem::exists(candidate)) {
                path = candidate;
                break;
            }
    if (path.empty()) {
        report_skip("criterion 3 (coverage, airfoil)",
                    "canonical UCI airfoil file not present; set WSCPS_AIRFOIL_DATA or place "
                    "data/airfoil_self_noise.dat (downloads are blocked in this build sandbox)");
        return;
    }

    Timer timer;
    ExperimentConfig cfg;
    cfg.dataset = ExperimentConfig::DatasetKind::Airfoil;
    cfg.airfoil_path = path;
    cfg.trials = 1000;
    cfg.methods = {Method::ScpsIid, Method::ScpsShift, Method::WscpsOracle};
    cfg.seed = 424243;
    auto rep = run_experiment(cfg);
    const double oracle = find(rep, "wscps-oracle").mean_coverage;
    const double shift = find(rep, "scps-shift").mean_coverage;
    const double secs = timer.seconds();
    const bool ok = shift < oracle && oracle >= 0.76 && oracle <= 0.84 &&
                    (secs + synthetic_secs) < 300.0;
    report("criterion 3 (coverage, airfoil)", ok,
           fmt("scps-shift %.4f < wscps-oracle %.4f, oracle in [0.76,0.84] [%.1fs, %.1fs total]",
               shift, oracle, secs, secs + synthetic_secs));
}

void criterion_4(const ExperimentReport& rep) {
    const double crps_oracle = find(rep, "wscps-oracle").mean_crps;
    const double crps_shift = find(rep, "scps-shift").mean_crps;
    const double rank_oracle = mean_rank(rep, "wscps-oracle");
    const double rank_shift = mean_rank(rep, "scps-shift");
    const bool ok = crps_oracle <= crps_shift && rank_oracle < rank_shift;
    report("criterion 4 (CRPS ordering)", ok,
           fmt("mean CRPS %.4f <= %.4f, mean rank %.3f < %.3f", crps_oracle, crps_shift,
               rank_oracle, rank_shift));
}

void criterion_5(const ExperimentReport& rep) {
    // formula vs an independent direct evaluation
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> u(0.0, 4.0);
    bool ok_formula = true;
    for (int r = 0; r < 1000 && ok_formula; ++r) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 64);
        Eigen::VectorXd w(n);
        for (Eigen::Index i = 0; i < n; ++i) w(i) = u(rng);
        if (w.sum() == 0.0) w(0) = 1.0;
        double l1 = 0.0, l2 = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            l1 += std::abs(w(i));
            l2 += w(i) * w(i);
        }
        const double direct = l1 * l1 / l2;
        const double lib = effective_sample_size(w);
        if (std::abs(lib - direct) > 1e-12 * std::max(1.0, direct)) ok_formula = false;
        // equality with n iff constant (up to summation rounding)
        Eigen::VectorXd c = Eigen::VectorXd::Constant(n, u(rng) + 0.1);
        if (std::abs(effective_sample_size(c) - static_cast<double>(n)) >
            1e-12 * static_cast<double>(n))
            ok_formula = false;
        if (n > 1) {
            Eigen::VectorXd bumped = c;
            bumped(0) *= 3.0;
            if (effective_sample_size(bumped) >= static_cast<double>(n)) ok_formula = false;
        }
    }

    const double sd_oracle = find(rep, "wscps-oracle").sd_coverage;
    const double sd_reduced = find(rep, "scps-reduced").sd_coverage;
    const bool ok_dispersion = std::abs(sd_oracle - sd_reduced) <= 0.25 * sd_reduced;
    report("criterion 5 (effective sample size)", ok_formula && ok_dispersion,
           fmt("formula matches direct evaluation to 1e-12; coverage sd %.4f within 25%% of "
               "reduced-set sd %.4f",
               sd_oracle, sd_reduced));
}

void criterion_8(const ExperimentReport& rep) {
    const double est = find(rep, "wscps-estimated").mean_coverage;
    const double shift = find(rep, "scps-shift").mean_coverage;
    const bool ok = est >= 0.76 && est <= 0.84 && est > shift;
    report("criterion 8 (estimated-ratio path)", ok,
           fmt("wscps-estimated %.4f in [0.76,0.84] and > scps-shift %.4f", est, shift));
}

// ---- criterion 6: CRPS closed form vs quadrature ----

void criterion_6() {
    Timer timer;
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        auto dist = testsupport::random_distribution(rng);
        const double y = (u(rng) - 0.5) * 25.0;
        const double tau = u(rng);
        worst = std::max(worst,
                         std::abs(crps(dist, y, tau) -
                                  testsupport::crps_quadrature_oracle(dist, y, tau)));
    }
    report("criterion 6 (CRPS quadrature oracle)", worst < 1e-6,
           fmt("max |closed - quadrature| = %.2e over 100 random distributions [%.1fs]", worst,
               timer.seconds()));
}

// ---- criterion 7: RPS monotonicity and limits ----

void criterion_7() {
    std::mt19937_64 rng(707);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::size_t violations = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        auto dist = testsupport::random_distribution(rng);
        const auto& v = dist.values();

        // nondecreasing in y along atoms and their neighborhoods
        const double tau = u(rng);
        double prev = -1.0;
        for (double c : v)
            for (double y : {c - 1e-6, c, c + 1e-6}) {
                const double q = dist.cdf(y, tau);
                if (q < prev - 1e-15) ++violations;
                prev = std::max(prev, q);
            }

        // nondecreasing in tau at a random label
        const double y = (u(rng) - 0.5) * 24.0;
        double prev_t = -1.0;
        for (int i = 0; i <= 20; ++i) {
            const double q = dist.cdf(y, i / 20.0);
            if (q < prev_t - 1e-15) ++violations;
            prev_t = std::max(prev_t, q);
        }

        // limits attained exactly
        if (dist.cdf(v.front() - 1.0, 0.0) != 0.0) ++violations;
        if (dist.cdf(v.back() + 1.0, 1.0) != 1.0) ++violations;
    }
    report("criterion 7 (RPS monotonicity invariants)", violations == 0,
           fmt("%zu violations over 1000 random distributions", violations));
}

} // namespace

int main() {
    criterion_1();
    criterion_2();

    Timer synth_timer;
    auto rep = synthetic_run();
    const double synth_secs = synth_timer.seconds();
    criterion_3_synthetic(rep, synth_secs);
    criterion_3_airfoil(synth_secs);
    criterion_4(rep);
    criterion_5(rep);
    criterion_6();
    criterion_7();
    criterion_8(rep);

    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all acceptance criteria passed\n");
    return 0;
}
