#ifndef WSCPS_SCORING_HPP
#define WSCPS_SCORING_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "wscps/predictive_system.hpp"

namespace wscps {

// Integral of (F(t) - 1{t >= y})^2 for the de-fuzzed step CDF F at tau_fixed,
// integrated in closed form between breakpoints. When the distribution
// carries tail mass, F is bounded away from {0, 1} on both sides and the
// integral does not converge; the flanks are then truncated at
// truncation_bound = 10 * interquartile width of the atom values beyond the
// outermost breakpoint, and `truncated` is set.
struct CrpsResult {
    double value = 0.0;
    bool truncated = false;
    double truncation_bound = 0.0;
};

CrpsResult crps_detail(const PredictiveDistribution& dist, double y, double tau_fixed);
double crps(const PredictiveDistribution& dist, double y, double tau_fixed);

// Fraction of labels inside the closed interval; infinite bounds cover.
double coverage(const std::vector<PredictionInterval>& intervals,
                const std::vector<double>& labels);

struct KsResult {
    double statistic = 0.0;
    bool pass = false;
    double threshold = 0.0;
};

// One-sample Kolmogorov-Smirnov test against Uniform(0,1), asymptotic
// critical value c(alpha) = sqrt(-ln(alpha/2)/2): 1.358 at 0.05, 1.628 at 0.01.
KsResult ks_uniformity(const std::vector<double>& p_values, double alpha = 0.01);

struct RankSummary {
    std::vector<double> mean_ranks; // one per method, rank 1 = best = lowest score
    double friedman_statistic = 0.0;
    double critical_difference = 0.0;
    double alpha = 0.05;
};

// Friedman chi-square over per-trial ranks (average ranks on ties) plus the
// Nemenyi critical difference q_alpha * sqrt(k(k+1)/(6N)).
RankSummary friedman_nemenyi(const std::vector<std::vector<double>>& scores, double alpha);

// Upper quantile of the range of k independent standard normals (the
// studentized range with infinite degrees of freedom), by bisection on the
// integrated distribution function. The Nemenyi q_alpha is this over sqrt(2).
double studentized_range_quantile(std::size_t k, double alpha);

struct HistogramBin {
    double low = 0.0;
    double high = 0.0;
    std::size_t count = 0;
};

// Equal-width bins on [0,1], right-open except the last.
std::vector<HistogramBin> pit_histogram(const std::vector<double>& p_values, std::size_t bins);

struct TrialRecord {
    std::size_t trial_id = 0;
    std::string method;
    double covered = 0.0;     // share of test labels inside the interval
    double width = 0.0;       // median interval width over the test set; may be +inf
    double crps = 0.0;        // mean de-fuzzed CRPS over the test set
    double effective_n = 0.0; // effective calibration size the method saw
};

} // namespace wscps

#endif
