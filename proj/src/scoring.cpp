#include "wscps/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace wscps {

namespace {

// linear-interpolation quantile of a sorted vector (R type 7)
double sorted_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace

CrpsResult crps_detail(const PredictiveDistribution& dist, double y, double tau_fixed) {
    if (!(tau_fixed >= 0.0 && tau_fixed <= 1.0))
        throw std::invalid_argument("crps: tau_fixed outside [0,1]");
    const auto& values = dist.values();
    const auto& masses = dist.masses();
    const double tail = dist.tail_mass();

    CrpsResult out;
    if (values.empty()) {
        // all mass on the test point itself: integrand is constant on each
        // side of y and there is nothing to anchor a truncation width to
        out.truncated = tail > 0.0;
        return out;
    }

    const double iqr = sorted_quantile(values, 0.75) - sorted_quantile(values, 0.25);
    const double bound = 10.0 * iqr;
    out.truncation_bound = bound;

    // flanks: F = tau*tail below all atoms, 1 - (1-tau)*tail above them
    const double below = tau_fixed * tail;
    const double above_gap = (1.0 - tau_fixed) * tail;
    out.value += below * below * bound;
    out.value += above_gap * above_gap * bound;
    out.truncated = tail > 0.0;

    // exact integration between breakpoints (atom values and the label),
    // where F is constant
    std::vector<double> breaks(values);
    breaks.insert(std::lower_bound(breaks.begin(), breaks.end(), y), y);
    double cum = 0.0;       // atom mass at or below the segment's left endpoint
    std::size_t next = 0;   // first atom not yet accumulated
    for (std::size_t j = 0; j + 1 < breaks.size(); ++j) {
        const double a = breaks[j], b = breaks[j + 1];
        while (next < values.size() && values[next] <= a) cum += masses[next++];
        if (b <= a) continue;
        const double f = cum + tau_fixed * tail;
        const double g = f - (a >= y ? 1.0 : 0.0);
        out.value += g * g * (b - a);
    }
    return out;
}

double crps(const PredictiveDistribution& dist, double y, double tau_fixed) {
    return crps_detail(dist, y, tau_fixed).value;
}

double coverage(const std::vector<PredictionInterval>& intervals,
                const std::vector<double>& labels) {
    if (intervals.size() != labels.size())
        throw std::invalid_argument("coverage: intervals and labels length mismatch");
    if (intervals.empty()) throw std::invalid_argument("coverage: empty input");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (intervals[i].contains(labels[i])) ++hit;
    return static_cast<double>(hit) / static_cast<double>(labels.size());
}

KsResult ks_uniformity(const std::vector<double>& p_values, double alpha) {
    if (p_values.empty()) throw std::invalid_argument("ks_uniformity: empty input");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("ks_uniformity: bad alpha");
    std::vector<double> v(p_values);
    for (double p : v)
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("ks_uniformity: value outside [0,1]");
    std::sort(v.begin(), v.end());
    const auto n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double up = static_cast<double>(i + 1) / n - v[i];
        const double down = v[i] - static_cast<double>(i) / n;
        d = std::max(d, std::max(up, down));
    }
    KsResult out;
    out.statistic = d;
    out.threshold = std::sqrt(-std::log(alpha / 2.0) / 2.0) / std::sqrt(n);
    out.pass = d < out.threshold;
    return out;
}

double studentized_range_quantile(std::size_t k, double alpha) {
    if (k < 2) throw std::invalid_argument("studentized_range_quantile: k must be >= 2");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("studentized_range_quantile: bad alpha");
    auto phi = [](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); };
    auto Phi = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
    // P(range of k iid N(0,1) < q) = k * int phi(z) [Phi(z) - Phi(z-q)]^{k-1} dz
    auto range_cdf = [&](double q) {
        const double lo = -9.0, hi = 9.0 + q;
        const int steps = 4000;
        const double h = (hi - lo) / steps;
        double acc = 0.0;
        for (int i = 0; i <= steps; ++i) {
            const double z = lo + h * i;
            const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
            acc += w * phi(z) * std::pow(Phi(z) - Phi(z - q), static_cast<double>(k - 1));
        }
        return static_cast<double>(k) * acc * h;
    };
    double lo = 0.0, hi = 30.0;
    for (int iter = 0; iter < 200 && hi - lo > 1e-10; ++iter) {
        const double mid = 0.5 * (lo + hi);
        (range_cdf(mid) < 1.0 - alpha ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

RankSummary friedman_nemenyi(const std::vector<std::vector<double>>& scores, double alpha) {
    const std::size_t n_trials = scores.size();
    if (n_trials < 2) throw std::invalid_argument("friedman_nemenyi: need at least 2 trials");
    const std::size_t k = scores.front().size();
    if (k < 2) throw std::invalid_argument("friedman_nemenyi: need at least 2 methods");
    for (const auto& row : scores)
        if (row.size() != k) throw std::invalid_argument("friedman_nemenyi: ragged score matrix");

    std::vector<double> rank_sums(k, 0.0);
    std::vector<std::size_t> order(k);
    for (const auto& row : scores) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });
        // average rank across ties
        std::size_t i = 0;
        while (i < k) {
            std::size_t j = i;
            while (j + 1 < k && row[order[j + 1]] == row[order[i]]) ++j;
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t t = i; t <= j; ++t) rank_sums[order[t]] += avg;
            i = j + 1;
        }
    }

    RankSummary out;
    out.alpha = alpha;
    out.mean_ranks.resize(k);
    const auto n = static_cast<double>(n_trials);
    const auto kd = static_cast<double>(k);
    double sumsq = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        out.mean_ranks[j] = rank_sums[j] / n;
        sumsq += out.mean_ranks[j] * out.mean_ranks[j];
    }
    out.friedman_statistic =
        12.0 * n / (kd * (kd + 1.0)) * (sumsq - kd * (kd + 1.0) * (kd + 1.0) / 4.0);
    const double q = studentized_range_quantile(k, alpha) / std::sqrt(2.0);
    out.critical_difference = q * std::sqrt(kd * (kd + 1.0) / (6.0 * n));
    return out;
}

std::vector<HistogramBin> pit_histogram(const std::vector<double>& p_values, std::size_t bins) {
    if (bins == 0) throw std::invalid_argument("pit_histogram: bins must be >= 1");
    std::vector<HistogramBin> out(bins);
    const auto nb = static_cast<double>(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        out[b].low = static_cast<double>(b) / nb;
        out[b].high = static_cast<double>(b + 1) / nb;
    }
    for (double p : p_values) {
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("pit_histogram: value outside [0,1]");
        auto b = static_cast<std::size_t>(p * nb);
        if (b >= bins) b = bins - 1; // p == 1 lands in the last (closed) bin
        ++out[b].count;
    }
    return out;
}

} // namespace wscps
