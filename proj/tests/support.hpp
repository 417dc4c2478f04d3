// Shared test-only oracles: direct-summation implementations kept independent
// of the library's sorted/prefix-sum code paths.

#ifndef WSCPS_TESTS_SUPPORT_HPP
#define WSCPS_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "wscps/likelihood_ratio.hpp"
#include "wscps/predictive_system.hpp"

namespace testsupport {

constexpr double kTol = 1e-12;

// Unweighted split conformal transducer, evaluated by counting scores
// directly: Q = [#{R_i < R} + tau #{R_i = R} + tau]/(n+1).
inline double split_transducer_oracle(const std::vector<double>& cal_scores, double test_score,
                                      double tau) {
    std::size_t below = 0, tied = 0;
    for (double r : cal_scores) {
        if (r < test_score - kTol)
            ++below;
        else if (r <= test_score + kTol)
            ++tied;
    }
    const double n1 = static_cast<double>(cal_scores.size()) + 1.0;
    return (static_cast<double>(below) + tau * (static_cast<double>(tied) + 1.0)) / n1;
}

// CDF of a weighted atom list by direct summation (no sorting, no prefix sums).
inline double cdf_oracle(const std::vector<double>& values, const std::vector<double>& masses,
                         double tail, double y, double tau) {
    double below = 0.0, tied = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] < y - kTol)
            below += masses[i];
        else if (values[i] <= y + kTol)
            tied += masses[i];
    }
    return below + tau * (tied + tail);
}

// Brute-force cumulative walk over ascending atoms: smallest value whose
// cumulative mass just above it reaches q.
inline double quantile_oracle(const wscps::PredictiveDistribution& dist, double q, double tau) {
    const double under_all = tau * dist.tail_mass();
    if (q < under_all) return -std::numeric_limits<double>::infinity();
    double cum = under_all;
    for (std::size_t i = 0; i < dist.values().size(); ++i) {
        cum += dist.masses()[i];
        if (cum >= q) return dist.values()[i];
    }
    return std::numeric_limits<double>::infinity();
}

// Numeric CRPS: the same truncation domain as the closed form, integrated on a
// breakpoint-stratified midpoint grid (~grid_cells cells, exact for a step
// integrand), with F evaluated by direct summation at every midpoint.
inline double crps_quadrature_oracle(const wscps::PredictiveDistribution& dist, double y,
                                     double tau, std::size_t grid_cells = 100000) {
    const auto& values = dist.values();
    const auto& masses = dist.masses();
    if (values.empty()) return 0.0;

    std::vector<double> v(values);
    auto quant = [&](double q) {
        const double h = q * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const auto hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    const double bound = 10.0 * (quant(0.75) - quant(0.25));

    std::vector<double> breaks;
    breaks.push_back(std::min(values.front(), y) - bound);
    for (double c : values) breaks.push_back(c);
    breaks.push_back(y);
    breaks.push_back(std::max(values.back(), y) + bound);
    std::sort(breaks.begin(), breaks.end());

    const double span = breaks.back() - breaks.front();
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < breaks.size(); ++j) {
        const double a = breaks[j], b = breaks[j + 1];
        if (b <= a) continue;
        const auto cells = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(static_cast<double>(grid_cells) * (b - a) / span)));
        const double h = (b - a) / static_cast<double>(cells);
        for (std::size_t c = 0; c < cells; ++c) {
            const double t = a + (static_cast<double>(c) + 0.5) * h;
            double f = tau * dist.tail_mass();
            for (std::size_t i = 0; i < values.size(); ++i)
                if (values[i] < t) f += masses[i];
            const double g = f - (t >= y ? 1.0 : 0.0);
            acc += g * g * h;
        }
    }
    return acc;
}

// Random weighted step distribution; occasionally forces exact ties and
// zero-weight atoms, sometimes drops the tail.
inline wscps::PredictiveDistribution random_distribution(std::mt19937_64& rng,
                                                         std::size_t max_atoms = 40) {
    std::uniform_int_distribution<std::size_t> n_dist(1, max_atoms);
    std::uniform_real_distribution<double> value_dist(-10.0, 10.0);
    std::uniform_real_distribution<double> raw_dist(0.0, 1.0);
    const std::size_t n = n_dist(rng);

    std::vector<double> values(n);
    for (auto& v : values) v = value_dist(rng);
    if (n > 2 && raw_dist(rng) < 0.3) values[1] = values[0]; // exact tie
    std::sort(values.begin(), values.end());

    Eigen::VectorXd raw(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) = raw_dist(rng);
    if (n > 1 && raw_dist(rng) < 0.2) raw(0) = 0.0; // zero-mass atom
    double w_test = raw_dist(rng) < 0.2 ? 0.0 : raw_dist(rng);
    if (raw.sum() + w_test <= 0.0) w_test = 1.0;
    auto nw = wscps::normalize_weights(raw, w_test);

    std::vector<double> masses(n);
    for (std::size_t i = 0; i < n; ++i) masses[i] = nw.p_cal(static_cast<Eigen::Index>(i));
    return wscps::PredictiveDistribution(std::move(values), std::move(masses), nw.p_test, 0.0);
}

inline double spearman_rank_correlation(const std::vector<double>& a,
                                        const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> order(v.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < order.size(); ++i) r[order[i]] = static_cast<double>(i + 1);
        return r;
    };
    const auto ra = ranks(a), rb = ranks(b);
    const auto n = static_cast<double>(a.size());
    const double mean = (n + 1.0) / 2.0;
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (ra[i] - mean) * (rb[i] - mean);
        da += (ra[i] - mean) * (ra[i] - mean);
        db += (rb[i] - mean) * (rb[i] - mean);
    }
    return num / std::sqrt(da * db);
}

} // namespace testsupport

#endif
