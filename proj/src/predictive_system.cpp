#include "wscps/predictive_system.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace wscps {

ConformityMeasure ConformityMeasure::signed_residual() {
    return ConformityMeasure{};
}

ConformityMeasure ConformityMeasure::normalized_residual(DifficultyEstimator difficulty) {
    if (!difficulty.fitted())
        throw std::invalid_argument("ConformityMeasure: difficulty estimator not fitted");
    ConformityMeasure m;
    m.kind_ = Kind::NormalizedSignedResidual;
    m.difficulty_ = std::move(difficulty);
    return m;
}

double ConformityMeasure::scale(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return kind_ == Kind::SignedResidual ? 1.0 : difficulty_.estimate(x);
}

double ConformityMeasure::score(const Eigen::Ref<const Eigen::VectorXd>& x, double prediction,
                                double y) const {
    return (y - prediction) / scale(x);
}

double ConformityMeasure::label_for_score(const Eigen::Ref<const Eigen::VectorXd>& x,
                                          double prediction, double score) const {
    return prediction + scale(x) * score;
}

std::vector<double> calibrate(const Predictor& model, const ConformityMeasure& measure,
                              const Dataset& cal) {
    if (cal.empty()) throw std::invalid_argument("calibrate: empty calibration set");
    std::vector<double> scores(cal.size());
    for (std::size_t i = 0; i < cal.size(); ++i) {
        Eigen::VectorXd x = cal.covariates(i);
        scores[i] = measure.score(x, model.predict(x), cal.label(i));
    }
    return scores;
}

PredictiveDistribution::PredictiveDistribution(std::vector<double> values,
                                               std::vector<double> masses, double tail_mass,
                                               double point_prediction)
    : values_(std::move(values)), masses_(std::move(masses)), tail_mass_(tail_mass),
      point_prediction_(point_prediction) {
    if (values_.size() != masses_.size())
        throw std::invalid_argument("PredictiveDistribution: values/masses length mismatch");
    if (values_.empty() && tail_mass_ <= 0.0)
        throw std::invalid_argument("PredictiveDistribution: no probability mass");
    if (!std::is_sorted(values_.begin(), values_.end()))
        throw std::invalid_argument("PredictiveDistribution: values must be sorted");
    for (double v : values_)
        if (!std::isfinite(v)) throw std::invalid_argument("PredictiveDistribution: non-finite value");
    for (double m : masses_)
        if (!(m >= 0.0) || !std::isfinite(m))
            throw std::invalid_argument("PredictiveDistribution: invalid mass");
    if (!(tail_mass_ >= 0.0) || !std::isfinite(tail_mass_))
        throw std::invalid_argument("PredictiveDistribution: invalid tail mass");

    // merge atoms whose values coincide within the tie tolerance
    std::size_t out = 0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (out > 0 && values_[i] - values_[out - 1] <= kTieTolerance) {
            masses_[out - 1] += masses_[i];
        } else {
            values_[out] = values_[i];
            masses_[out] = masses_[i];
            ++out;
        }
    }
    values_.resize(out);
    masses_.resize(out);

    cum_.assign(values_.size() + 1, 0.0);
    for (std::size_t i = 0; i < masses_.size(); ++i) cum_[i + 1] = cum_[i] + masses_[i];

    if (std::abs(1.0 - (cum_.back() + tail_mass_)) > 1e-12)
        throw std::invalid_argument("PredictiveDistribution: masses must sum to 1 within 1e-12");

    // Absorb the last few ulps into the tail (or the top atom when the atom
    // mass alone exceeds 1) so the CDF attains exactly 1 at its upper limit.
    if (cum_.back() > 1.0 && !masses_.empty()) {
        const double excess = cum_.back() - 1.0;
        masses_.back() -= excess;
        cum_.back() -= excess;
    }
    double t = std::max(0.0, 1.0 - cum_.back());
    for (int step = 0; step < 4 && cum_.back() + t != 1.0; ++step)
        t = std::nextafter(t, cum_.back() + t < 1.0 ? std::numeric_limits<double>::infinity()
                                                    : -std::numeric_limits<double>::infinity());
    if (cum_.back() + t != 1.0 || t < 0.0)
        throw std::invalid_argument("PredictiveDistribution: cannot normalize masses");
    tail_mass_ = t;
}

double PredictiveDistribution::cdf(double y, double tau) const {
    if (!(tau >= 0.0 && tau <= 1.0))
        throw std::invalid_argument("PredictiveDistribution::cdf: tau outside [0,1]");
    // strictly-below mass, then tau times the tied mass plus the tail
    const auto lo = std::lower_bound(values_.begin(), values_.end(), y - kTieTolerance);
    const auto hi = std::upper_bound(lo, values_.end(), y + kTieTolerance);
    const auto i_lo = static_cast<std::size_t>(lo - values_.begin());
    const auto i_hi = static_cast<std::size_t>(hi - values_.begin());
    return cum_[i_lo] + tau * ((cum_[i_hi] - cum_[i_lo]) + tail_mass_);
}

double PredictiveDistribution::quantile(double q, double tau) const {
    if (!(q > 0.0 && q < 1.0))
        throw std::invalid_argument("PredictiveDistribution::quantile: q outside (0,1)");
    if (!(tau >= 0.0 && tau <= 1.0))
        throw std::invalid_argument("PredictiveDistribution::quantile: tau outside [0,1]");
    const double under_all = tau * tail_mass_; // CDF value below every atom
    if (q < under_all) return -std::numeric_limits<double>::infinity();
    // smallest atom index i with cum_[i+1] + tau*tail >= q
    std::size_t lo = 0, hi = values_.size();
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (cum_[mid + 1] + under_all >= q)
            hi = mid;
        else
            lo = mid + 1;
    }
    if (lo == values_.size()) return std::numeric_limits<double>::infinity();
    return values_[lo];
}

PredictionInterval PredictiveDistribution::interval(double coverage, double tau) const {
    if (!(coverage > 0.0 && coverage < 1.0))
        throw std::invalid_argument("PredictiveDistribution::interval: coverage outside (0,1)");
    const double alpha = 1.0 - coverage;
    PredictionInterval out;
    out.lower = quantile(alpha / 2.0, tau);
    out.upper = quantile(1.0 - alpha / 2.0, tau);
    out.nominal_coverage = coverage;
    return out;
}

double PredictiveDistribution::pit(double y_true, std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    return cdf(y_true, unif(rng));
}

void PredictiveDistribution::write_csv(std::ostream& out) const {
    char buf[32];
    auto fmt = [&](double v) {
        auto res = std::to_chars(buf, buf + sizeof(buf), v);
        return std::string(buf, res.ptr);
    };
    out << "tail_mass," << fmt(tail_mass_) << '\n';
    out << "value,mass\n";
    for (std::size_t i = 0; i < values_.size(); ++i)
        out << fmt(values_[i]) << ',' << fmt(masses_[i]) << '\n';
}

PredictiveDistribution build_distribution(const std::vector<double>& scores,
                                          const NormalizedWeights& weights,
                                          const Predictor& model, const ConformityMeasure& measure,
                                          const Eigen::Ref<const Eigen::VectorXd>& x) {
    return build_distribution(scores, weights, model.predict(x), measure.scale(x));
}

PredictiveDistribution build_distribution(const std::vector<double>& scores,
                                          const NormalizedWeights& weights,
                                          double point_prediction, double residual_scale) {
    if (scores.size() != static_cast<std::size_t>(weights.p_cal.size()))
        throw std::invalid_argument("build_distribution: scores and weights length mismatch");
    if (!(residual_scale > 0.0))
        throw std::invalid_argument("build_distribution: residual scale must be positive");

    std::vector<double> values(scores.size()), masses(scores.size());
    if (std::is_sorted(scores.begin(), scores.end())) {
        // the score-to-label map is increasing, so sorted scores stay sorted
        for (std::size_t i = 0; i < scores.size(); ++i) {
            values[i] = point_prediction + residual_scale * scores[i];
            masses[i] = weights.p_cal(static_cast<Eigen::Index>(i));
        }
    } else {
        std::vector<std::size_t> order(scores.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
        for (std::size_t i = 0; i < order.size(); ++i) {
            values[i] = point_prediction + residual_scale * scores[order[i]];
            masses[i] = weights.p_cal(static_cast<Eigen::Index>(order[i]));
        }
    }
    return PredictiveDistribution(std::move(values), std::move(masses), weights.p_test,
                                  point_prediction);
}

} // namespace wscps
