#ifndef WSCPS_PREDICTIVE_SYSTEM_HPP
#define WSCPS_PREDICTIVE_SYSTEM_HPP

#include <iosfwd>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "wscps/likelihood_ratio.hpp"
#include "wscps/predictor.hpp"

namespace wscps {

// Split conformity measure: a signed residual, optionally scaled by a
// difficulty estimate. Isotonic in y and balanced (attainable scores span R
// for every object), and a function of the fitted model only, so invariant
// to permutations of the proper training sequence.
class ConformityMeasure {
public:
    enum class Kind { SignedResidual, NormalizedSignedResidual };

    static ConformityMeasure signed_residual();
    static ConformityMeasure normalized_residual(DifficultyEstimator difficulty);

    // residual scale at x: 1 for the plain residual, sigma_hat(x) otherwise
    double scale(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    // score = (y - prediction) / scale(x)
    double score(const Eigen::Ref<const Eigen::VectorXd>& x, double prediction, double y) const;
    // inverse in y: the label whose score at x equals `score`
    double label_for_score(const Eigen::Ref<const Eigen::VectorXd>& x, double prediction,
                           double score) const;

    Kind kind() const { return kind_; }

private:
    Kind kind_ = Kind::SignedResidual;
    DifficultyEstimator difficulty_;
};

// R_i = A(z_1..z_m, (x_i, y_i)) for each calibration observation, in order.
std::vector<double> calibrate(const Predictor& model, const ConformityMeasure& measure,
                              const Dataset& cal);

struct PredictionInterval {
    double lower = 0.0;
    double upper = 0.0;
    double nominal_coverage = 0.0;

    bool contains(double y) const { return lower <= y && y <= upper; }
    // equal bounds (including both quantiles escaping to the same infinity)
    // give width 0 rather than inf - inf
    double width() const { return upper == lower ? 0.0 : upper - lower; }
};

// Weighted step CDF over candidate labels: atoms (c_i, p_i) sorted ascending
// with equal values merged, plus the test point's own mass, which sits above
// every finite label. Queries follow
//   Q(y, tau) = sum_{c_i < y} p_i + tau * (sum_{c_i = y} p_i + tail_mass)
// with value equality decided at an absolute tolerance.
class PredictiveDistribution {
public:
    static constexpr double kTieTolerance = 1e-12;

    PredictiveDistribution(std::vector<double> values, std::vector<double> masses,
                           double tail_mass, double point_prediction);

    double cdf(double y, double tau) const;

    // Smallest atom value whose cumulative mass just above it reaches q;
    // +inf when no atom does, -inf when q falls below the mass that sits
    // under every atom (tau * tail_mass).
    double quantile(double q, double tau) const;

    // Central interval: quantiles at (1 - coverage)/2 and 1 - (1 - coverage)/2.
    PredictionInterval interval(double coverage, double tau) const;

    // Draws tau ~ Uniform(0,1) and evaluates the CDF at the realized label.
    double pit(double y_true, std::mt19937_64& rng) const;

    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& masses() const { return masses_; }
    double tail_mass() const { return tail_mass_; }
    double point_prediction() const { return point_prediction_; }
    double total_atom_mass() const { return cum_.back(); }

    // tail-mass header line, then value,mass rows
    void write_csv(std::ostream& out) const;

private:
    std::vector<double> values_; // ascending, tie-merged
    std::vector<double> masses_;
    std::vector<double> cum_;    // cum_[i] = mass of atoms [0, i); cum_[n] = total
    double tail_mass_ = 0.0;
    double point_prediction_ = 0.0;
};

// Materializes the weighted split conformal transducer at test object x:
// atom values are the labels the calibration scores map back to, carrying
// the normalized calibration masses; the tail mass is the test point's own.
// With unit weights this is exactly the unweighted split transducer.
PredictiveDistribution build_distribution(const std::vector<double>& scores,
                                          const NormalizedWeights& weights,
                                          const Predictor& model,
                                          const ConformityMeasure& measure,
                                          const Eigen::Ref<const Eigen::VectorXd>& x);

// Same, from a precomputed point prediction and residual scale at x.
PredictiveDistribution build_distribution(const std::vector<double>& scores,
                                          const NormalizedWeights& weights,
                                          double point_prediction, double residual_scale);

} // namespace wscps

#endif
