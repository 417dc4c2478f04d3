#ifndef WSCPS_LIKELIHOOD_RATIO_HPP
#define WSCPS_LIKELIHOOD_RATIO_HPP

#include <cstddef>
#include <cstdint>

#include <Eigen/Core>

namespace wscps {

class LikelihoodRatioProvider;

struct RatioEstimateOptions {
    double l2 = 0.0;            // optional ridge on coefficients (not intercept)
    std::size_t max_iter = 500;
    double grad_tol = 1e-8;
    double prob_clip = 1e-6;    // probabilities clipped before the odds transform
};

// Logistic discriminator, target = 1 vs source = 0, fitted by iteratively
// reweighted least squares; w(x) = p(x)/(1-p(x)) * |source|/|target|.
LikelihoodRatioProvider estimate_ratio(const Eigen::MatrixXd& source_x,
                                       const Eigen::MatrixXd& target_x,
                                       const RatioEstimateOptions& options = {});

// w(x) = dP~_X / dP_X. Oracle, estimated-by-classifier, or unit (no shift).
// Evaluation is pure; providers are immutable after construction.
class LikelihoodRatioProvider {
public:
    enum class Kind { Unit, Oracle, Estimated };

    LikelihoodRatioProvider() = default;

    static LikelihoodRatioProvider unit();
    static LikelihoodRatioProvider oracle(Eigen::VectorXd beta);

    double operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    Eigen::VectorXd evaluate_all(const Eigen::MatrixXd& xs) const;

    Kind kind() const { return kind_; }
    // Set on an estimated provider when the discriminator failed to converge,
    // which in practice means (near-)perfect class separation; the returned
    // ratios are then determined by the probability clipping bounds.
    bool separation_flagged() const { return separation_; }

    const Eigen::VectorXd& classifier_coefficients() const { return coef_; }
    double classifier_intercept() const { return intercept_; }

private:
    friend LikelihoodRatioProvider estimate_ratio(const Eigen::MatrixXd&, const Eigen::MatrixXd&,
                                                  const RatioEstimateOptions&);
    Kind kind_ = Kind::Unit;
    Eigen::VectorXd beta_;      // oracle: w(x) = exp(x' beta)
    Eigen::VectorXd coef_;      // estimated: logistic coefficients
    double intercept_ = 0.0;
    double class_ratio_ = 1.0;  // |source| / |target|
    double prob_clip_ = 1e-6;
    bool separation_ = false;
};

// exp(x' beta); overflow maps to +inf, which normalize_weights rejects.
double oracle_ratio(const Eigen::Ref<const Eigen::VectorXd>& beta,
                    const Eigen::Ref<const Eigen::VectorXd>& x);

// Probability masses of the reweighted empirical score distribution:
// p_i = w_i / (sum_j w_j + w_test),
// p_test = w_test / (sum_j w_j + w_test).
struct NormalizedWeights {
    Eigen::VectorXd p_cal;
    double p_test = 0.0;
};

NormalizedWeights normalize_weights(const Eigen::VectorXd& w_cal, double w_test);

// ||w||_1^2 / ||w||_2^2; equals n iff all weights are equal.
double effective_sample_size(const Eigen::VectorXd& w_cal);

} // namespace wscps

#endif
