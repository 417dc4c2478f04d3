#ifndef WSCPS_PREDICTOR_HPP
#define WSCPS_PREDICTOR_HPP

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "wscps/dataset.hpp"

namespace wscps {

// Point predictor mu_hat. Fitted once, immutable afterwards; prediction is
// deterministic and defined for any finite x of the training dimension.
class Predictor {
public:
    enum class Kind { LinearLeastSquares, KNearestNeighbors };

    Predictor() = default;

    double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    Eigen::VectorXd predict_all(const Eigen::MatrixXd& xs) const;

    Kind kind() const { return kind_; }
    bool fitted() const { return fitted_; }

    // Linear fit only.
    double intercept() const;
    const Eigen::VectorXd& coefficients() const;

    friend Predictor fit_linear(const Dataset& train);
    friend Predictor fit_knn(const Dataset& train, std::size_t k);

private:
    Kind kind_ = Kind::LinearLeastSquares;
    bool fitted_ = false;
    // linear
    double intercept_ = 0.0;
    Eigen::VectorXd coef_;
    // knn
    Eigen::MatrixXd train_x_;
    Eigen::VectorXd train_y_;
    std::size_t k_ = 0;
};

// Ordinary least squares with intercept via column-pivoted QR. Rank-deficient
// designs are rejected with the offending columns named.
Predictor fit_linear(const Dataset& train);

// Mean label of the k nearest training covariates under Euclidean distance;
// exact distance ties broken by lower training index.
Predictor fit_knn(const Dataset& train, std::size_t k);

// sigma_hat(x) = max(floor, mean of the k nearest absolute residuals in the
// reference set). Always strictly positive.
class DifficultyEstimator {
public:
    DifficultyEstimator() = default;

    static DifficultyEstimator fit(Eigen::MatrixXd x, Eigen::VectorXd abs_residuals,
                                   std::size_t k, double floor);

    double estimate(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    bool fitted() const { return fitted_; }
    double floor() const { return floor_; }

private:
    Eigen::MatrixXd x_;
    Eigen::VectorXd residuals_;
    std::size_t k_ = 0;
    double floor_ = 0.0;
    bool fitted_ = false;
};

// Indices of the k nearest rows of `points` to `query` (squared Euclidean),
// ties by lower row index. Shared by the k-NN predictor and the difficulty
// estimator.
std::vector<std::size_t> nearest_neighbors(const Eigen::MatrixXd& points,
                                           const Eigen::Ref<const Eigen::VectorXd>& query,
                                           std::size_t k);

} // namespace wscps

#endif
