#include "wscps/predictor.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/QR>

namespace wscps {

std::vector<std::size_t> nearest_neighbors(const Eigen::MatrixXd& points,
                                           const Eigen::Ref<const Eigen::VectorXd>& query,
                                           std::size_t k) {
    const auto n = static_cast<std::size_t>(points.rows());
    if (k == 0 || k > n) throw std::invalid_argument("nearest_neighbors: k out of range");
    Eigen::VectorXd d2 = (points.rowwise() - query.transpose()).rowwise().squaredNorm();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto closer = [&](std::size_t a, std::size_t b) {
        if (d2(static_cast<Eigen::Index>(a)) != d2(static_cast<Eigen::Index>(b)))
            return d2(static_cast<Eigen::Index>(a)) < d2(static_cast<Eigen::Index>(b));
        return a < b; // tie on distance: lower index wins
    };
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k - 1), idx.end(), closer);
    idx.resize(k);
    return idx;
}

Predictor fit_linear(const Dataset& train) {
    const auto n = static_cast<Eigen::Index>(train.size());
    const auto d = static_cast<Eigen::Index>(train.dim());
    if (n <= d) throw std::invalid_argument("fit_linear: need more than d observations");

    Eigen::MatrixXd design(n, d + 1);
    design.col(0).setOnes();
    design.rightCols(d) = train.x();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < d + 1) {
        // columns pivoted past the numerical rank are the dependent ones
        std::string cols;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index i = qr.rank(); i < perm.size(); ++i) {
            if (!cols.empty()) cols += ", ";
            cols += perm(i) == 0 ? std::string("intercept") : "x" + std::to_string(perm(i));
        }
        throw std::runtime_error("fit_linear: rank-deficient design, collinear columns: " + cols);
    }
    Eigen::VectorXd beta = qr.solve(train.y());

    Predictor p;
    p.kind_ = Predictor::Kind::LinearLeastSquares;
    p.intercept_ = beta(0);
    p.coef_ = beta.tail(d);
    p.fitted_ = true;
    return p;
}

Predictor fit_knn(const Dataset& train, std::size_t k) {
    if (train.empty()) throw std::invalid_argument("fit_knn: empty training set");
    if (k == 0 || k > train.size()) throw std::invalid_argument("fit_knn: k out of range");
    Predictor p;
    p.kind_ = Predictor::Kind::KNearestNeighbors;
    p.train_x_ = train.x();
    p.train_y_ = train.y();
    p.k_ = k;
    p.fitted_ = true;
    return p;
}

double Predictor::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (!fitted_) throw std::logic_error("Predictor: not fitted");
    if (kind_ == Kind::LinearLeastSquares) {
        if (x.size() != coef_.size()) throw std::invalid_argument("Predictor: dimension mismatch");
        return intercept_ + coef_.dot(x);
    }
    if (x.size() != train_x_.cols()) throw std::invalid_argument("Predictor: dimension mismatch");
    auto nn = nearest_neighbors(train_x_, x, k_);
    double sum = 0.0;
    for (std::size_t i : nn) sum += train_y_(static_cast<Eigen::Index>(i));
    return sum / static_cast<double>(k_);
}

Eigen::VectorXd Predictor::predict_all(const Eigen::MatrixXd& xs) const {
    Eigen::VectorXd out(xs.rows());
    for (Eigen::Index i = 0; i < xs.rows(); ++i) out(i) = predict(xs.row(i).transpose());
    return out;
}

double Predictor::intercept() const {
    if (kind_ != Kind::LinearLeastSquares || !fitted_)
        throw std::logic_error("Predictor: intercept only defined for a fitted linear model");
    return intercept_;
}

const Eigen::VectorXd& Predictor::coefficients() const {
    if (kind_ != Kind::LinearLeastSquares || !fitted_)
        throw std::logic_error("Predictor: coefficients only defined for a fitted linear model");
    return coef_;
}

DifficultyEstimator DifficultyEstimator::fit(Eigen::MatrixXd x, Eigen::VectorXd abs_residuals,
                                             std::size_t k, double floor) {
    if (x.rows() == 0 || x.rows() != abs_residuals.rows())
        throw std::invalid_argument("DifficultyEstimator: reference set shape mismatch");
    if (k == 0 || k > static_cast<std::size_t>(x.rows()))
        throw std::invalid_argument("DifficultyEstimator: k out of range");
    if (!(floor > 0.0)) throw std::invalid_argument("DifficultyEstimator: floor must be positive");
    if ((abs_residuals.array() < 0.0).any())
        throw std::invalid_argument("DifficultyEstimator: residuals must be absolute");
    DifficultyEstimator est;
    est.x_ = std::move(x);
    est.residuals_ = std::move(abs_residuals);
    est.k_ = k;
    est.floor_ = floor;
    est.fitted_ = true;
    return est;
}

double DifficultyEstimator::estimate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (!fitted_) throw std::logic_error("DifficultyEstimator: not fitted");
    auto nn = nearest_neighbors(x_, x, k_);
    double sum = 0.0;
    for (std::size_t i : nn) sum += residuals_(static_cast<Eigen::Index>(i));
    return std::max(floor_, sum / static_cast<double>(k_));
}

} // namespace wscps
