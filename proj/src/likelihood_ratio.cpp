#include "wscps/likelihood_ratio.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace wscps {

LikelihoodRatioProvider LikelihoodRatioProvider::unit() {
    LikelihoodRatioProvider p;
    p.kind_ = Kind::Unit;
    return p;
}

LikelihoodRatioProvider LikelihoodRatioProvider::oracle(Eigen::VectorXd beta) {
    if (!beta.allFinite()) throw std::invalid_argument("oracle provider: beta must be finite");
    LikelihoodRatioProvider p;
    p.kind_ = Kind::Oracle;
    p.beta_ = std::move(beta);
    return p;
}

double oracle_ratio(const Eigen::Ref<const Eigen::VectorXd>& beta,
                    const Eigen::Ref<const Eigen::VectorXd>& x) {
    if (beta.size() != x.size()) throw std::invalid_argument("oracle_ratio: dimension mismatch");
    return std::exp(beta.dot(x));
}

double LikelihoodRatioProvider::operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    switch (kind_) {
    case Kind::Unit:
        return 1.0;
    case Kind::Oracle:
        return oracle_ratio(beta_, x);
    case Kind::Estimated: {
        if (x.size() != coef_.size())
            throw std::invalid_argument("LikelihoodRatioProvider: dimension mismatch");
        const double p = 1.0 / (1.0 + std::exp(-(intercept_ + coef_.dot(x))));
        const double pc = std::clamp(p, prob_clip_, 1.0 - prob_clip_);
        return pc / (1.0 - pc) * class_ratio_;
    }
    }
    return 1.0;
}

Eigen::VectorXd LikelihoodRatioProvider::evaluate_all(const Eigen::MatrixXd& xs) const {
    Eigen::VectorXd out(xs.rows());
    for (Eigen::Index i = 0; i < xs.rows(); ++i) out(i) = (*this)(xs.row(i).transpose());
    return out;
}

LikelihoodRatioProvider estimate_ratio(const Eigen::MatrixXd& source_x,
                                       const Eigen::MatrixXd& target_x,
                                       const RatioEstimateOptions& options) {
    if (source_x.rows() == 0 || target_x.rows() == 0)
        throw std::invalid_argument("estimate_ratio: source and target must be nonempty");
    if (source_x.cols() != target_x.cols())
        throw std::invalid_argument("estimate_ratio: dimension mismatch");

    const Eigen::Index ns = source_x.rows(), nt = target_x.rows(), d = source_x.cols();
    const Eigen::Index n = ns + nt;

    Eigen::MatrixXd design(n, d + 1);
    design.col(0).setOnes();
    design.block(0, 1, ns, d) = source_x;
    design.block(ns, 1, nt, d) = target_x;
    Eigen::VectorXd label(n);
    label.head(ns).setZero();
    label.tail(nt).setOnes();

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
    bool converged = false;
    for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
        Eigen::VectorXd eta = design * theta;
        Eigen::VectorXd prob = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
        // keep the IRLS weights bounded away from 0 under separation
        prob = prob.array().max(1e-10).min(1.0 - 1e-10).matrix();

        Eigen::VectorXd grad = design.transpose() * (label - prob);
        if (options.l2 > 0.0) grad.tail(d) -= options.l2 * theta.tail(d);
        if (grad.norm() < options.grad_tol) {
            converged = true;
            break;
        }

        Eigen::VectorXd irls_w = prob.array() * (1.0 - prob.array());
        Eigen::MatrixXd hess = design.transpose() * irls_w.asDiagonal() * design;
        if (options.l2 > 0.0) hess.diagonal().tail(d).array() += options.l2;
        hess.diagonal().array() += 1e-12; // Hessian can be near-singular under separation
        theta += hess.ldlt().solve(grad);
        if (!theta.allFinite()) throw std::runtime_error("estimate_ratio: optimizer diverged");
    }

    LikelihoodRatioProvider p;
    p.kind_ = LikelihoodRatioProvider::Kind::Estimated;
    p.intercept_ = theta(0);
    p.coef_ = theta.tail(d);
    p.class_ratio_ = static_cast<double>(ns) / static_cast<double>(nt);
    p.prob_clip_ = options.prob_clip;
    p.separation_ = !converged;
    return p;
}

NormalizedWeights normalize_weights(const Eigen::VectorXd& w_cal, double w_test) {
    if (!w_cal.allFinite() || !std::isfinite(w_test))
        throw std::invalid_argument("normalize_weights: weights must be finite");
    if ((w_cal.array() < 0.0).any() || w_test < 0.0)
        throw std::invalid_argument("normalize_weights: weights must be nonnegative");
    const double total = w_cal.sum() + w_test;
    if (!(total > 0.0)) throw std::invalid_argument("normalize_weights: all weights are zero");
    NormalizedWeights out;
    out.p_cal = w_cal / total;
    out.p_test = w_test / total;
    return out;
}

double effective_sample_size(const Eigen::VectorXd& w_cal) {
    if (w_cal.size() == 0) throw std::invalid_argument("effective_sample_size: empty weights");
    if (!w_cal.allFinite() || (w_cal.array() < 0.0).any())
        throw std::invalid_argument("effective_sample_size: weights must be finite and nonnegative");
    const double l1 = w_cal.lpNorm<1>();
    const double l2sq = w_cal.squaredNorm();
    if (!(l2sq > 0.0)) throw std::invalid_argument("effective_sample_size: all weights are zero");
    return l1 * l1 / l2sq;
}

} // namespace wscps
