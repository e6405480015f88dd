#include "pigp/gp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pigp/errors.hpp"

namespace pigp {

namespace {

constexpr double kJitterScales[] = {0.0, 1e-10, 1e-8, 1e-6};

struct Factorization {
    Mat L;
    double jitter;
};

// Cholesky of K + jitter*I, escalating through the jitter ladder.
Factorization robust_cholesky(const Mat& K) {
    const double scale = K.trace() / static_cast<double>(K.rows());
    std::ostringstream tried;
    for (double s : kJitterScales) {
        const double jitter = s * scale;
        Mat Kj = K;
        Kj.diagonal().array() += jitter;
        Eigen::LLT<Mat> llt(Kj);
        if (llt.info() == Eigen::Success) {
            return {Mat(llt.matrixL()), jitter};
        }
        tried << " " << jitter;
    }
    throw IllConditionedError("Gram factorization failed; jitter ladder tried:" + tried.str());
}

// With no noise on the matched diagonal, duplicate inputs make the Gram
// exactly singular; jitter would mask the modeling error rather than fix a
// rounding problem, so this is rejected before factorization.
void reject_duplicates_without_noise(const Kernel& kernel, const Mat& X) {
    if (kernel.diagonal_noise() > 0.0) return;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < X.rows(); ++j) {
            if (X.row(i) == X.row(j)) {
                throw IllConditionedError(
                    "duplicate training inputs with zero noise variance make the "
                    "Gram singular; jitter ladder not attempted");
            }
        }
    }
}

} // namespace

void TrainingSet::validate() const {
    if (X.rows() < 1) {
        throw std::invalid_argument("training set must contain at least one row");
    }
    if (X.rows() != y.size()) {
        throw std::invalid_argument("X row count must equal y length");
    }
    if (!X.allFinite() || !y.allFinite()) {
        throw std::invalid_argument("training set contains non-finite entries");
    }
}

FittedGp::FittedGp(KernelPtr kernel, MeanPtr mean, Mat X, Mat chol_lower, Vec weights,
                   double jitter_used)
    : kernel_(std::move(kernel)), mean_(std::move(mean)), X_(std::move(X)),
      L_(std::move(chol_lower)), weights_(std::move(weights)), jitter_used_(jitter_used) {}

FittedGp fit(KernelPtr kernel, MeanPtr mean, const TrainingSet& data) {
    data.validate();
    if (data.X.cols() != kernel->input_dim()) {
        throw std::invalid_argument("fit: kernel input_dim does not match data");
    }
    reject_duplicates_without_noise(*kernel, data.X);
    const Mat K = kernel->gram(data.X, data.X, true);
    auto [L, jitter] = robust_cholesky(K);
    const Vec r = data.y - mean->eval(data.X);
    Vec weights = L.triangularView<Eigen::Lower>().solve(r);
    L.triangularView<Eigen::Lower>().transpose().solveInPlace(weights);
    return FittedGp(std::move(kernel), std::move(mean), data.X, std::move(L),
                    std::move(weights), jitter);
}

Prediction FittedGp::predict(const Mat& X_star, bool want_full_cov) const {
    if (X_star.cols() != kernel_->input_dim()) {
        throw std::invalid_argument("predict: input dimension mismatch");
    }
    const Mat Ks = kernel_->gram(X_star, X_, false);   // M x N, no noise
    Prediction out;
    out.mean = mean_->eval(X_star) + Ks * weights_;

    // v = L^{-1} K(X, X*); posterior cov = K** - v^T v
    const Mat v = L_.triangularView<Eigen::Lower>().solve(Ks.transpose());
    if (want_full_cov) {
        Mat cov = kernel_->gram(X_star, X_star, false) - v.transpose() * v;
        cov = 0.5 * (cov + cov.transpose());
        Vec var = cov.diagonal().cwiseMax(0.0);
        cov.diagonal() = var;
        out.variance = var;
        out.full_covariance = std::move(cov);
    } else {
        Vec var(X_star.rows());
        for (Eigen::Index i = 0; i < X_star.rows(); ++i) {
            var[i] = kernel_->eval(X_star.row(i), X_star.row(i), false) -
                     v.col(i).squaredNorm();
        }
        out.variance = var.cwiseMax(0.0);
    }
    return out;
}

LmlResult log_marginal_likelihood(const KernelPtr& kernel, const MeanPtr& mean,
                                  const TrainingSet& data) {
    data.validate();
    const Eigen::Index n = data.X.rows();
    const Mat K = kernel->gram(data.X, data.X, true);
    auto [L, jitter] = robust_cholesky(K);
    const Vec r = data.y - mean->eval(data.X);

    Vec alpha = L.triangularView<Eigen::Lower>().solve(r);
    const double quad = alpha.squaredNorm();
    L.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha);

    double logdet = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) logdet += 2.0 * std::log(L(i, i));

    LmlResult res;
    res.value = -0.5 * quad - 0.5 * logdet -
                0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);

    // grad_j = 0.5 * tr((alpha alpha^T - K^{-1}) dK/dtheta_j)
    Mat Kinv = Mat::Identity(n, n);
    L.triangularView<Eigen::Lower>().solveInPlace(Kinv);
    L.triangularView<Eigen::Lower>().transpose().solveInPlace(Kinv);
    const Mat inner = alpha * alpha.transpose() - Kinv;

    const auto grads = kernel->gram_gradients(data.X);
    res.gradient.resize(static_cast<Eigen::Index>(grads.size()));
    for (std::size_t j = 0; j < grads.size(); ++j) {
        res.gradient[static_cast<Eigen::Index>(j)] =
            0.5 * inner.cwiseProduct(grads[j]).sum();
    }
    return res;
}

} // namespace pigp
