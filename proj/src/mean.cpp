#include "pigp/mean.hpp"

#include <stdexcept>

#include "pigp/errors.hpp"

namespace pigp {

LinearMean::LinearMean(Vec weights, double intercept, std::vector<int> covariate_slice)
    : weights_(std::move(weights)), intercept_(intercept),
      covariate_slice_(std::move(covariate_slice)) {
    if (static_cast<std::size_t>(weights_.size()) != covariate_slice_.size()) {
        throw std::invalid_argument("linear mean: one weight per covariate required");
    }
}

Vec LinearMean::eval(const Mat& X) const {
    for (int d : covariate_slice_) {
        if (d < 0 || d >= X.cols()) {
            throw std::invalid_argument("linear mean: covariate slice out of range");
        }
    }
    Vec m = Vec::Constant(X.rows(), intercept_);
    for (std::size_t c = 0; c < covariate_slice_.size(); ++c) {
        m += weights_[c] * X.col(covariate_slice_[c]);
    }
    return m;
}

MeanPtr fit_linear_mean(const Mat& X, const Vec& y, const std::vector<int>& covariate_slice) {
    if (X.rows() != y.size()) {
        throw std::invalid_argument("fit_linear_mean: X and y row counts differ");
    }
    if (X.rows() < 2) {
        throw DegenerateDataError("fit_linear_mean: need at least two observations");
    }
    for (int d : covariate_slice) {
        if (d < 0 || d >= X.cols()) {
            throw std::invalid_argument("fit_linear_mean: covariate slice out of range");
        }
    }
    const Eigen::Index p = static_cast<Eigen::Index>(covariate_slice.size());
    Mat A(X.rows(), p + 1);
    A.col(0).setOnes();
    for (Eigen::Index c = 0; c < p; ++c) A.col(c + 1) = X.col(covariate_slice[c]);

    Eigen::ColPivHouseholderQR<Mat> qr(A);
    qr.setThreshold(1e-10);
    if (qr.rank() < A.cols()) {
        throw DegenerateDataError("fit_linear_mean: rank-deficient design matrix");
    }
    Vec beta = qr.solve(y);
    return std::make_shared<LinearMean>(beta.tail(p), beta[0], covariate_slice);
}

} // namespace pigp
