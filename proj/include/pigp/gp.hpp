#pragma once

#include <Eigen/Dense>
#include <optional>

#include "pigp/kernel.hpp"
#include "pigp/mean.hpp"

namespace pigp {

struct TrainingSet {
    Mat X;   // N x D inputs
    Vec y;   // N targets

    void validate() const;
};

struct Prediction {
    Vec mean;
    Vec variance;                       // latent-function variance, >= 0
    std::optional<Mat> full_covariance; // when requested; diagonal == variance
};

/// Immutable conditioned GP: Cholesky factor of K(X,X) (+ jitter) and the
/// precomputed weights (K + jitter I)^{-1} (y - m(X)).
class FittedGp {
public:
    FittedGp(KernelPtr kernel, MeanPtr mean, Mat X, Mat chol_lower, Vec weights,
             double jitter_used);

    /// Posterior mean/variance at test inputs; variance is that of the
    /// latent function (observation noise excluded).
    Prediction predict(const Mat& X_star, bool want_full_cov = false) const;

    const KernelPtr& kernel() const { return kernel_; }
    const MeanPtr& mean() const { return mean_; }
    const Mat& training_inputs() const { return X_; }
    const Mat& cholesky_factor() const { return L_; }
    const Vec& weights() const { return weights_; }
    double jitter_used() const { return jitter_used_; }

private:
    KernelPtr kernel_;
    MeanPtr mean_;
    Mat X_;
    Mat L_;
    Vec weights_;
    double jitter_used_;
};

/// Condition a GP on data. The training Gram is K(X,X) with matched-diagonal
/// noise included; factorization escalates jitter through
/// {0, 1e-10, 1e-8, 1e-6} * trace/N until the Cholesky succeeds.
FittedGp fit(KernelPtr kernel, MeanPtr mean, const TrainingSet& data);

struct LmlResult {
    double value;
    Vec gradient;   // d value / d log-parameters
};

/// Log marginal likelihood of the data under the kernel/mean, with its
/// gradient over the kernel's log-parameters (standard trace identity).
LmlResult log_marginal_likelihood(const KernelPtr& kernel, const MeanPtr& mean,
                                  const TrainingSet& data);

} // namespace pigp
