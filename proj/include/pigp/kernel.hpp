#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

namespace pigp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class Kernel;
using KernelPtr = std::shared_ptr<const Kernel>;

/// Hyperparameters of the squared-exponential kernel with an additive
/// white-noise term. One length scale per input dimension.
struct SeParams {
    double signal_variance = 1.0;      // sigma_y^2, target units^2
    Vec length_scales;                 // l_d > 0, input units
    double noise_variance = 0.0;       // sigma_n^2, target units^2

    void validate() const;
};

/// Parameters of the stationary covariance of an underdamped oscillator
/// under white-noise forcing. The forcing variance and mass enter only
/// through amplitude = sigma^2 / (4 m^2), so they are a single parameter.
struct SdofParams {
    double natural_frequency = 1.0;    // omega_n, rad/s
    double damping_ratio = 0.05;       // zeta, dimensionless, in [1e-4, 0.999]
    double amplitude = 1.0;            // a = sigma^2 / (4 m^2)

    void validate() const;
    double damped_frequency() const;   // omega_d = omega_n * sqrt(1 - zeta^2)
};

/// Ordered set of oscillator modes; natural frequencies strictly increasing.
struct ModalSet {
    std::vector<SdofParams> modes;

    void validate() const;
};

/// Scalar evaluation of the squared-exponential + white-noise covariance.
/// The noise term contributes only when the two indices refer to the same
/// observation (same_index).
double eval_se(const Eigen::Ref<const Vec>& xp, const Eigen::Ref<const Vec>& xq,
               bool same_index, const SeParams& params);

/// Stationary autocovariance of an SDOF oscillator response at lag tau:
///   (a / (zeta * wn^3)) * exp(-zeta*wn*|tau|)
///     * (cos(wd*tau) + (zeta*wn/wd) * sin(wd*|tau|))
double eval_sdof(double tau, const SdofParams& params);

/// Sum of eval_sdof over all modes.
double eval_mdof(double tau, const ModalSet& modes);

/// Immutable covariance function over a declared input dimensionality.
///
/// Positive hyperparameters are exposed in log-space as a flat vector so
/// that the marginal-likelihood optimizer can treat every kernel family
/// uniformly. with_log_params returns a new kernel; instances never mutate.
class Kernel {
public:
    virtual ~Kernel() = default;

    virtual int input_dim() const = 0;

    /// k(xp, xq); same_index marks evaluations at a matched observation
    /// (white-noise terms contribute only there).
    virtual double eval(const Eigen::Ref<const Vec>& xp,
                        const Eigen::Ref<const Vec>& xq,
                        bool same_index) const = 0;

    virtual int n_params() const = 0;
    virtual Vec log_params() const = 0;
    virtual KernelPtr with_log_params(const Eigen::Ref<const Vec>& lp) const = 0;
    virtual std::vector<std::string> param_names() const = 0;

    /// Total white-noise variance this kernel places on the matched
    /// diagonal; used to report observation-space predictive bands.
    virtual double diagonal_noise() const { return 0.0; }

    /// Pairwise Gram matrix; same_index is set only when match_diagonal
    /// and i == j (training Gram K(X,X); cross-Grams carry no noise).
    virtual Mat gram(const Mat& rows, const Mat& cols, bool match_diagonal) const;

    /// One matrix per free parameter: d Gram(X,X) / d(log-parameter),
    /// with the matched diagonal included (training Gram convention).
    virtual std::vector<Mat> gram_gradients(const Mat& X) const = 0;

    virtual std::string name() const = 0;
};

class SquaredExponentialKernel : public Kernel {
public:
    SquaredExponentialKernel(double signal_variance, Vec length_scales);

    int input_dim() const override { return static_cast<int>(length_scales_.size()); }
    double eval(const Eigen::Ref<const Vec>& xp, const Eigen::Ref<const Vec>& xq,
                bool same_index) const override;
    int n_params() const override { return 1 + static_cast<int>(length_scales_.size()); }
    Vec log_params() const override;
    KernelPtr with_log_params(const Eigen::Ref<const Vec>& lp) const override;
    std::vector<std::string> param_names() const override;
    std::vector<Mat> gram_gradients(const Mat& X) const override;
    std::string name() const override { return "se"; }

    double signal_variance() const { return signal_variance_; }
    const Vec& length_scales() const { return length_scales_; }

private:
    double signal_variance_;
    Vec length_scales_;
};

class WhiteNoiseKernel : public Kernel {
public:
    WhiteNoiseKernel(double noise_variance, int input_dim);

    int input_dim() const override { return input_dim_; }
    double eval(const Eigen::Ref<const Vec>& xp, const Eigen::Ref<const Vec>& xq,
                bool same_index) const override;
    int n_params() const override { return 1; }
    Vec log_params() const override;
    KernelPtr with_log_params(const Eigen::Ref<const Vec>& lp) const override;
    std::vector<std::string> param_names() const override;
    double diagonal_noise() const override { return noise_variance_; }
    std::vector<Mat> gram_gradients(const Mat& X) const override;
    std::string name() const override { return "white"; }

    double noise_variance() const { return noise_variance_; }

private:
    double noise_variance_;
    int input_dim_;
};

/// Stationary SDOF oscillator covariance over a scalar time input.
class SdofKernel : public Kernel {
public:
    explicit SdofKernel(SdofParams params);

    int input_dim() const override { return 1; }
    double eval(const Eigen::Ref<const Vec>& xp, const Eigen::Ref<const Vec>& xq,
                bool same_index) const override;
    int n_params() const override { return 3; }
    Vec log_params() const override;
    KernelPtr with_log_params(const Eigen::Ref<const Vec>& lp) const override;
    std::vector<std::string> param_names() const override;
    std::vector<Mat> gram_gradients(const Mat& X) const override;
    std::string name() const override { return "sdof"; }

    const SdofParams& params() const { return params_; }

private:
    SdofParams params_;
};

/// Sum of SDOF covariances, one per dominant mode.
class MdofKernel : public Kernel {
public:
    explicit MdofKernel(ModalSet modes);

    int input_dim() const override { return 1; }
    double eval(const Eigen::Ref<const Vec>& xp, const Eigen::Ref<const Vec>& xq,
                bool same_index) const override;
    int n_params() const override { return 3 * static_cast<int>(modes_.modes.size()); }
    Vec log_params() const override;
    KernelPtr with_log_params(const Eigen::Ref<const Vec>& lp) const override;
    std::vector<std::string> param_names() const override;
    std::vector<Mat> gram_gradients(const Mat& X) const override;
    std::string name() const override { return "mdof"; }

    const ModalSet& modes() const { return modes_; }

private:
    ModalSet modes_;
};

class SumKernel : public Kernel {
public:
    explicit SumKernel(std::vector<KernelPtr> terms);

    int input_dim() const override;
    double eval(const Eigen::Ref<const Vec>& xp, const Eigen::Ref<const Vec>& xq,
                bool same_index) const override;
    int n_params() const override;
    Vec log_params() const override;
    KernelPtr with_log_params(const Eigen::Ref<const Vec>& lp) const override;
    std::vector<std::string> param_names() const override;
    double diagonal_noise() const override;
    std::vector<Mat> gram_gradients(const Mat& X) const override;
    std::string name() const override { return "sum"; }

    const std::vector<KernelPtr>& terms() const { return terms_; }

private:
    std::vector<KernelPtr> terms_;
};

/// Product of kernels acting on pairwise-disjoint slices of the input:
///   k((t,x),(t',x')) = k_t(t,t') * k_x(x,x').
/// On a full Cartesian grid the Gram is the Kronecker product of the
/// factor Grams.
class ProductKernel : public Kernel {
public:
    struct Factor {
        KernelPtr kernel;
        std::vector<int> slice;   // input columns this factor reads
    };

    explicit ProductKernel(std::vector<Factor> factors);

    int input_dim() const override { return input_dim_; }
    double eval(const Eigen::Ref<const Vec>& xp, const Eigen::Ref<const Vec>& xq,
                bool same_index) const override;
    int n_params() const override;
    Vec log_params() const override;
    KernelPtr with_log_params(const Eigen::Ref<const Vec>& lp) const override;
    std::vector<std::string> param_names() const override;
    std::vector<Mat> gram_gradients(const Mat& X) const override;
    std::string name() const override { return "product"; }

    const std::vector<Factor>& factors() const { return factors_; }

private:
    Mat slice_columns(const Mat& X, const std::vector<int>& slice) const;

    std::vector<Factor> factors_;
    int input_dim_;
};

/// Elementwise sum of constituent kernels over a shared input domain.
KernelPtr combine_sum(std::vector<KernelPtr> kernels);

/// Product across disjoint input slices.
KernelPtr combine_product(std::vector<ProductKernel::Factor> factors);

/// Eq.-style SE kernel with its white-noise term attached: Sum(SE, WhiteNoise).
KernelPtr make_se_with_noise(const SeParams& params);

} // namespace pigp
