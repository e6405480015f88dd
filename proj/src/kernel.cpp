#include "pigp/kernel.hpp"

#include <cmath>
#include <complex>
#include <set>
#include <stdexcept>

#include "pigp/errors.hpp"

namespace pigp {

namespace {

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw std::invalid_argument(std::string(what) + " must be finite");
    }
}

// Eq.-(6)-shaped covariance, templated so the same expression serves the
// real evaluation and the complex-step parameter derivatives.
template <typename T>
T sdof_cov(double tau, T wn, T zeta, T amplitude) {
    using std::abs;
    using std::cos;
    using std::exp;
    using std::sin;
    using std::sqrt;
    const double at = std::abs(tau);
    const T wd = wn * sqrt(T(1.0) - zeta * zeta);
    const T decay = exp(-zeta * wn * at);
    const T osc = cos(wd * tau) + (zeta * wn / wd) * sin(wd * at);
    return (amplitude / (zeta * wn * wn * wn)) * decay * osc;
}

} // namespace

void SeParams::validate() const {
    if (!(signal_variance > 0.0)) {
        throw std::invalid_argument("signal_variance must be > 0");
    }
    if (length_scales.size() == 0) {
        throw std::invalid_argument("at least one length scale required");
    }
    for (Eigen::Index d = 0; d < length_scales.size(); ++d) {
        if (!(length_scales[d] > 0.0)) {
            throw std::invalid_argument("length_scales must be > 0");
        }
    }
    if (!(noise_variance >= 0.0)) {
        throw std::invalid_argument("noise_variance must be >= 0");
    }
}

void SdofParams::validate() const {
    if (!(natural_frequency > 0.0)) {
        throw std::invalid_argument("natural_frequency must be > 0");
    }
    // Eq. divides by zeta and omega_d; reject the degenerate limits.
    if (!(damping_ratio >= 1e-4 && damping_ratio <= 0.999)) {
        throw std::invalid_argument("damping_ratio must lie in [1e-4, 0.999]");
    }
    if (!(amplitude > 0.0)) {
        throw std::invalid_argument("amplitude must be > 0");
    }
}

double SdofParams::damped_frequency() const {
    return natural_frequency * std::sqrt(1.0 - damping_ratio * damping_ratio);
}

void ModalSet::validate() const {
    if (modes.empty()) {
        throw std::invalid_argument("modal set must be non-empty");
    }
    for (const auto& m : modes) m.validate();
    for (std::size_t i = 1; i < modes.size(); ++i) {
        if (!(modes[i].natural_frequency > modes[i - 1].natural_frequency)) {
            throw std::invalid_argument("modal natural frequencies must be strictly increasing");
        }
    }
}

double eval_se(const Eigen::Ref<const Vec>& xp, const Eigen::Ref<const Vec>& xq,
               bool same_index, const SeParams& params) {
    params.validate();
    if (xp.size() != params.length_scales.size() || xq.size() != params.length_scales.size()) {
        throw std::invalid_argument("eval_se: input dimension does not match length_scales");
    }
    double q = 0.0;
    for (Eigen::Index d = 0; d < xp.size(); ++d) {
        const double s = (xp[d] - xq[d]) / params.length_scales[d];
        q += s * s;
    }
    double k = params.signal_variance * std::exp(-0.5 * q);
    if (same_index) k += params.noise_variance;
    return k;
}

double eval_sdof(double tau, const SdofParams& params) {
    check_finite(tau, "tau");
    params.validate();
    return sdof_cov<double>(tau, params.natural_frequency, params.damping_ratio,
                            params.amplitude);
}

double eval_mdof(double tau, const ModalSet& modes) {
    modes.validate();
    double k = 0.0;
    for (const auto& m : modes.modes) k += eval_sdof(tau, m);
    return k;
}

Mat Kernel::gram(const Mat& rows, const Mat& cols, bool match_diagonal) const {
    if (rows.cols() != input_dim() || cols.cols() != input_dim()) {
        throw std::invalid_argument("gram: input dimension mismatch");
    }
    Mat K(rows.rows(), cols.rows());
    const bool symmetric = (&rows == &cols) || (rows.rows() == cols.rows() && rows.isApprox(cols));
    if (symmetric) {
        for (Eigen::Index i = 0; i < rows.rows(); ++i) {
            for (Eigen::Index j = i; j < cols.rows(); ++j) {
                const double v = eval(rows.row(i), cols.row(j), match_diagonal && i == j);
                K(i, j) = v;
                K(j, i) = v;
            }
        }
    } else {
        for (Eigen::Index i = 0; i < rows.rows(); ++i) {
            for (Eigen::Index j = 0; j < cols.rows(); ++j) {
                K(i, j) = eval(rows.row(i), cols.row(j), match_diagonal && i == j);
            }
        }
    }
    return K;
}

// ---------------------------------------------------------------------------
// SquaredExponentialKernel

SquaredExponentialKernel::SquaredExponentialKernel(double signal_variance, Vec length_scales)
    : signal_variance_(signal_variance), length_scales_(std::move(length_scales)) {
    SeParams p{signal_variance_, length_scales_, 0.0};
    p.validate();
}

double SquaredExponentialKernel::eval(const Eigen::Ref<const Vec>& xp,
                                      const Eigen::Ref<const Vec>& xq, bool) const {
    if (xp.size() != length_scales_.size() || xq.size() != length_scales_.size()) {
        throw std::invalid_argument("se: input dimension mismatch");
    }
    double q = 0.0;
    for (Eigen::Index d = 0; d < xp.size(); ++d) {
        const double s = (xp[d] - xq[d]) / length_scales_[d];
        q += s * s;
    }
    return signal_variance_ * std::exp(-0.5 * q);
}

Vec SquaredExponentialKernel::log_params() const {
    Vec lp(n_params());
    lp[0] = std::log(signal_variance_);
    for (Eigen::Index d = 0; d < length_scales_.size(); ++d) {
        lp[d + 1] = std::log(length_scales_[d]);
    }
    return lp;
}

KernelPtr SquaredExponentialKernel::with_log_params(const Eigen::Ref<const Vec>& lp) const {
    if (lp.size() != n_params()) {
        throw std::invalid_argument("se: parameter vector size mismatch");
    }
    Vec ls = lp.tail(length_scales_.size()).array().exp();
    return std::make_shared<SquaredExponentialKernel>(std::exp(lp[0]), std::move(ls));
}

std::vector<std::string> SquaredExponentialKernel::param_names() const {
    std::vector<std::string> names{"se.signal_variance"};
    for (Eigen::Index d = 0; d < length_scales_.size(); ++d) {
        names.push_back("se.length_scale[" + std::to_string(d) + "]");
    }
    return names;
}

std::vector<Mat> SquaredExponentialKernel::gram_gradients(const Mat& X) const {
    const Mat K = gram(X, X, false);
    std::vector<Mat> grads;
    grads.reserve(n_params());
    grads.push_back(K);   // k is linear in sigma_y^2, so dK/dlog(sigma_y^2) = K
    for (Eigen::Index d = 0; d < length_scales_.size(); ++d) {
        Mat G(X.rows(), X.rows());
        const double inv_l2 = 1.0 / (length_scales_[d] * length_scales_[d]);
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            for (Eigen::Index j = 0; j < X.rows(); ++j) {
                const double diff = X(i, d) - X(j, d);
                G(i, j) = K(i, j) * diff * diff * inv_l2;
            }
        }
        grads.push_back(std::move(G));
    }
    return grads;
}

// ---------------------------------------------------------------------------
// WhiteNoiseKernel

WhiteNoiseKernel::WhiteNoiseKernel(double noise_variance, int input_dim)
    : noise_variance_(noise_variance), input_dim_(input_dim) {
    if (!(noise_variance_ > 0.0)) {
        throw std::invalid_argument("white-noise variance must be > 0");
    }
    if (input_dim_ < 1) {
        throw std::invalid_argument("input_dim must be >= 1");
    }
}

double WhiteNoiseKernel::eval(const Eigen::Ref<const Vec>&, const Eigen::Ref<const Vec>&,
                              bool same_index) const {
    return same_index ? noise_variance_ : 0.0;
}

Vec WhiteNoiseKernel::log_params() const {
    Vec lp(1);
    lp[0] = std::log(noise_variance_);
    return lp;
}

KernelPtr WhiteNoiseKernel::with_log_params(const Eigen::Ref<const Vec>& lp) const {
    if (lp.size() != 1) {
        throw std::invalid_argument("white: parameter vector size mismatch");
    }
    return std::make_shared<WhiteNoiseKernel>(std::exp(lp[0]), input_dim_);
}

std::vector<std::string> WhiteNoiseKernel::param_names() const {
    return {"white.noise_variance"};
}

std::vector<Mat> WhiteNoiseKernel::gram_gradients(const Mat& X) const {
    return {Mat(noise_variance_ * Mat::Identity(X.rows(), X.rows()))};
}

// ---------------------------------------------------------------------------
// SdofKernel

SdofKernel::SdofKernel(SdofParams params) : params_(params) { params_.validate(); }

double SdofKernel::eval(const Eigen::Ref<const Vec>& xp, const Eigen::Ref<const Vec>& xq,
                        bool) const {
    if (xp.size() != 1 || xq.size() != 1) {
        throw std::invalid_argument("sdof: expects scalar time input");
    }
    const double tau = xp[0] - xq[0];
    check_finite(tau, "tau");
    return sdof_cov<double>(tau, params_.natural_frequency, params_.damping_ratio,
                            params_.amplitude);
}

Vec SdofKernel::log_params() const {
    Vec lp(3);
    lp << std::log(params_.natural_frequency), std::log(params_.damping_ratio),
        std::log(params_.amplitude);
    return lp;
}

KernelPtr SdofKernel::with_log_params(const Eigen::Ref<const Vec>& lp) const {
    if (lp.size() != 3) {
        throw std::invalid_argument("sdof: parameter vector size mismatch");
    }
    SdofParams p;
    p.natural_frequency = std::exp(lp[0]);
    p.damping_ratio = std::exp(lp[1]);
    p.amplitude = std::exp(lp[2]);
    return std::make_shared<SdofKernel>(p);
}

std::vector<std::string> SdofKernel::param_names() const {
    return {"sdof.natural_frequency", "sdof.damping_ratio", "sdof.amplitude"};
}

std::vector<Mat> SdofKernel::gram_gradients(const Mat& X) const {
    // Complex step in log-space for omega_n and zeta; amplitude enters
    // linearly so that derivative is the Gram itself.
    const Eigen::Index n = X.rows();
    std::vector<Mat> grads(3, Mat(n, n));
    const double h = 1e-20;
    using C = std::complex<double>;
    const C wn_c(params_.natural_frequency, 0.0);
    const C zeta_c(params_.damping_ratio, 0.0);
    const C a_c(params_.amplitude, 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            const double tau = X(i, 0) - X(j, 0);
            // perturbing log(theta) by i*h perturbs theta by theta*i*h
            const C k_wn = sdof_cov<C>(tau, wn_c * C(1.0, h), zeta_c, a_c);
            const C k_ze = sdof_cov<C>(tau, wn_c, zeta_c * C(1.0, h), a_c);
            const double k_re = k_wn.real();
            grads[0](i, j) = grads[0](j, i) = k_wn.imag() / h;
            grads[1](i, j) = grads[1](j, i) = k_ze.imag() / h;
            grads[2](i, j) = grads[2](j, i) = k_re;   // linear in amplitude
        }
    }
    return grads;
}

// ---------------------------------------------------------------------------
// MdofKernel

MdofKernel::MdofKernel(ModalSet modes) : modes_(std::move(modes)) { modes_.validate(); }

double MdofKernel::eval(const Eigen::Ref<const Vec>& xp, const Eigen::Ref<const Vec>& xq,
                        bool) const {
    if (xp.size() != 1 || xq.size() != 1) {
        throw std::invalid_argument("mdof: expects scalar time input");
    }
    const double tau = xp[0] - xq[0];
    check_finite(tau, "tau");
    double k = 0.0;
    for (const auto& m : modes_.modes) {
        k += sdof_cov<double>(tau, m.natural_frequency, m.damping_ratio, m.amplitude);
    }
    return k;
}

Vec MdofKernel::log_params() const {
    Vec lp(n_params());
    for (std::size_t i = 0; i < modes_.modes.size(); ++i) {
        const auto& m = modes_.modes[i];
        lp[3 * i + 0] = std::log(m.natural_frequency);
        lp[3 * i + 1] = std::log(m.damping_ratio);
        lp[3 * i + 2] = std::log(m.amplitude);
    }
    return lp;
}

KernelPtr MdofKernel::with_log_params(const Eigen::Ref<const Vec>& lp) const {
    if (lp.size() != n_params()) {
        throw std::invalid_argument("mdof: parameter vector size mismatch");
    }
    ModalSet out;
    for (std::size_t i = 0; i < modes_.modes.size(); ++i) {
        SdofParams p;
        p.natural_frequency = std::exp(lp[3 * i + 0]);
        p.damping_ratio = std::exp(lp[3 * i + 1]);
        p.amplitude = std::exp(lp[3 * i + 2]);
        out.modes.push_back(p);
    }
    return std::make_shared<MdofKernel>(std::move(out));
}

std::vector<std::string> MdofKernel::param_names() const {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < modes_.modes.size(); ++i) {
        const std::string tag = "mdof[" + std::to_string(i) + "].";
        names.push_back(tag + "natural_frequency");
        names.push_back(tag + "damping_ratio");
        names.push_back(tag + "amplitude");
    }
    return names;
}

std::vector<Mat> MdofKernel::gram_gradients(const Mat& X) const {
    std::vector<Mat> grads;
    grads.reserve(n_params());
    for (const auto& m : modes_.modes) {
        SdofKernel term(m);
        auto g = term.gram_gradients(X);
        for (auto& G : g) grads.push_back(std::move(G));
    }
    return grads;
}

// ---------------------------------------------------------------------------
// SumKernel

SumKernel::SumKernel(std::vector<KernelPtr> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) {
        throw std::invalid_argument("sum kernel needs at least one term");
    }
    const int dim = terms_.front()->input_dim();
    for (const auto& t : terms_) {
        if (t->input_dim() != dim) {
            throw std::invalid_argument("sum kernel terms must share an input domain");
        }
    }
}

int SumKernel::input_dim() const { return terms_.front()->input_dim(); }

double SumKernel::eval(const Eigen::Ref<const Vec>& xp, const Eigen::Ref<const Vec>& xq,
                       bool same_index) const {
    double k = 0.0;
    for (const auto& t : terms_) k += t->eval(xp, xq, same_index);
    return k;
}

int SumKernel::n_params() const {
    int n = 0;
    for (const auto& t : terms_) n += t->n_params();
    return n;
}

Vec SumKernel::log_params() const {
    Vec lp(n_params());
    Eigen::Index at = 0;
    for (const auto& t : terms_) {
        lp.segment(at, t->n_params()) = t->log_params();
        at += t->n_params();
    }
    return lp;
}

KernelPtr SumKernel::with_log_params(const Eigen::Ref<const Vec>& lp) const {
    if (lp.size() != n_params()) {
        throw std::invalid_argument("sum: parameter vector size mismatch");
    }
    std::vector<KernelPtr> out;
    Eigen::Index at = 0;
    for (const auto& t : terms_) {
        out.push_back(t->with_log_params(lp.segment(at, t->n_params())));
        at += t->n_params();
    }
    return std::make_shared<SumKernel>(std::move(out));
}

std::vector<std::string> SumKernel::param_names() const {
    std::vector<std::string> names;
    for (const auto& t : terms_) {
        for (auto& n : t->param_names()) names.push_back(n);
    }
    return names;
}

double SumKernel::diagonal_noise() const {
    double v = 0.0;
    for (const auto& t : terms_) v += t->diagonal_noise();
    return v;
}

std::vector<Mat> SumKernel::gram_gradients(const Mat& X) const {
    std::vector<Mat> grads;
    grads.reserve(n_params());
    for (const auto& t : terms_) {
        auto g = t->gram_gradients(X);
        for (auto& G : g) grads.push_back(std::move(G));
    }
    return grads;
}

// ---------------------------------------------------------------------------
// ProductKernel

ProductKernel::ProductKernel(std::vector<Factor> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) {
        throw std::invalid_argument("product kernel needs at least one factor");
    }
    std::set<int> seen;
    int max_dim = -1;
    for (const auto& f : factors_) {
        if (!f.kernel) throw std::invalid_argument("product factor kernel is null");
        if (static_cast<int>(f.slice.size()) != f.kernel->input_dim()) {
            throw std::invalid_argument("product factor slice size must match kernel input_dim");
        }
        for (int d : f.slice) {
            if (d < 0) throw std::invalid_argument("negative slice index");
            if (!seen.insert(d).second) {
                throw std::invalid_argument("product factor slices must be pairwise disjoint");
            }
            max_dim = std::max(max_dim, d);
        }
    }
    input_dim_ = max_dim + 1;
}

Mat ProductKernel::slice_columns(const Mat& X, const std::vector<int>& slice) const {
    Mat S(X.rows(), static_cast<Eigen::Index>(slice.size()));
    for (std::size_t c = 0; c < slice.size(); ++c) S.col(c) = X.col(slice[c]);
    return S;
}

double ProductKernel::eval(const Eigen::Ref<const Vec>& xp, const Eigen::Ref<const Vec>& xq,
                           bool same_index) const {
    if (xp.size() < input_dim_ || xq.size() < input_dim_) {
        throw std::invalid_argument("product: input dimension mismatch");
    }
    double k = 1.0;
    for (const auto& f : factors_) {
        Vec p(f.slice.size()), q(f.slice.size());
        for (std::size_t c = 0; c < f.slice.size(); ++c) {
            p[c] = xp[f.slice[c]];
            q[c] = xq[f.slice[c]];
        }
        k *= f.kernel->eval(p, q, same_index);
    }
    return k;
}

int ProductKernel::n_params() const {
    int n = 0;
    for (const auto& f : factors_) n += f.kernel->n_params();
    return n;
}

Vec ProductKernel::log_params() const {
    Vec lp(n_params());
    Eigen::Index at = 0;
    for (const auto& f : factors_) {
        lp.segment(at, f.kernel->n_params()) = f.kernel->log_params();
        at += f.kernel->n_params();
    }
    return lp;
}

KernelPtr ProductKernel::with_log_params(const Eigen::Ref<const Vec>& lp) const {
    if (lp.size() != n_params()) {
        throw std::invalid_argument("product: parameter vector size mismatch");
    }
    std::vector<Factor> out;
    Eigen::Index at = 0;
    for (const auto& f : factors_) {
        out.push_back({f.kernel->with_log_params(lp.segment(at, f.kernel->n_params())), f.slice});
        at += f.kernel->n_params();
    }
    return std::make_shared<ProductKernel>(std::move(out));
}

std::vector<std::string> ProductKernel::param_names() const {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        for (auto& n : factors_[i].kernel->param_names()) {
            names.push_back("factor[" + std::to_string(i) + "]." + n);
        }
    }
    return names;
}

std::vector<Mat> ProductKernel::gram_gradients(const Mat& X) const {
    // Product rule over factor Grams evaluated on their slices.
    std::vector<Mat> factor_grams;
    std::vector<Mat> factor_inputs;
    for (const auto& f : factors_) {
        Mat S = slice_columns(X, f.slice);
        factor_grams.push_back(f.kernel->gram(S, S, true));
        factor_inputs.push_back(std::move(S));
    }
    std::vector<Mat> grads;
    grads.reserve(n_params());
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        Mat others = Mat::Ones(X.rows(), X.rows());
        for (std::size_t j = 0; j < factors_.size(); ++j) {
            if (j != i) others = others.cwiseProduct(factor_grams[j]);
        }
        auto g = factors_[i].kernel->gram_gradients(factor_inputs[i]);
        for (auto& G : g) grads.push_back(G.cwiseProduct(others));
    }
    return grads;
}

// ---------------------------------------------------------------------------

KernelPtr combine_sum(std::vector<KernelPtr> kernels) {
    if (kernels.empty()) {
        throw std::invalid_argument("combine_sum: empty kernel list");
    }
    if (kernels.size() == 1) return kernels.front();
    return std::make_shared<SumKernel>(std::move(kernels));
}

KernelPtr combine_product(std::vector<ProductKernel::Factor> factors) {
    if (factors.empty()) {
        throw std::invalid_argument("combine_product: empty factor list");
    }
    return std::make_shared<ProductKernel>(std::move(factors));
}

KernelPtr make_se_with_noise(const SeParams& params) {
    params.validate();
    auto se = std::make_shared<SquaredExponentialKernel>(params.signal_variance,
                                                         params.length_scales);
    if (params.noise_variance <= 0.0) return se;
    auto noise = std::make_shared<WhiteNoiseKernel>(params.noise_variance,
                                                    se->input_dim());
    return combine_sum({se, noise});
}

} // namespace pigp
