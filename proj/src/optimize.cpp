#include "pigp/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "pigp/errors.hpp"

namespace pigp {

namespace {

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                           31, 37, 41, 43, 47, 53, 59, 61, 67, 71};

double halton(unsigned index, int base) {
    double f = 1.0, r = 0.0;
    unsigned i = index;
    while (i > 0) {
        f /= base;
        r += f * (i % base);
        i /= base;
    }
    return r;
}

struct Objective {
    const KernelPtr& family;
    const MeanPtr& mean;
    const TrainingSet& data;

    // Negative LML with gradient; failure marks ill-conditioned corners of
    // the box so line searches back away from them.
    bool eval(const Vec& lp, double& f, Vec& g) const {
        try {
            auto k = family->with_log_params(lp);
            auto lml = log_marginal_likelihood(k, mean, data);
            if (!std::isfinite(lml.value)) return false;
            f = -lml.value;
            g = -lml.gradient;
            return true;
        } catch (const IllConditionedError&) {
            return false;
        } catch (const std::invalid_argument&) {
            return false;
        }
    }

    // Value only; line searches do not need the gradient matrices.
    bool eval_value(const Vec& lp, double& f) const {
        try {
            auto k = family->with_log_params(lp);
            auto fitted = fit(k, mean, data);
            const Eigen::Index n = data.X.rows();
            const Vec r = data.y - mean->eval(data.X);
            const auto& L = fitted.cholesky_factor();
            const Vec alpha = L.triangularView<Eigen::Lower>().solve(r);
            double logdet = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) logdet += 2.0 * std::log(L(i, i));
            f = 0.5 * alpha.squaredNorm() + 0.5 * logdet +
                0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
            return std::isfinite(f);
        } catch (const IllConditionedError&) {
            return false;
        } catch (const std::invalid_argument&) {
            return false;
        }
    }
};

Vec clip(const Vec& x, const Vec& lo, const Vec& hi) {
    return x.cwiseMax(lo).cwiseMin(hi);
}

bool lex_less(const Vec& a, const Vec& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return false;
}

// L-BFGS (two-loop recursion) with iterates clipped to the log-space box.
StartTrace run_start(const Objective& obj, const Vec& start, const Vec& lo, const Vec& hi,
                     int max_iterations, double tolerance) {
    StartTrace trace;
    trace.start_log_params = start;

    Vec x = clip(start, lo, hi);
    double f;
    Vec g;
    if (!obj.eval(x, f, g)) {
        trace.failed = true;
        trace.final_log_params = x;
        trace.final_lml = -std::numeric_limits<double>::infinity();
        return trace;
    }

    std::deque<std::pair<Vec, Vec>> history;   // (s, y)
    const std::size_t memory = 8;

    int iter = 0;
    for (; iter < max_iterations; ++iter) {
        // two-loop recursion
        Vec d = -g;
        std::vector<double> alpha(history.size());
        for (std::size_t h = history.size(); h-- > 0;) {
            const auto& [s, yk] = history[h];
            const double rho = 1.0 / yk.dot(s);
            alpha[h] = rho * s.dot(d);
            d -= alpha[h] * yk;
        }
        if (!history.empty()) {
            const auto& [s, yk] = history.back();
            d *= s.dot(yk) / yk.dot(yk);
        }
        for (std::size_t h = 0; h < history.size(); ++h) {
            const auto& [s, yk] = history[h];
            const double rho = 1.0 / yk.dot(s);
            d += (alpha[h] - rho * yk.dot(d)) * s;
        }
        if (d.dot(g) >= 0.0) d = -g;   // fall back to steepest descent

        double t = history.empty() ? std::min(1.0, 1.0 / std::max(1.0, g.norm())) : 1.0;
        bool accepted = false;
        Vec x_new;
        double f_new = 0.0;
        Vec g_new;
        for (int ls = 0; ls < 40; ++ls) {
            x_new = clip(x + t * d, lo, hi);
            const Vec step = x_new - x;
            if (step.norm() < 1e-15) break;
            if (obj.eval_value(x_new, f_new) && f_new <= f + 1e-4 * g.dot(step)) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted || !obj.eval(x_new, f_new, g_new)) {
            trace.converged = true;
            break;
        }
        const Vec s = x_new - x;
        const Vec yk = g_new - g;
        if (s.dot(yk) > 1e-12 * s.norm() * yk.norm()) {
            history.emplace_back(s, yk);
            if (history.size() > memory) history.pop_front();
        }
        const double improvement = f - f_new;
        x = x_new;
        f = f_new;
        g = g_new;
        if (improvement <= tolerance * (std::abs(f) + 1e-12)) {
            trace.converged = true;
            ++iter;
            break;
        }
    }
    trace.iterations = iter;
    trace.final_log_params = x;
    trace.final_lml = -f;
    return trace;
}

} // namespace

void Bounds::validate() const {
    if (lower.size() != upper.size()) {
        throw std::invalid_argument("bounds: lower/upper size mismatch");
    }
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
        if (!(lower[i] < upper[i])) {
            throw std::invalid_argument("bounds: lower must be < upper for every parameter");
        }
        if (!(lower[i] > 0.0)) {
            throw std::invalid_argument("bounds: positivity-constrained parameters need positive bounds");
        }
    }
}

OptimizationResult optimize(const KernelPtr& kernel_family, const MeanPtr& mean,
                            const TrainingSet& data, const OptimizationSpec& spec) {
    spec.bounds.validate();
    data.validate();
    if (spec.n_starts < 1) {
        throw std::invalid_argument("n_starts must be >= 1");
    }
    const int dim = kernel_family->n_params();
    if (spec.bounds.lower.size() != dim) {
        throw std::invalid_argument("bounds dimension must match kernel parameter count");
    }
    if (dim > static_cast<int>(sizeof(kPrimes) / sizeof(kPrimes[0]))) {
        throw std::invalid_argument("too many parameters for the Halton start sequence");
    }
    const Vec lo = spec.bounds.lower.array().log();
    const Vec hi = spec.bounds.upper.array().log();

    Objective obj{kernel_family, mean, data};
    OptimizationResult result;
    result.best_lml = -std::numeric_limits<double>::infinity();

    for (int s = 0; s < spec.n_starts; ++s) {
        Vec start(dim);
        if (s == 0) {
            start = kernel_family->log_params();   // caller's initial guess
        } else {
            const unsigned idx = (spec.seed % 1024) + static_cast<unsigned>(s);
            for (int d = 0; d < dim; ++d) {
                start[d] = lo[d] + halton(idx, kPrimes[d]) * (hi[d] - lo[d]);
            }
        }
        StartTrace trace = run_start(obj, start, lo, hi, spec.max_iterations, spec.tolerance);
        const bool better =
            !trace.failed &&
            (trace.final_lml > result.best_lml ||
             (trace.final_lml == result.best_lml &&
              (result.best_log_params.size() == 0 ||
               lex_less(trace.final_log_params, result.best_log_params))));
        if (better) {
            result.best_lml = trace.final_lml;
            result.best_log_params = trace.final_log_params;
        }
        result.per_start_trace.push_back(std::move(trace));
    }

    if (!std::isfinite(result.best_lml)) {
        std::ostringstream msg;
        msg << "every optimizer start failed factorization (" << spec.n_starts << " starts)";
        throw OptimizationFailedError(msg.str());
    }
    result.best_kernel = kernel_family->with_log_params(result.best_log_params);
    return result;
}

Bounds default_bounds(const KernelPtr& kernel_family, const TrainingSet& data,
                      int time_column) {
    data.validate();
    if (data.X.rows() < 2) {
        throw DegenerateDataError("default_bounds: need at least two data points");
    }
    const double y_var = (data.y.array() - data.y.mean()).square().mean();
    if (!(y_var > 0.0)) {
        throw DegenerateDataError("default_bounds: targets have zero variance");
    }

    // median pairwise distance over (at most) the first 500 rows
    const Eigen::Index n = std::min<Eigen::Index>(data.X.rows(), 500);
    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            dists.push_back((data.X.row(i) - data.X.row(j)).norm());
        }
    }
    std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
    double median_dist = dists[dists.size() / 2];
    if (!(median_dist > 0.0)) median_dist = 1.0;

    // time-axis statistics for oscillator frequency bounds
    double omega_lo = 0.0, omega_hi = 0.0;
    if (time_column >= 0 && time_column < data.X.cols()) {
        std::vector<double> t(data.X.col(time_column).data(),
                              data.X.col(time_column).data() + data.X.rows());
        std::sort(t.begin(), t.end());
        const double span = t.back() - t.front();
        double dt_min = std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < t.size(); ++i) {
            const double dt = t[i] - t[i - 1];
            if (dt > 0.0 && dt < dt_min) dt_min = dt;
        }
        if (span > 0.0 && std::isfinite(dt_min)) {
            omega_lo = 2.0 * M_PI / span;
            omega_hi = M_PI / dt_min;   // Nyquist on the densest spacing
            if (omega_hi <= omega_lo) omega_hi = omega_lo * 10.0;
        }
    }

    const auto names = kernel_family->param_names();
    const int dim = static_cast<int>(names.size());
    Bounds b;
    b.lower.resize(dim);
    b.upper.resize(dim);

    int n_freq = 0;
    for (const auto& name : names) {
        if (name.find("natural_frequency") != std::string::npos) ++n_freq;
    }
    // disjoint geometric sub-ranges keep MDOF frequencies ordered
    int freq_index = 0;
    double mode_omega_centre = std::sqrt(std::max(omega_lo * omega_hi, 1.0));

    for (int i = 0; i < dim; ++i) {
        const std::string& name = names[i];
        if (name.find("length_scale") != std::string::npos) {
            b.lower[i] = 1e-2 * median_dist;
            b.upper[i] = 1e2 * median_dist;
        } else if (name.find("natural_frequency") != std::string::npos) {
            if (omega_hi <= 0.0) {
                throw DegenerateDataError("default_bounds: cannot derive frequency bounds");
            }
            const double ratio = omega_hi / omega_lo;
            const double lo_i = omega_lo * std::pow(ratio, double(freq_index) / n_freq);
            const double hi_i = omega_lo * std::pow(ratio, double(freq_index + 1) / n_freq);
            b.lower[i] = lo_i;
            b.upper[i] = hi_i;
            mode_omega_centre = std::sqrt(lo_i * hi_i);
            ++freq_index;
        } else if (name.find("damping_ratio") != std::string::npos) {
            b.lower[i] = 1e-3;
            b.upper[i] = 0.5;
        } else if (name.find("amplitude") != std::string::npos) {
            // a / (zeta * wn^3) is the variance at lag 0
            const double scale = 0.05 * std::pow(mode_omega_centre, 3);
            b.lower[i] = 1e-6 * y_var * scale;
            b.upper[i] = 1e2 * y_var * scale;
        } else {   // signal/noise variances
            b.lower[i] = 1e-6 * y_var;
            b.upper[i] = 1e2 * y_var;
        }
    }
    b.validate();
    return b;
}

} // namespace pigp
