#include "pigp/simulate.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

#include "pigp/errors.hpp"

namespace pigp {

void SdofSystem::validate() const {
    if (!(mass > 0.0) || !(stiffness > 0.0)) {
        throw std::invalid_argument("mass and stiffness must be > 0");
    }
    if (!(damping >= 0.0)) {
        throw std::invalid_argument("damping must be >= 0");
    }
    if (!(forcing_variance >= 0.0)) {
        throw std::invalid_argument("forcing_variance must be >= 0");
    }
    const double zeta = damping_ratio();
    if (!(zeta > 0.0 && zeta < 1.0)) {
        throw std::invalid_argument("derived damping ratio must lie in (0,1)");
    }
}

double SdofSystem::natural_frequency() const { return std::sqrt(stiffness / mass); }

double SdofSystem::damping_ratio() const {
    return damping / (2.0 * std::sqrt(stiffness * mass));
}

SdofParams SdofSystem::covariance_params() const {
    SdofParams p;
    p.natural_frequency = natural_frequency();
    p.damping_ratio = damping_ratio();
    p.amplitude = forcing_variance / (4.0 * mass * mass);
    return p;
}

Trajectory simulate_sdof(const SdofSystem& system, double dt, int n_steps,
                         std::uint64_t seed) {
    system.validate();
    if (n_steps < 1) {
        throw std::invalid_argument("n_steps must be >= 1");
    }
    const double wn = system.natural_frequency();
    if (!(dt > 0.0) || dt > 0.1 * (2.0 * M_PI / wn)) {
        throw std::invalid_argument("dt must satisfy 0 < dt <= 0.1 * (2 pi / omega_n)");
    }
    const double zeta = system.damping_ratio();
    const double q = system.forcing_variance / (system.mass * system.mass);

    Trajectory traj;
    traj.seed = seed;
    traj.times = Vec::LinSpaced(n_steps, 0.0, dt * (n_steps - 1));
    traj.values = Mat::Zero(n_steps, 1);
    if (system.forcing_variance == 0.0) {
        return traj;   // stationary distribution is the zero state
    }

    Eigen::Matrix2d A;
    A << 0.0, 1.0, -wn * wn, -2.0 * zeta * wn;
    const Eigen::Matrix2d F = (A * dt).exp();

    // Stationary covariance of (y, y') under intensity-q forcing on y''.
    Eigen::Matrix2d Pinf = Eigen::Matrix2d::Zero();
    Pinf(0, 0) = q / (4.0 * zeta * wn * wn * wn);
    Pinf(1, 1) = q / (4.0 * zeta * wn);

    // Per-step process noise; exact for the stationary system.
    Eigen::Matrix2d Qd = Pinf - F * Pinf * F.transpose();
    Qd = 0.5 * (Qd + Qd.transpose());
    Eigen::LLT<Eigen::Matrix2d> llt(Qd);
    if (llt.info() != Eigen::Success) {
        Qd.diagonal().array() += 1e-14 * Pinf.trace();
        llt.compute(Qd);
        if (llt.info() != Eigen::Success) {
            throw NumericError("process-noise covariance is not positive definite");
        }
    }
    const Eigen::Matrix2d Lq = llt.matrixL();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&]() {
        Eigen::Vector2d xi;
        xi << normal(rng), normal(rng);
        return xi;
    };

    Eigen::Vector2d z;
    z << std::sqrt(Pinf(0, 0)) * normal(rng), std::sqrt(Pinf(1, 1)) * normal(rng);
    traj.values(0, 0) = z[0];
    for (int k = 1; k < n_steps; ++k) {
        z = F * z + Lq * draw();
        traj.values(k, 0) = z[0];
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Cantilever beam

void BeamSpec::validate() const {
    if (!(length > 0.0)) {
        throw std::invalid_argument("beam length must be > 0");
    }
    if (n_modes < 1) {
        throw std::invalid_argument("n_modes must be >= 1");
    }
    if (damping_ratios.size() != static_cast<std::size_t>(n_modes)) {
        throw std::invalid_argument("one damping ratio per mode required");
    }
    for (double z : damping_ratios) {
        if (!(z > 0.0 && z < 1.0)) {
            throw std::invalid_argument("modal damping ratios must lie in (0,1)");
        }
    }
    if (!modal_frequencies.empty() &&
        modal_frequencies.size() != static_cast<std::size_t>(n_modes)) {
        throw std::invalid_argument("modal_frequencies must be empty or one per mode");
    }
    if (impulse_location < 0.0 || impulse_location > length) {
        throw std::invalid_argument("impulse_location must lie on the beam");
    }
}

std::vector<double> cantilever_roots(int n_modes) {
    std::vector<double> roots;
    roots.reserve(n_modes);
    auto f = [](double b) { return std::cos(b) * std::cosh(b) + 1.0; };
    for (int i = 1; i <= n_modes; ++i) {
        double lo = (2 * i - 1) * M_PI / 2.0 - 1.0;
        double hi = (2 * i - 1) * M_PI / 2.0 + 1.0;
        if (lo < 0.0) lo = 0.5;
        double flo = f(lo), fhi = f(hi);
        if (flo * fhi > 0.0) {
            throw NumericError("cantilever root bracketing failed for mode " + std::to_string(i));
        }
        while (hi - lo > 1e-12) {
            const double mid = 0.5 * (lo + hi);
            const double fm = f(mid);
            if (flo * fm <= 0.0) {
                hi = mid;
                fhi = fm;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        roots.push_back(0.5 * (lo + hi));
    }
    return roots;
}

std::vector<double> BeamSpec::frequencies() const {
    if (!modal_frequencies.empty()) return modal_frequencies;
    const auto roots = cantilever_roots(n_modes);
    std::vector<double> w(n_modes);
    for (int i = 0; i < n_modes; ++i) {
        const double ratio = (roots[i] * roots[i]) / (roots[0] * roots[0]);
        w[i] = fundamental_frequency * ratio;
    }
    return w;
}

namespace {

double clamped_free_shape(double beta, double sigma, double x) {
    return std::cosh(beta * x) - std::cos(beta * x) -
           sigma * (std::sinh(beta * x) - std::sin(beta * x));
}

} // namespace

Mat beam_mode_shapes(const BeamSpec& spec, const Vec& x_points) {
    spec.validate();
    for (Eigen::Index i = 0; i < x_points.size(); ++i) {
        if (x_points[i] < 0.0 || x_points[i] > spec.length) {
            throw std::invalid_argument("mode shape evaluation point off the beam");
        }
    }
    const auto roots = cantilever_roots(spec.n_modes);
    Mat shapes(x_points.size(), spec.n_modes);
    for (int m = 0; m < spec.n_modes; ++m) {
        const double bL = roots[m];
        const double beta = bL / spec.length;
        const double sigma = (std::cosh(bL) + std::cos(bL)) / (std::sinh(bL) + std::sin(bL));
        // normalize to unit max |phi| over a fine grid
        double max_abs = 0.0;
        for (int g = 0; g <= 2000; ++g) {
            const double x = spec.length * g / 2000.0;
            max_abs = std::max(max_abs, std::abs(clamped_free_shape(beta, sigma, x)));
        }
        for (Eigen::Index i = 0; i < x_points.size(); ++i) {
            shapes(i, m) = clamped_free_shape(beta, sigma, x_points[i]) / max_abs;
        }
    }
    return shapes;
}

Mat beam_modal_coordinates(const BeamSpec& spec, double dt, int n_steps) {
    spec.validate();
    if (!(dt > 0.0) || n_steps < 1) {
        throw std::invalid_argument("dt must be > 0 and n_steps >= 1");
    }
    const auto freqs = spec.frequencies();
    Vec x0(1);
    x0 << spec.impulse_location;
    const Mat phi0 = beam_mode_shapes(spec, x0);   // 1 x n_modes

    Mat q(n_steps, spec.n_modes);
    for (int m = 0; m < spec.n_modes; ++m) {
        const double wn = freqs[m];
        const double zeta = spec.damping_ratios[m];
        const double wd = wn * std::sqrt(1.0 - zeta * zeta);
        const double scale = spec.impulse_magnitude * phi0(0, m) / wd;  // unit modal mass
        for (int k = 0; k < n_steps; ++k) {
            const double t = k * dt;
            q(k, m) = scale * std::exp(-zeta * wn * t) * std::sin(wd * t);
        }
    }
    return q;
}

Trajectory simulate_beam(const BeamSpec& spec, double dt, int n_steps, const Vec& x_points) {
    const Mat q = beam_modal_coordinates(spec, dt, n_steps);
    const Mat shapes = beam_mode_shapes(spec, x_points);
    Trajectory traj;
    traj.times = Vec::LinSpaced(n_steps, 0.0, dt * (n_steps - 1));
    traj.values = q * shapes.transpose();   // n_steps x n_points
    return traj;
}

// ---------------------------------------------------------------------------
// Synthetic bridge-like series

BridgeSeries synth_bridge_series(std::uint64_t seed, int n_days, const BridgeConfig& config) {
    if (n_days < 60) {
        throw std::invalid_argument("synth_bridge_series: n_days must be >= 60");
    }
    const int n = static_cast<int>(n_days * config.samples_per_day);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    BridgeSeries series;
    series.generating = config;
    series.data.X.resize(n, 2);
    series.data.y.resize(n);
    for (int k = 0; k < n; ++k) {
        const double t = k / config.samples_per_day;   // days
        // seasonal decline from a warm start plus a daily cycle
        const double temp = 10.0 + 8.0 * std::cos(2.0 * M_PI * t / 365.0) +
                            2.5 * std::sin(2.0 * M_PI * t) + 0.3 * normal(rng);
        // quadrature phase keeps the residual uncorrelated with the daily
        // temperature cycle, so the linear slope stays identifiable
        const double residual = config.residual_amplitude * std::cos(2.0 * M_PI * t) *
                                (1.0 + 0.2 * std::cos(2.0 * M_PI * t / 7.0));
        const double y = config.slope * temp + config.intercept + residual +
                         config.noise_std * normal(rng);
        series.data.X(k, 0) = t;
        series.data.X(k, 1) = temp;
        series.data.y[k] = y;
    }
    return series;
}

} // namespace pigp
