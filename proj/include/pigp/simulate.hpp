#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "pigp/gp.hpp"
#include "pigp/kernel.hpp"

namespace pigp {

/// Mass-spring-damper under white-noise forcing of intensity sigma^2:
///   m y'' + c y' + k y = F(t),  E[F(t)F(t')] = sigma^2 delta(t-t').
struct SdofSystem {
    double mass = 1.0;              // kg
    double damping = 0.1;           // N s/m
    double stiffness = 1.0;         // N/m
    double forcing_variance = 1.0;  // N^2 s (white-noise intensity)

    void validate() const;
    double natural_frequency() const;   // omega_n = sqrt(k/m)
    double damping_ratio() const;       // zeta = c / (2 sqrt(k m))
    /// Matching SDOF covariance parameters: a = sigma^2 / (4 m^2).
    SdofParams covariance_params() const;
};

struct Trajectory {
    Vec times;
    Mat values;        // n_steps x n_outputs
    std::uint64_t seed = 0;
};

/// Sample the displacement of the linear stochastic state-space system by
/// exact discretization (matrix exponential transition, per-step noise from
/// the stationary Lyapunov solution), initialized from the stationary
/// distribution so the output is stationary from step 0.
Trajectory simulate_sdof(const SdofSystem& system, double dt, int n_steps,
                         std::uint64_t seed);

/// Euler-Bernoulli cantilever beam described by its modal content.
struct BeamSpec {
    double length = 1.0;                    // m
    int n_modes = 2;
    std::vector<double> damping_ratios;     // per mode
    double fundamental_frequency = 2.0 * 3.14159265358979323846;  // rad/s
    std::vector<double> modal_frequencies;  // rad/s; derived from the
                                            // Euler-Bernoulli ratios when empty
    double impulse_location = 1.0;          // m, along the beam
    double impulse_magnitude = 1.0;

    void validate() const;
    /// Modal frequencies, supplied or (beta_i/beta_1)^2 x fundamental.
    std::vector<double> frequencies() const;
};

/// Roots beta_i * L of cos(bL)cosh(bL) = -1, increasing, bisected to 1e-12.
std::vector<double> cantilever_roots(int n_modes);

/// Clamped-free mode shapes at x_points, normalized to unit max |phi|.
Mat beam_mode_shapes(const BeamSpec& spec, const Vec& x_points);

/// Modal superposition response to the impulse: y(x,t) = sum_i phi_i(x) q_i(t)
/// with q_i the damped free response of the modal oscillator.
Trajectory simulate_beam(const BeamSpec& spec, double dt, int n_steps,
                         const Vec& x_points);

/// Modal coordinates q_i(t) alone (n_steps x n_modes), for oracles.
Mat beam_modal_coordinates(const BeamSpec& spec, double dt, int n_steps);

/// Synthetic seasonal bridge-like series: inputs (time [days], temperature
/// [deg C]), target = linear-in-temperature displacement + smooth daily
/// residual + observation noise.
struct BridgeConfig {
    double slope = -0.8;            // displacement per deg C
    double intercept = 4.0;
    double residual_amplitude = 0.35;
    double noise_std = 0.05;
    double samples_per_day = 8.0;
};

struct BridgeSeries {
    TrainingSet data;               // columns: time, temperature
    BridgeConfig generating;        // coefficients actually used
};

BridgeSeries synth_bridge_series(std::uint64_t seed, int n_days,
                                 const BridgeConfig& config = {});

} // namespace pigp
