#include <cmath>

#include "doctest.h"
#include "pigp/errors.hpp"
#include "pigp/optimize.hpp"
#include "pigp/simulate.hpp"

using namespace pigp;

namespace {

// SDOF ground truth: omega_n = 3 Hz equivalent, zeta = 0.05
SdofSystem truth_system() {
    SdofSystem s;
    s.mass = 1.0;
    s.stiffness = std::pow(2.0 * M_PI * 3.0, 2);
    s.damping = 2.0 * 0.05 * std::sqrt(s.stiffness * s.mass);
    s.forcing_variance = 1.0;
    return s;
}

TrainingSet sdof_training(int n, std::uint64_t seed) {
    auto traj = simulate_sdof(truth_system(), 0.01, n, seed);
    TrainingSet data;
    data.X = traj.times;
    data.y = traj.values.col(0);
    return data;
}

KernelPtr sdof_family() {
    auto sdof = std::make_shared<SdofKernel>(SdofParams{10.0, 0.05, 1.0});
    auto noise = std::make_shared<WhiteNoiseKernel>(1e-4, 1);
    return combine_sum({sdof, noise});
}

} // namespace

TEST_CASE("default_bounds formulas and sanity") {
    auto data = sdof_training(100, 7);
    auto family = sdof_family();
    auto b = default_bounds(family, data);

    const auto names = family->param_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        CHECK(b.lower[i] < b.upper[i]);
        if (names[i].find("natural_frequency") != std::string::npos) {
            // uniform 0.01 s grid: Nyquist cap pi / 0.01
            CHECK(b.upper[i] == doctest::Approx(M_PI / 0.01).epsilon(1e-6));
            CHECK(b.lower[i] == doctest::Approx(2.0 * M_PI / 0.99).epsilon(1e-6));
        }
        if (names[i].find("damping_ratio") != std::string::npos) {
            CHECK(b.lower[i] == doctest::Approx(1e-3));
            CHECK(b.upper[i] == doctest::Approx(0.5));
        }
    }

    TrainingSet tiny;
    tiny.X = Mat::Zero(1, 1);
    tiny.y = Vec::Zero(1);
    CHECK_THROWS_AS(default_bounds(family, tiny), DegenerateDataError);
}

TEST_CASE("optimize recovers SDOF natural frequency within 5 percent") {
    // 20 s record subsampled to 500 points; frequency resolution needs the
    // span, not the rate
    auto full = sdof_training(2000, 11);
    TrainingSet data;
    data.X.resize(500, 1);
    data.y.resize(500);
    for (int i = 0; i < 500; ++i) {
        data.X(i, 0) = full.X(4 * i, 0);
        data.y[i] = full.y[4 * i];
    }
    auto family = sdof_family();
    OptimizationSpec spec;
    spec.bounds = default_bounds(family, data);
    spec.n_starts = 6;
    spec.max_iterations = 150;
    spec.seed = 3;

    auto result = optimize(family, std::make_shared<ZeroMean>(), data, spec);

    // ascent property: best final >= LML at every start point
    for (const auto& t : result.per_start_trace) {
        CHECK(!t.failed);
        CHECK(result.best_lml >= t.final_lml - 1e-9);
    }

    const double wn_true = truth_system().natural_frequency();
    const double wn_hat = std::exp(result.best_log_params[0]);
    CHECK(std::abs(wn_hat - wn_true) / wn_true < 0.05);

    // recovered frequency sits strictly inside the default bounds
    CHECK(wn_hat > spec.bounds.lower[0]);
    CHECK(wn_hat < spec.bounds.upper[0]);

    // restarting from the optimum re-converges to it
    OptimizationSpec spec1 = spec;
    spec1.n_starts = 1;
    auto again = optimize(result.best_kernel, std::make_shared<ZeroMean>(), data, spec1);
    CHECK((again.best_log_params - result.best_log_params).cwiseAbs().maxCoeff() < 1e-3);
    CHECK(again.best_lml == doctest::Approx(result.best_lml).epsilon(1e-6));
}

TEST_CASE("determinism and monotone restarts") {
    auto data = sdof_training(120, 21);
    auto family = sdof_family();
    OptimizationSpec spec;
    spec.bounds = default_bounds(family, data);
    spec.n_starts = 3;
    spec.max_iterations = 60;
    spec.seed = 5;

    auto mean = std::make_shared<ZeroMean>();
    auto r1 = optimize(family, mean, data, spec);
    auto r2 = optimize(family, mean, data, spec);
    CHECK(r1.best_lml == r2.best_lml);
    CHECK((r1.best_log_params - r2.best_log_params).cwiseAbs().maxCoeff() == 0.0);

    OptimizationSpec more = spec;
    more.n_starts = 5;
    auto r3 = optimize(family, mean, data, more);
    CHECK(r3.best_lml >= r1.best_lml - 1e-12);
    // nested starts: the first three traces coincide
    for (int s = 0; s < 3; ++s) {
        CHECK(r3.per_start_trace[s].final_lml == r1.per_start_trace[s].final_lml);
    }
}

TEST_CASE("identification improves with data size") {
    const double wn_true = truth_system().natural_frequency();
    auto family = sdof_family();
    auto mean = std::make_shared<ZeroMean>();

    double err_small = 0.0, err_large = 0.0;
    for (auto [n, err] : {std::pair<int, double*>{100, &err_small}, {1000, &err_large}}) {
        auto data = sdof_training(n, 31);
        OptimizationSpec spec;
        spec.bounds = default_bounds(family, data);
        spec.n_starts = 6;
        spec.max_iterations = 150;
        spec.seed = 9;
        auto result = optimize(family, mean, data, spec);
        *err = std::abs(std::exp(result.best_log_params[0]) - wn_true) / wn_true;
    }
    CHECK(err_large < err_small);
}

TEST_CASE("invalid specs are rejected") {
    auto data = sdof_training(50, 41);
    auto family = sdof_family();
    OptimizationSpec spec;
    spec.bounds = default_bounds(family, data);
    spec.n_starts = 0;
    CHECK_THROWS_AS(optimize(family, std::make_shared<ZeroMean>(), data, spec),
                    std::invalid_argument);

    Bounds bad;
    bad.lower = Vec::Constant(3, 1.0);
    bad.upper = Vec::Constant(3, 0.5);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
