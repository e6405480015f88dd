#include <random>

#include "doctest.h"
#include "pigp/errors.hpp"
#include "pigp/mean.hpp"

using namespace pigp;

TEST_CASE("zero mean returns all zeros") {
    ZeroMean m;
    Mat X = Mat::Random(7, 3);
    CHECK(m.eval(X).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linear mean evaluates affinely") {
    LinearMean m((Vec(1) << 2.0).finished(), 1.0, {0});
    Mat X(1, 1);
    X << 3.0;
    CHECK(m.eval(X)[0] == doctest::Approx(7.0).epsilon(1e-14));

    // affine combination property on the covariate slice
    Mat A(3, 2);
    A << 1.0, 9.9, 4.0, -3.3, 0.4 * 1.0 + 0.6 * 4.0, 0.0;
    LinearMean m2((Vec(1) << -1.5).finished(), 0.7, {0});
    const Vec v = m2.eval(A);
    CHECK(v[2] == doctest::Approx(0.4 * v[0] + 0.6 * v[1]).epsilon(1e-12));

    LinearMean bad((Vec(1) << 1.0).finished(), 0.0, {5});
    CHECK_THROWS_AS(bad.eval(A), std::invalid_argument);
}

TEST_CASE("fit_linear_mean recovers exact and noisy coefficients") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-5.0, 5.0);

    Mat X(40, 2);
    Vec y(40);
    for (int i = 0; i < 40; ++i) {
        X(i, 0) = u(rng);
        X(i, 1) = u(rng);
        y[i] = 3.0 * X(i, 0) + 2.0;
    }
    auto m = fit_linear_mean(X, y, {0});
    auto lin = std::dynamic_pointer_cast<const LinearMean>(m);
    REQUIRE(lin);
    CHECK(lin->weights()[0] == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(lin->intercept() == doctest::Approx(2.0).epsilon(1e-10));
    CHECK((m->eval(X) - y).cwiseAbs().maxCoeff() < 1e-10);

    // constant target: zero slope, intercept = mean(y)
    Vec yc = Vec::Constant(40, 4.2);
    auto mc = fit_linear_mean(X, yc, {0});
    auto linc = std::dynamic_pointer_cast<const LinearMean>(mc);
    CHECK(std::abs(linc->weights()[0]) < 1e-10);
    CHECK(linc->intercept() == doctest::Approx(4.2).epsilon(1e-12));

    // noisy data against a normal-equations oracle
    std::normal_distribution<double> noise(0.0, 0.3);
    Vec yn(40);
    for (int i = 0; i < 40; ++i) yn[i] = -1.2 * X(i, 0) + 0.8 * X(i, 1) + 0.5 + noise(rng);
    auto mn = fit_linear_mean(X, yn, {0, 1});
    auto linn = std::dynamic_pointer_cast<const LinearMean>(mn);
    Mat A(40, 3);
    A.col(0).setOnes();
    A.col(1) = X.col(0);
    A.col(2) = X.col(1);
    Vec beta = (A.transpose() * A).ldlt().solve(A.transpose() * yn);
    CHECK(linn->intercept() == doctest::Approx(beta[0]).epsilon(1e-8));
    CHECK(linn->weights()[0] == doctest::Approx(beta[1]).epsilon(1e-8));
    CHECK(linn->weights()[1] == doctest::Approx(beta[2]).epsilon(1e-8));
}

TEST_CASE("fit_linear_mean rejects degenerate designs") {
    Mat X = Mat::Ones(10, 1);   // no covariate variation
    Vec y = Vec::Random(10);
    CHECK_THROWS_AS(fit_linear_mean(X, y, {0}), DegenerateDataError);

    Mat X1 = Mat::Random(1, 1);
    CHECK_THROWS_AS(fit_linear_mean(X1, Vec::Random(1), {0}), DegenerateDataError);

    CHECK_THROWS_AS(fit_linear_mean(Mat::Random(5, 1), Vec::Random(5), {3}),
                    std::invalid_argument);
}
