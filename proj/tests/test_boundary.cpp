#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "pigp/boundary.hpp"
#include "pigp/gp.hpp"

using namespace pigp;

namespace {

Vec pt(double x, double y) {
    Vec v(2);
    v << x, y;
    return v;
}

} // namespace

TEST_CASE("grid domain validation and hole cutting") {
    auto d = GridDomain::full(10, 10, 0.1);
    d.validate();
    CHECK(d.n_interior() == 100);

    d.cut_rectangle(3, 3, 5, 5);
    d.validate();
    CHECK(d.n_interior() == 91);

    d.cut_circle(7.5, 7.5, 1.3);
    d.validate();
    CHECK(d.n_interior() < 91);

    // splitting the domain into two components is rejected
    auto split = GridDomain::full(9, 9, 1.0);
    split.cut_rectangle(4, 0, 4, 8);
    CHECK_THROWS_AS(split.validate(), std::invalid_argument);

    GridDomain empty = GridDomain::full(3, 3, 1.0);
    empty.cut_rectangle(0, 0, 2, 2);
    CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
}

TEST_CASE("unit-square eigenvalues match the analytic Dirichlet spectrum") {
    // 64x64 interior nodes of the unit square: spacing 1/65
    const int n = 64;
    auto domain = GridDomain::full(n, n, 1.0 / (n + 1));
    auto basis = build_basis(domain, 8);

    std::vector<double> analytic;
    for (int i = 1; i <= 2; ++i) {
        for (int j = 1; j <= 2; ++j) analytic.push_back(M_PI * M_PI * (i * i + j * j));
    }
    std::sort(analytic.begin(), analytic.end());
    // modes (1,2) and (2,1) are degenerate; compare the sorted leading four
    for (int k = 0; k < 4; ++k) {
        CHECK(std::abs(basis.eigenvalues[k] - analytic[k]) / analytic[k] < 0.02);
    }
    // ascending
    for (int k = 1; k < basis.size(); ++k) {
        CHECK(basis.eigenvalues[k] >= basis.eigenvalues[k - 1]);
    }
}

TEST_CASE("basis orthonormality and boundary zeros") {
    auto domain = GridDomain::full(24, 20, 0.05);
    domain.cut_rectangle(8, 8, 12, 11);
    auto basis = build_basis(domain, 12);

    const double h2 = domain.spacing * domain.spacing;
    const Mat gram = h2 * basis.eigenfunctions.transpose() * basis.eigenfunctions;
    CHECK((gram - Mat::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-8);

    // masked cells evaluate to exactly zero
    for (int i = 0; i < basis.size(); ++i) {
        CHECK(basis.node_value(9, 9, i) == 0.0);
    }

    CHECK_THROWS_AS(build_basis(domain, 100000), std::invalid_argument);
}

TEST_CASE("constrained kernel vanishes toward hole edges and is symmetric") {
    auto domain = GridDomain::full(30, 30, 1.0 / 31.0);
    domain.cut_rectangle(12, 12, 17, 17);
    auto basis = std::make_shared<ReducedRankBasis>(build_basis(domain, 40));

    SeParams p;
    p.signal_variance = 1.0;
    p.length_scales = Vec::Constant(1, 0.15);

    const Vec a = pt(5 * domain.spacing, 5 * domain.spacing);
    const Vec b = pt(22 * domain.spacing, 8 * domain.spacing);
    CHECK(eval_constrained(*basis, p, a, b) == eval_constrained(*basis, p, b, a));

    // approach the hole edge: covariance with a fixed interior point decays
    const double k_far = std::abs(eval_constrained(*basis, p, a, pt(9 * domain.spacing, 9 * domain.spacing)));
    const double k_near = std::abs(eval_constrained(*basis, p, a, pt(11.6 * domain.spacing, 11.6 * domain.spacing)));
    CHECK(k_near < k_far);

    // inside the masked hole evaluation is rejected
    CHECK_THROWS_AS(eval_constrained(*basis, p, a, pt(14 * domain.spacing, 14 * domain.spacing)),
                    std::invalid_argument);
}

TEST_CASE("constrained kernel converges to the free-space SE kernel") {
    // large square relative to the length scale; centre points far from edges
    const int n = 64;
    const double h = 10.0 / (n + 1);
    auto domain = GridDomain::full(n, n, h);
    auto basis = std::make_shared<ReducedRankBasis>(build_basis(domain, 256));

    SeParams p;
    p.signal_variance = 1.3;
    p.length_scales = Vec::Constant(1, 1.0);

    const Vec a = pt(4.3, 4.7);
    const Vec b = pt(5.1, 4.1);
    const double constrained = eval_constrained(*basis, p, a, b);

    SeParams iso;
    iso.signal_variance = p.signal_variance;
    iso.length_scales = Vec::Constant(2, 1.0);
    const double free_space = eval_se(a, b, false, iso);
    CHECK(std::abs(constrained - free_space) / free_space < 0.05);
}

TEST_CASE("wrapped kernel: PSD, rank, and weight-space duality oracle") {
    auto domain = GridDomain::full(20, 20, 1.0 / 21.0);
    domain.cut_circle(10.0, 10.0, 2.5);
    const int M = 24;
    auto basis = std::make_shared<ReducedRankBasis>(build_basis(domain, M));

    SeParams p;
    p.signal_variance = 0.8;
    p.length_scales = Vec::Constant(1, 0.2);
    p.noise_variance = 0.01;

    auto core = std::make_shared<ConstrainedSeKernel>(basis, p.signal_variance,
                                                      p.length_scales[0]);
    auto kernel = wrap_as_kernel(basis, p);

    // training points scattered over the interior
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(0.05, 0.85);
    std::vector<Vec> pts;
    while (pts.size() < 40) {
        Vec c = pt(u(rng), u(rng));
        try {
            basis->evaluate_at(c[0], c[1]);
            pts.push_back(c);
        } catch (const std::invalid_argument&) {
        }
    }
    Mat X(40, 2);
    for (int i = 0; i < 40; ++i) X.row(i) = pts[i].transpose();

    const Mat G = core->gram(X, X, false);
    Eigen::SelfAdjointEigenSolver<Mat> es(G);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);

    // rank of the noise-free Gram is at most M
    Eigen::FullPivLU<Mat> lu(G);
    lu.setThreshold(1e-10);
    CHECK(lu.rank() <= M);

    // duality: GP posterior equals Bayesian linear regression in the
    // spectrally weighted basis
    std::normal_distribution<double> gnoise(0.0, 0.1);
    TrainingSet data;
    data.X = X;
    data.y.resize(40);
    for (int i = 0; i < 40; ++i) {
        data.y[i] = std::sin(6.0 * X(i, 0)) * std::cos(5.0 * X(i, 1)) + gnoise(rng);
    }
    auto model = fit(kernel, std::make_shared<ZeroMean>(), data);
    Mat Xs(3, 2);
    Xs << 0.3, 0.4, 0.62, 0.2, 0.45, 0.71;
    auto pred = model.predict(Xs);

    // weight-space: features psi = phi * sqrt(S), prior w ~ N(0, I)
    const Vec s = core->spectral_weights();
    const Vec sqrt_s = s.cwiseSqrt();
    const Mat psi = core->features(X) * sqrt_s.asDiagonal();
    const Mat psi_s = core->features(Xs) * sqrt_s.asDiagonal();
    const Mat A = psi.transpose() * psi / p.noise_variance + Mat::Identity(M, M);
    const Vec w_mean = A.ldlt().solve(psi.transpose() * data.y) / p.noise_variance;
    const Vec mu = psi_s * w_mean;
    const Mat post_cov = psi_s * A.ldlt().solve(psi_s.transpose());

    CHECK((pred.mean - mu).cwiseAbs().maxCoeff() < 1e-6);
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(pred.variance[i] - post_cov(i, i)) < 1e-6);
    }
}
