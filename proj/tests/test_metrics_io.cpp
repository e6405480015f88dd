#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "pigp/errors.hpp"
#include "pigp/io.hpp"
#include "pigp/metrics.hpp"

using namespace pigp;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove(p);
    return p;
}

} // namespace

TEST_CASE("nmse definition") {
    Vec y(4), same(4);
    y << 1.0, 2.0, 3.0, 4.0;
    CHECK(metric_nmse(y, y) == 0.0);

    const Vec mean_pred = Vec::Constant(4, y.mean());
    CHECK(metric_nmse(y, mean_pred) == doctest::Approx(1.0).epsilon(1e-14));

    std::mt19937 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    Vec yt(20), yp(20);
    for (int i = 0; i < 20; ++i) {
        yt[i] = g(rng);
        yp[i] = g(rng);
    }
    const double var = (yt.array() - yt.mean()).square().mean();
    const double direct = (yt - yp).squaredNorm() / (20.0 * var);
    CHECK(metric_nmse(yt, yp) == doctest::Approx(direct).epsilon(1e-12));

    CHECK_THROWS_AS(metric_nmse(Vec::Ones(5), Vec::Ones(5)), DegenerateDataError);
    CHECK_THROWS_AS(metric_nmse(Vec::Ones(3), Vec::Ones(4)), std::invalid_argument);
}

TEST_CASE("log loss definition") {
    Vec zero = Vec::Zero(1), one = Vec::Ones(1);
    CHECK(metric_log_loss(zero, zero, one) ==
          doctest::Approx(0.5 * std::log(2.0 * M_PI)).epsilon(1e-12));

    // doubling variances at perfect means adds log(2)/2
    std::mt19937 rng(4);
    std::normal_distribution<double> g(0.0, 1.0);
    Vec y(10), v(10);
    for (int i = 0; i < 10; ++i) {
        y[i] = g(rng);
        v[i] = 0.5 + std::abs(g(rng));
    }
    const double base = metric_log_loss(y, y, v);
    CHECK(metric_log_loss(y, y, 2.0 * v) ==
          doctest::Approx(base + 0.5 * std::log(2.0)).epsilon(1e-12));

    // direct formula on a random instance
    Vec mu(10);
    for (int i = 0; i < 10; ++i) mu[i] = g(rng);
    double direct = 0.0;
    for (int i = 0; i < 10; ++i) {
        direct += 0.5 * std::log(2.0 * M_PI * v[i]) +
                  (y[i] - mu[i]) * (y[i] - mu[i]) / (2.0 * v[i]);
    }
    CHECK(metric_log_loss(y, mu, v) == doctest::Approx(direct / 10.0).epsilon(1e-12));

    Vec bad_var = v;
    bad_var[3] = 0.0;
    CHECK_THROWS_AS(metric_log_loss(y, mu, bad_var), std::invalid_argument);
}

TEST_CASE("training set CSV round-trips bitwise") {
    std::mt19937 rng(9);
    std::normal_distribution<double> g(0.0, 100.0);
    TrainingSet data;
    data.X.resize(12, 3);
    data.y.resize(12);
    for (int i = 0; i < 12; ++i) {
        for (int j = 0; j < 3; ++j) data.X(i, j) = g(rng);
        data.y[i] = g(rng);
    }
    data.X(0, 0) = M_PI;   // 17 significant digits round-trip pi exactly

    const auto path = temp_file("pigp_roundtrip.csv");
    write_training_set(path.string(), data);
    auto back = read_training_set(path.string());
    CHECK(back.X.rows() == 12);
    CHECK((back.X - data.X).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.y - data.y).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.X(0, 0) == M_PI);
    std::filesystem::remove(path);
}

TEST_CASE("malformed CSV errors carry line information") {
    const auto path = temp_file("pigp_bad.csv");
    atomic_write(path.string(), "input_0,value\n1.0,2.0\n");
    CHECK_THROWS_WITH_AS(read_training_set(path.string()),
                         doctest::Contains("target"), ParseError);

    atomic_write(path.string(), "input_0,target\n1.0\n");
    CHECK_THROWS_WITH_AS(read_training_set(path.string()),
                         doctest::Contains("line 2"), ParseError);

    atomic_write(path.string(), "input_0,target\n1.0,abc\n");
    CHECK_THROWS_WITH_AS(read_training_set(path.string()),
                         doctest::Contains("line 2"), ParseError);
    std::filesystem::remove(path);
}

TEST_CASE("report round-trip and stable ordering") {
    Report r;
    r.set("experiment", std::string("demo"));
    r.set("nmse_model", 0.012345);
    r.set("seed", 42LL);
    const std::string text = r.to_string();
    CHECK(text.find("experiment: demo\n") == 0);   // insertion order preserved

    const auto path = temp_file("pigp_report.txt");
    r.write(path.string());
    auto back = Report::read(path.string());
    CHECK(back.get("seed") == "42");
    CHECK(back.get("nmse_model") == format_double(0.012345));
    std::filesystem::remove(path);
}

TEST_CASE("mask grid file round-trip") {
    auto domain = GridDomain::full(8, 5, 0.25);
    domain.cut_rectangle(2, 1, 4, 2);
    domain.validate();

    const auto path = temp_file("pigp_mask.txt");
    write_mask_grid(path.string(), domain);
    auto back = read_mask_grid(path.string(), 0.25);
    CHECK(back.nx == 8);
    CHECK(back.ny == 5);
    CHECK(back.mask == domain.mask);

    atomic_write(path.string(), "..x\n...\n");
    CHECK_THROWS_AS(read_mask_grid(path.string(), 1.0), ParseError);
    std::filesystem::remove(path);
}

TEST_CASE("format_double round-trips doubles through text") {
    for (double v : {M_PI, 1.0 / 3.0, 1e-300, 6.02214076e23, -0.1}) {
        CHECK(std::stod(format_double(v)) == v);
    }
}
