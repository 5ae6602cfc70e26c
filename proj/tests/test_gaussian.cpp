#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "atg/gaussian.hpp"
#include "support/oracles.hpp"

using atg::fit_gaussian;
using atg::fit_gaussian_circular;
using atg::GaussianDist;
using atg::spectral_norm;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

}  // namespace

TEST_CASE("spectral norm of a diagonal matrix is its largest entry") {
    Eigen::MatrixXd m = Eigen::Vector3d(4.0, 1.0, 0.25).asDiagonal();
    CHECK(spectral_norm(m) == Catch::Approx(4.0));
}

TEST_CASE("spectral norm of the zero matrix is zero") {
    CHECK(spectral_norm(Eigen::MatrixXd::Zero(3, 3)) == 0.0);
}

TEST_CASE("spectral norm of [[2,1],[1,2]] is 3") {
    Eigen::MatrixXd m(2, 2);
    m << 2, 1, 1, 2;
    CHECK(spectral_norm(m) == Catch::Approx(3.0));
}

TEST_CASE("spectral norm rejects asymmetric input") {
    Eigen::MatrixXd m(2, 2);
    m << 1, 0.5, 0.0, 1;
    CHECK_THROWS_AS(spectral_norm(m), std::invalid_argument);
}

TEST_CASE("spectral norm matches power iteration on random PSD matrices") {
    std::mt19937_64 rng(42);
    for (int i = 0; i < 1000; ++i) {
        Eigen::MatrixXd m = oracle::random_psd(3, rng);
        CHECK(spectral_norm(m) == Catch::Approx(oracle::power_iteration_norm(m)).margin(1e-9));
    }
}

TEST_CASE("two-point fit gives the textbook unbiased covariance") {
    std::vector<Eigen::VectorXd> samples{vec({1, 1}), vec({3, 3})};
    GaussianDist d = fit_gaussian(samples);
    CHECK(d.mean(0) == Catch::Approx(2.0));
    CHECK(d.mean(1) == Catch::Approx(2.0));
    CHECK(d.cov(0, 0) == Catch::Approx(2.0));
    CHECK(d.cov(0, 1) == Catch::Approx(2.0));
    CHECK(d.cov(1, 0) == Catch::Approx(2.0));
    CHECK(d.cov(1, 1) == Catch::Approx(2.0));
    CHECK(d.n_samples == 2);
}

TEST_CASE("single sample fits a thin Gaussian at the sample") {
    std::vector<Eigen::VectorXd> samples{vec({5})};
    GaussianDist d = fit_gaussian(samples, 1e-6);
    CHECK(d.mean(0) == 5.0);
    CHECK(d.cov(0, 0) == 1e-6);
}

TEST_CASE("fit rejects empty and mixed-dimension sample sets") {
    std::vector<Eigen::VectorXd> empty;
    CHECK_THROWS_AS(fit_gaussian(empty), std::invalid_argument);
    std::vector<Eigen::VectorXd> mixed{vec({1}), vec({1, 2})};
    CHECK_THROWS_AS(fit_gaussian(mixed), std::invalid_argument);
}

TEST_CASE("fitted variance of many standard normal draws is near 1") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Eigen::VectorXd> samples;
    for (int i = 0; i < 1000; ++i) samples.push_back(vec({g(rng)}));
    GaussianDist d = fit_gaussian(samples);
    CHECK(std::abs(d.cov(0, 0) - 1.0) < 0.15);
}

TEST_CASE("fit agrees with a direct two-pass recomputation") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 2.0);
    std::vector<Eigen::VectorXd> samples;
    for (int i = 0; i < 40; ++i) {
        samples.push_back(vec({g(rng), g(rng), g(rng)}));
        if (samples.size() < 2) continue;
        GaussianDist d = fit_gaussian(samples);
        auto [mean, cov] = oracle::direct_mean_cov(samples);
        CHECK((d.mean - mean).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((d.cov - cov).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("circular fit matches the linear fit away from the cut") {
    std::vector<Eigen::VectorXd> samples{vec({0.7}), vec({0.8}), vec({0.9})};
    GaussianDist d = fit_gaussian_circular(samples);
    CHECK(d.mean(0) == Catch::Approx(0.8));
    CHECK(d.cov(0, 0) == Catch::Approx(0.01));
}

TEST_CASE("circular fit handles samples straddling the +-pi cut") {
    std::vector<Eigen::VectorXd> samples{vec({atg::kPi - 0.1}), vec({-atg::kPi + 0.1})};
    GaussianDist d = fit_gaussian_circular(samples);
    CHECK(atg::circular_abs_diff(d.mean(0), atg::kPi) < 1e-12);
    // residuals are +-0.1 around the mean direction
    CHECK(d.cov(0, 0) == Catch::Approx(0.02));
}

TEST_CASE("psd regularization restores a slightly indefinite matrix") {
    Eigen::MatrixXd m(2, 2);
    m << 1.0, 1.0 + 1e-12, 1.0 + 1e-12, 1.0;  // smallest eigenvalue just below zero
    Eigen::MatrixXd fixed = atg::regularize_psd(m, 1e-6);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fixed);
    CHECK(es.eigenvalues().minCoeff() >= 0.0);
}

TEST_CASE("sampling follows the fitted distribution") {
    GaussianDist d;
    d.mean = vec({1.0, -2.0});
    d.cov = Eigen::MatrixXd::Identity(2, 2) * 0.25;
    d.n_samples = 2;
    std::mt19937_64 rng(3);
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    for (int i = 0; i < 4000; ++i) acc += atg::sample_gaussian(d, rng).head<2>();
    acc /= 4000.0;
    CHECK(std::abs(acc(0) - 1.0) < 0.05);
    CHECK(std::abs(acc(1) + 2.0) < 0.05);
}
