#pragma once

#include <Eigen/Dense>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "atg/angles.hpp"

namespace atg {

/// Covariance floor used when a distribution is fitted from a single sample,
/// and the ridge added whenever rounding pushes an eigenvalue below zero.
inline constexpr double kDefaultThinVar = 1e-6;

/// Multivariate normal over action parameters, together with the number of
/// samples it was fitted from.
struct GaussianDist {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    int n_samples = 0;

    int dim() const { return static_cast<int>(mean.size()); }
};

inline bool is_symmetric(const Eigen::MatrixXd& m, double tol = 1e-9) {
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

/// Largest eigenvalue of a symmetric PSD matrix (its 2-norm). A 0x0 matrix
/// has norm 0. Asymmetry beyond tolerance is a hard error.
inline double spectral_norm(const Eigen::MatrixXd& cov, double sym_tol = 1e-9) {
    if (cov.rows() != cov.cols()) {
        throw std::invalid_argument("spectral_norm: matrix is not square");
    }
    if (cov.rows() == 0) return 0.0;
    if (!is_symmetric(cov, sym_tol)) {
        throw std::invalid_argument("spectral_norm: matrix is not symmetric");
    }
    if (cov.rows() == 1) return std::max(0.0, cov(0, 0));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
    return std::max(0.0, es.eigenvalues().maxCoeff());
}

/// Symmetrizes and, if rounding produced a negative eigenvalue, adds a
/// thin_var ridge so sampling and norms stay well-defined.
inline Eigen::MatrixXd regularize_psd(Eigen::MatrixXd cov, double thin_var = kDefaultThinVar) {
    if (cov.rows() == 0) return cov;
    cov = ((cov + cov.transpose()) / 2.0).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < 0.0) {
        cov += thin_var * Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
    }
    return cov;
}

/// Fits a Gaussian to the samples: sample mean plus unbiased covariance for
/// n >= 2, thin_var * I for a single sample.
inline GaussianDist fit_gaussian(std::span<const Eigen::VectorXd> samples,
                                 double thin_var = kDefaultThinVar) {
    if (samples.empty()) {
        throw std::invalid_argument("fit_gaussian: empty sample set");
    }
    const auto dim = samples.front().size();
    for (const auto& s : samples) {
        if (s.size() != dim) {
            throw std::invalid_argument("fit_gaussian: mixed sample dimensions");
        }
    }
    GaussianDist out;
    out.n_samples = static_cast<int>(samples.size());
    if (dim == 0) {
        out.mean = Eigen::VectorXd(0);
        out.cov = Eigen::MatrixXd(0, 0);
        return out;
    }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (const auto& s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    out.mean = mean;
    if (samples.size() == 1) {
        out.cov = thin_var * Eigen::MatrixXd::Identity(dim, dim);
        return out;
    }
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& s : samples) {
        Eigen::VectorXd d = s - mean;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(samples.size() - 1);
    out.cov = regularize_psd(std::move(cov), thin_var);
    return out;
}

/// Fit for 1-D angular parameters: mean direction via circular mean, spread
/// as the unbiased variance of the wrapped residuals. Coincides with the
/// linear fit whenever the samples do not straddle the +-pi cut.
inline GaussianDist fit_gaussian_circular(std::span<const Eigen::VectorXd> samples,
                                          double thin_var = kDefaultThinVar) {
    if (samples.empty()) {
        throw std::invalid_argument("fit_gaussian_circular: empty sample set");
    }
    std::vector<double> angles;
    angles.reserve(samples.size());
    for (const auto& s : samples) {
        if (s.size() != 1) {
            throw std::invalid_argument("fit_gaussian_circular: samples must be 1-D angles");
        }
        angles.push_back(s(0));
    }
    GaussianDist out;
    out.n_samples = static_cast<int>(samples.size());
    out.mean = Eigen::VectorXd(1);
    out.cov = Eigen::MatrixXd(1, 1);
    out.mean(0) = circular_mean(angles);
    if (angles.size() == 1) {
        out.cov(0, 0) = thin_var;
        return out;
    }
    double ss = 0.0;
    for (double a : angles) {
        double d = wrap_pi(a - out.mean(0));
        ss += d * d;
    }
    out.cov(0, 0) = ss / static_cast<double>(angles.size() - 1);
    return out;
}

/// Draws from N(mean, cov) using the symmetric eigendecomposition square
/// root, which tolerates singular covariances.
inline Eigen::VectorXd sample_gaussian(const GaussianDist& dist, std::mt19937_64& rng) {
    const int d = dist.dim();
    if (d == 0) return Eigen::VectorXd(0);
    std::normal_distribution<double> stdnorm(0.0, 1.0);
    Eigen::VectorXd z(d);
    for (int i = 0; i < d; ++i) z(i) = stdnorm(rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dist.cov);
    Eigen::VectorXd scale = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return dist.mean + es.eigenvectors() * scale.asDiagonal() * z;
}

}  // namespace atg
