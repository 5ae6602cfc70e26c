// Independent reference implementations used only by tests. These must not
// share code paths with the library routines they check.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace oracle {

/// Largest eigenvalue of a symmetric PSD matrix by plain power iteration.
inline double power_iteration_norm(const Eigen::MatrixXd& m, int iters = 20000) {
    if (m.rows() == 0) return 0.0;
    Eigen::VectorXd v = Eigen::VectorXd::Ones(m.rows());
    v += 1e-3 * Eigen::VectorXd::LinSpaced(m.rows(), 1.0, 2.0);  // break symmetry
    v.normalize();
    double lambda = 0.0;
    for (int i = 0; i < iters; ++i) {
        Eigen::VectorXd w = m * v;
        double n = w.norm();
        if (n == 0.0) return 0.0;
        w /= n;
        double next = w.dot(m * w);
        if (std::abs(next - lambda) < 1e-15 && i > 50) return next;
        lambda = next;
        v = w;
    }
    return lambda;
}

/// Two-pass mean and unbiased covariance, written independently of the
/// library's streaming refit path.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> direct_mean_cov(
    const std::vector<Eigen::VectorXd>& samples) {
    if (samples.empty()) throw std::invalid_argument("direct_mean_cov: empty");
    const auto d = samples.front().size();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (const auto& s : samples) mean += s;
    mean /= double(samples.size());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    if (samples.size() > 1) {
        for (const auto& s : samples) cov += (s - mean) * (s - mean).transpose();
        cov /= double(samples.size() - 1);
    }
    return {mean, cov};
}

namespace detail {

/// Continued-fraction evaluation of the regularized incomplete beta
/// function, Numerical Recipes style.
inline double betacf(double a, double b, double x) {
    const double eps = 3e-16;
    const double fpmin = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

inline double ibeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
        b * std::log(1.0 - x);
    const double front = std::exp(ln);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * betacf(a, b, x) / a;
    }
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace detail

/// Two-sided p-value of a t statistic with `dof` degrees of freedom via the
/// incomplete beta identity.
inline double t_two_sided_p(double t, double dof) {
    return detail::ibeta(dof / 2.0, 0.5, dof / (dof + t * t));
}

/// Welch statistic and Satterthwaite dof computed from scratch.
inline double welch_p_reference(std::span<const double> xs, std::span<const double> ys) {
    auto stats = [](std::span<const double> v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= double(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        return std::pair{m, ss / double(v.size() - 1)};
    };
    auto [m1, v1] = stats(xs);
    auto [m2, v2] = stats(ys);
    double a = v1 / double(xs.size());
    double b = v2 / double(ys.size());
    if (a + b == 0.0) return m1 == m2 ? 1.0 : 0.0;
    double t = (m1 - m2) / std::sqrt(a + b);
    double dof = (a + b) * (a + b) / (a * a / (xs.size() - 1.0) + b * b / (ys.size() - 1.0));
    return t_two_sided_p(t, dof);
}

/// One-sample Kolmogorov-Smirnov statistic against U[0, hi).
inline double ks_uniform_stat(std::vector<double> samples, double hi) {
    std::sort(samples.begin(), samples.end());
    const double n = double(samples.size());
    double d = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
        const double cdf = samples[i] / hi;
        d = std::max(d, std::abs(cdf - double(i) / n));
        d = std::max(d, std::abs(cdf - double(i + 1) / n));
    }
    return d;
}

/// Random symmetric PSD matrix (B^T B form).
inline Eigen::MatrixXd random_psd(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd b(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) b(r, c) = g(rng);
    return b.transpose() * b;
}

}  // namespace oracle
