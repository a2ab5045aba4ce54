#pragma once

// Independent reference computations shared by the test suites.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "anderson/operator.hpp"

namespace oracle {

/// Dense symmetric-definite solve of S u = lambda diag(d) u: all eigenvalues, ascending.
inline Eigen::VectorXd dense_eigenvalues(const anderson::DiscreteOperator& op) {
    const Eigen::MatrixXd S(op.stiffness);
    const Eigen::VectorXd inv_sqrt = op.mass.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd B = inv_sqrt.asDiagonal() * S * inv_sqrt.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
    return es.eigenvalues();
}

/// Dense eigenvectors as node vectors with ||u||_inf = 1, largest entry positive.
inline std::vector<Eigen::VectorXd> dense_modes(const anderson::DiscreteOperator& op, int k) {
    const Eigen::MatrixXd S(op.stiffness);
    const Eigen::VectorXd inv_sqrt = op.mass.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd B = inv_sqrt.asDiagonal() * S * inv_sqrt.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
    std::vector<Eigen::VectorXd> out;
    for (int j = 0; j < k; ++j) {
        Eigen::VectorXd a = inv_sqrt.cwiseProduct(es.eigenvectors().col(j));
        Eigen::Index at = 0;
        a.cwiseAbs().maxCoeff(&at);
        a /= a[at];
        out.push_back(op.to_nodes(a));
    }
    return out;
}

/// Tridiagonal Thomas solve of -w'' + c(x) w = 1 on a uniform grid with
/// w = 0 at both ends; c given at interior nodes.
inline std::vector<double> dirichlet_poisson_1d(const std::vector<double>& c, double h) {
    const std::size_t n = c.size();
    std::vector<double> a(n, -1.0 / (h * h)), b(n), r(n, 1.0), w(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = 2.0 / (h * h) + c[i];
    std::vector<double> cp(n), dp(n);
    cp[0] = a[0] / b[0];
    dp[0] = r[0] / b[0];
    for (std::size_t i = 1; i < n; ++i) {
        const double m = b[i] - a[i] * cp[i - 1];
        cp[i] = a[i] / m;
        dp[i] = (r[i] - a[i] * dp[i - 1]) / m;
    }
    w[n - 1] = dp[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) w[i] = dp[i] - cp[i] * w[i + 1];
    return w;
}

}  // namespace oracle
